#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "planchat/dates.hpp"

namespace planchat::aps {

struct Plant {
    std::string id;
    std::string name;
    std::map<Date, double> capacity;               // hours per day
    std::map<std::string, double> proc_time;       // product id -> hours per unit
    std::map<std::string, double> unit_cost;       // product id -> cost per unit

    bool can_make(const std::string& product_id) const { return proc_time.count(product_id) > 0; }
    bool operator==(const Plant&) const = default;
};

struct Product {
    std::string id;
    std::string name;
    std::map<std::string, double> bom;  // material id -> kg per unit
    bool operator==(const Product&) const = default;
};

struct Material {
    std::string id;
    std::string name;
    double initial_inventory = 0.0;  // kg
    std::map<Date, double> receipts;  // kg arriving on each date
    bool operator==(const Material&) const = default;
};

struct Order {
    std::string id;
    std::string product_id;
    double quantity = 0.0;
    Date due_date;
    double weight = 1.0;
    bool operator==(const Order&) const = default;
};

/// Immutable snapshot of the planning data. Modifications produce a new instance.
struct PlanningInstance {
    std::string id;
    std::vector<Date> horizon;
    std::vector<Plant> plants;
    std::vector<Product> products;
    std::vector<Material> materials;
    std::vector<Order> orders;

    const Plant* find_plant(const std::string& id) const;
    const Product* find_product(const std::string& id) const;
    const Material* find_material(const std::string& id) const;
    const Order* find_order(const std::string& id) const;

    /// Index of a date within the horizon, or nullopt when outside.
    std::optional<std::size_t> day_index(Date d) const;

    bool operator==(const PlanningInstance&) const = default;
};

/// A single violated invariant. `invariant` names the field, e.g. "Order.quantity".
struct Diagnostic {
    std::string invariant;
    std::string id;
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

void to_json(nlohmann::json& j, const Diagnostic& d);

enum class DataErrorKind { MissingFile, MalformedRow, DanglingReference, NonContiguousHorizon, InvalidData };

class DataError : public std::runtime_error {
public:
    DataError(DataErrorKind kind, std::string message, std::vector<Diagnostic> diagnostics = {});
    DataErrorKind kind() const { return kind_; }
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    DataErrorKind kind_;
    std::vector<Diagnostic> diagnostics_;
};

/// Reads the eight-file CSV dataset in `dataset_dir`. The instance id defaults to
/// the directory name. Throws DataError; accepted instances always validate clean.
PlanningInstance parse_instance(const std::filesystem::path& dataset_dir, std::string id = {});

/// Writes `instance` as a dataset directory readable by parse_instance.
void write_instance(const PlanningInstance& instance, const std::filesystem::path& dataset_dir);

/// Empty iff every invariant holds.
std::vector<Diagnostic> validate_instance(const PlanningInstance& instance);

enum class EntityKind { Plant, Product, Material, Order };

std::string to_string(EntityKind kind);
std::optional<EntityKind> entity_kind_from_string(const std::string& s);

struct EntityRef {
    EntityKind kind;
    std::string id;
    bool operator==(const EntityRef&) const = default;
};

struct ResolveResult {
    enum class Status { Match, NoMatch, Ambiguous };
    Status status = Status::NoMatch;
    std::optional<EntityRef> match;
    std::vector<EntityRef> candidates;  // substring hits for Ambiguous

    bool matched() const { return status == Status::Match; }
};

/// Grounds a free-text mention to an entity. Case-insensitive exact id/name match
/// wins, then a unique substring match; two or more substring hits are Ambiguous.
/// `kind` restricts the search when given.
ResolveResult resolve_entity(const std::string& mention, const PlanningInstance& instance,
                             std::optional<EntityKind> kind = std::nullopt);

void to_json(nlohmann::json& j, const PlanningInstance& instance);
void from_json(const nlohmann::json& j, PlanningInstance& instance);

}  // namespace planchat::aps
