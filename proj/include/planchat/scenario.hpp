#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "planchat/aps_data.hpp"

namespace planchat::opt {

// Data changes (what-if).
struct AddReceipt {
    std::string material;
    Date date;
    double kg = 0.0;
    bool operator==(const AddReceipt&) const = default;
};
struct SetCapacity {
    std::string plant;
    Date date;
    double hours = 0.0;
    bool operator==(const SetCapacity&) const = default;
};
struct ChangeOrderQty {
    std::string order;
    double units = 0.0;
    bool operator==(const ChangeOrderQty&) const = default;
};
struct ChangeDueDate {
    std::string order;
    Date date;
    bool operator==(const ChangeDueDate&) const = default;
};

// Model restrictions (why-not).
struct RestrictToPlants {
    std::vector<std::string> plants;
    bool operator==(const RestrictToPlants&) const = default;
};
struct ForbidPlant {
    std::string plant;
    bool operator==(const ForbidPlant&) const = default;
};
struct HardDeadline {
    std::string order;
    bool operator==(const HardDeadline&) const = default;
};
struct MaxProduction {
    std::string product;
    double units = 0.0;
    bool operator==(const MaxProduction&) const = default;
};

using DataChange = std::variant<AddReceipt, SetCapacity, ChangeOrderQty, ChangeDueDate>;
using Restriction = std::variant<RestrictToPlants, ForbidPlant, HardDeadline, MaxProduction>;

/// A what-if data change or a why-not model restriction.
struct ScenarioSpec {
    std::variant<DataChange, Restriction> change;

    bool is_what_if() const { return change.index() == 0; }
    bool operator==(const ScenarioSpec&) const = default;
};

/// Short human-readable summary, e.g. "add 100 kg of natural_rubber on 2024-04-17".
std::string describe(const ScenarioSpec& spec);

/// Identifier-safe slug used to name scenario models, e.g. "vancouver_only".
std::string slug(const ScenarioSpec& spec);

enum class ScenarioErrorKind { UnknownEntity, DateOutsideHorizon, NegativeQuantity, EmptyHorizon };

class ScenarioError : public std::runtime_error {
public:
    ScenarioError(ScenarioErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}
    ScenarioErrorKind kind() const { return kind_; }

private:
    ScenarioErrorKind kind_;
};

/// Returns a copy of `instance` with `change` applied; the input is untouched.
aps::PlanningInstance apply_what_if(const aps::PlanningInstance& instance, const DataChange& change);

/// Throws ScenarioError if `spec` references entities absent from `instance`.
void check_references(const aps::PlanningInstance& instance, const ScenarioSpec& spec);

void to_json(nlohmann::json& j, const ScenarioSpec& spec);
void from_json(const nlohmann::json& j, ScenarioSpec& spec);

}  // namespace planchat::opt
