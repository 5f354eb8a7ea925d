#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "planchat/aps_data.hpp"
#include "planchat/lp.hpp"
#include "planchat/scenario.hpp"

namespace planchat::opt {

/// What an LP column stands for. Indices refer to the instance vectors.
struct Column {
    enum class Kind { Production, Allocation, Shortage };
    Kind kind;
    std::size_t plant = 0;
    std::size_t product = 0;
    std::size_t order = 0;
    std::size_t day = 0;
};

/// The production-planning LP together with the instance it was built from
/// (after what-if changes) and the column map needed to read a solution back.
struct PlanningLP {
    aps::PlanningInstance instance;
    std::vector<ScenarioSpec> scenarios;
    LPProblem lp;
    std::vector<Column> columns;
    double shortage_penalty = 0.0;
};

/// Builds the planning LP.
///
/// Variables are production x[p,i,t] for every plant/product pair the plant can
/// make, allocation a[o,t] of finished units to orders, and shortage s[o]. Rows:
/// daily plant capacity in hours, cumulative material availability, cumulative
/// allocation bounded by cumulative production per product, and order demand
/// (allocation + shortage = quantity). The objective charges weighted days late
/// per allocated unit, a shortage penalty of 1e4 * max order weight per unit, and
/// production cost.
///
/// What-if changes are applied to the data first; restrictions then delete
/// columns (RestrictToPlants, ForbidPlant, HardDeadline) or add a
/// Restriction-tagged row (MaxProduction). Rows left without coefficients are
/// omitted.
PlanningLP build_lp(const aps::PlanningInstance& instance, const std::vector<ScenarioSpec>& mods = {});

struct ObjectiveBreakdown {
    double tardiness_cost = 0.0;
    double shortage_cost = 0.0;
    double production_cost = 0.0;
    bool operator==(const ObjectiveBreakdown&) const = default;
};

using ProductionKey = std::tuple<std::string, std::string, Date>;  // plant, product, date
using AllocationKey = std::pair<std::string, Date>;                 // order, date

struct Plan {
    std::string id;
    std::string instance_id;
    std::map<ProductionKey, double> production;
    std::map<AllocationKey, double> allocation;
    std::map<std::string, double> tardiness;       // weighted unit-days per order
    std::map<std::string, double> shortage;        // units per order
    std::map<std::string, double> product_totals;  // units produced per product
    double objective = 0.0;
    ObjectiveBreakdown breakdown;
    std::vector<ScenarioSpec> provenance;  // empty for the baseline

    bool is_baseline() const { return provenance.empty(); }
    bool operator==(const Plan&) const = default;
};

class NotOptimal : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Reads a solved LP back into named cells. Throws NotOptimal unless the solve
/// status is Optimal.
Plan extract_plan(const PlanningLP& model, const LPSolution& solution, std::string plan_id = {});

/// Column values of `plan` laid out in `model`'s column order.
std::vector<double> column_values(const PlanningLP& model, const Plan& plan);

/// Writes "plant_id,product_id,date,units" rows.
std::string plan_to_csv(const Plan& plan);

void to_json(nlohmann::json& j, const Plan& plan);
void from_json(const nlohmann::json& j, Plan& plan);

}  // namespace planchat::opt
