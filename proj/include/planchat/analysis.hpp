#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "planchat/planning.hpp"

namespace planchat::opt {

enum class DelayReason { NotTardy, MaterialShortage, CapacityShortage, MaterialAndCapacityShortage, CompetingOrders };

std::string to_string(DelayReason reason);

struct DelayExplanation {
    std::string order_id;
    double tardy_units = 0.0;  // units delivered after the due date plus units never delivered
    DelayReason reason = DelayReason::NotTardy;
    std::vector<std::string> materials;  // cited for material-driven delays
    std::vector<std::string> plants;     // cited for capacity-driven delays
    // Optimal objectives of the two ablation re-solves; 0 when the order is on time.
    double objective_without_material_rows = 0.0;
    double objective_without_capacity_rows = 0.0;

    /// One-sentence rendering for tool output.
    std::string summary() const;
};

class UnknownOrder : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Units of `order_id` delivered late or not at all in `plan`.
double tardy_units(const aps::PlanningInstance& instance, const Plan& plan, const std::string& order_id);

/// Finds why an order is late by re-solving `model` twice, once with every
/// material row removed and once with every capacity row removed, and checking
/// in which ablation the order is still late.
DelayExplanation explain_delay(const PlanningLP& model, const Plan& plan, const std::string& order_id);

struct ChangedCell {
    std::string plant;
    std::string product;
    Date date;
    double old_units = 0.0;
    double new_units = 0.0;
};

struct PlanDiff {
    double objective_delta = 0.0;
    std::map<std::string, double> per_product_total_delta;
    std::map<std::string, double> per_order_tardiness_delta;
    std::vector<ChangedCell> changed_cells;

    double total_units_delta() const;
    double total_tardiness_delta() const;
};

class IncompatiblePlans : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Deltas are b - a. Cells absent from one plan count as zero.
PlanDiff diff_plans(const Plan& a, const Plan& b);

}  // namespace planchat::opt
