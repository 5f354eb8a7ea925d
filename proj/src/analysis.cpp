#include "planchat/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>

#include "planchat/text.hpp"

namespace planchat::opt {

namespace {

constexpr double kTol = 1e-6;

LPProblem without_rows(const LPProblem& lp, ConstraintKind kind) {
    LPProblem out;
    out.variable_names = lp.variable_names;
    out.objective = lp.objective;
    for (std::size_t i = 0; i < lp.num_rows(); ++i) {
        if (lp.tags[i].kind == kind) continue;
        out.rows.push_back(lp.rows[i]);
        out.senses.push_back(lp.senses[i]);
        out.rhs.push_back(lp.rhs[i]);
        out.tags.push_back(lp.tags[i]);
    }
    return out;
}

struct Ablation {
    double objective = 0.0;
    double tardy = 0.0;
};

Ablation ablate(const PlanningLP& model, ConstraintKind kind, const std::string& order_id) {
    PlanningLP relaxed = model;
    relaxed.lp = without_rows(model.lp, kind);
    auto sol = solve_lp(relaxed.lp);
    if (sol.status != SolveStatus::Optimal) {
        throw std::runtime_error(fmt::format("delay diagnostic re-solve without {} rows ended {}", to_string(kind),
                                             to_string(sol.status)));
    }
    auto plan = extract_plan(relaxed, sol);
    return {sol.objective, tardy_units(model.instance, plan, order_id)};
}

double slack(const LPProblem& lp, std::size_t row, const std::vector<double>& x) {
    return lp.rhs[row] - lp.row_activity(row, x);
}

}  // namespace

std::string to_string(DelayReason reason) {
    switch (reason) {
        case DelayReason::NotTardy: return "NotTardy";
        case DelayReason::MaterialShortage: return "MaterialShortage";
        case DelayReason::CapacityShortage: return "CapacityShortage";
        case DelayReason::MaterialAndCapacityShortage: return "MaterialAndCapacityShortage";
        case DelayReason::CompetingOrders: return "CompetingOrders";
    }
    return "Unknown";
}

std::string DelayExplanation::summary() const {
    const auto units = text::format_number(tardy_units);
    switch (reason) {
        case DelayReason::NotTardy: return fmt::format("Order {} is delivered on time.", order_id);
        case DelayReason::MaterialShortage:
            return fmt::format("Order {} has {} units late because of a shortage of {}.", order_id, units,
                               fmt::join(materials, ", "));
        case DelayReason::CapacityShortage:
            return fmt::format("Order {} has {} units late because capacity at {} is exhausted before the due date.",
                               order_id, units, fmt::join(plants, ", "));
        case DelayReason::MaterialAndCapacityShortage:
            return fmt::format("Order {} has {} units late because of a shortage of {} and exhausted capacity at {}.",
                               order_id, units, fmt::join(materials, ", "), fmt::join(plants, ", "));
        case DelayReason::CompetingOrders:
            return fmt::format("Order {} has {} units late because other orders compete for the same resources.",
                               order_id, units);
    }
    return {};
}

double tardy_units(const aps::PlanningInstance& instance, const Plan& plan, const std::string& order_id) {
    const auto* order = instance.find_order(order_id);
    if (!order) throw UnknownOrder(fmt::format("UnknownOrder: {}", order_id));
    double on_time = 0.0;
    for (auto& [key, units] : plan.allocation) {
        if (key.first == order_id && key.second <= order->due_date) on_time += units;
    }
    double late = order->quantity - on_time;
    return late > kTol ? late : 0.0;
}

DelayExplanation explain_delay(const PlanningLP& model, const Plan& plan, const std::string& order_id) {
    const auto& inst = model.instance;
    const auto* order = inst.find_order(order_id);
    if (!order) throw UnknownOrder(fmt::format("UnknownOrder: {}", order_id));

    DelayExplanation out;
    out.order_id = order_id;
    out.tardy_units = tardy_units(inst, plan, order_id);
    if (out.tardy_units <= kTol) {
        out.reason = DelayReason::NotTardy;
        return out;
    }

    auto no_material = ablate(model, ConstraintKind::Material, order_id);
    auto no_capacity = ablate(model, ConstraintKind::Capacity, order_id);
    out.objective_without_material_rows = no_material.objective;
    out.objective_without_capacity_rows = no_capacity.objective;

    const bool late_without_material = no_material.tardy > kTol;
    const bool late_without_capacity = no_capacity.tardy > kTol;
    if (late_without_capacity && !late_without_material) {
        out.reason = DelayReason::MaterialShortage;
    } else if (late_without_material && !late_without_capacity) {
        out.reason = DelayReason::CapacityShortage;
    } else if (late_without_material && late_without_capacity) {
        out.reason = DelayReason::MaterialAndCapacityShortage;
    } else {
        out.reason = DelayReason::CompetingOrders;
        return out;
    }

    const auto x = column_values(model, plan);
    const int due = static_cast<int>(*inst.day_index(order->due_date));
    const auto* product = inst.find_product(order->product_id);

    if (out.reason != DelayReason::CapacityShortage) {
        std::vector<std::string> at_due, before_due;
        for (auto& [material, kg] : product->bom) {
            if (kg <= 0) continue;
            for (std::size_t r = 0; r < model.lp.num_rows(); ++r) {
                const auto& tag = model.lp.tags[r];
                if (tag.kind != ConstraintKind::Material || tag.entity != material || tag.day > due) continue;
                if (slack(model.lp, r, x) > kTol) continue;
                if (tag.day == due) at_due.push_back(material);
                if (before_due.empty() || before_due.back() != material) before_due.push_back(material);
            }
        }
        if (!at_due.empty()) {
            out.materials = at_due;
        } else if (!before_due.empty()) {
            out.materials = before_due;
        } else {
            for (auto& [material, kg] : product->bom)
                if (kg > 0) out.materials.push_back(material);
        }
    }
    if (out.reason != DelayReason::MaterialShortage) {
        std::set<std::string> capable;
        for (auto& c : model.columns) {
            if (c.kind == Column::Kind::Production && inst.products[c.product].id == order->product_id) {
                capable.insert(inst.plants[c.plant].id);
            }
        }
        for (auto& plant : inst.plants) {
            if (!capable.count(plant.id)) continue;
            for (std::size_t r = 0; r < model.lp.num_rows(); ++r) {
                const auto& tag = model.lp.tags[r];
                if (tag.kind != ConstraintKind::Capacity || tag.entity != plant.id || tag.day > due) continue;
                if (slack(model.lp, r, x) <= kTol) {
                    out.plants.push_back(plant.id);
                    break;
                }
            }
        }
        if (out.plants.empty()) out.plants.assign(capable.begin(), capable.end());
    }
    return out;
}

double PlanDiff::total_units_delta() const {
    double s = 0.0;
    for (auto& [id, d] : per_product_total_delta) s += d;
    return s;
}

double PlanDiff::total_tardiness_delta() const {
    double s = 0.0;
    for (auto& [id, d] : per_order_tardiness_delta) s += d;
    return s;
}

PlanDiff diff_plans(const Plan& a, const Plan& b) {
    auto keys = [](const std::map<std::string, double>& m) {
        std::vector<std::string> k;
        for (auto& [id, v] : m) k.push_back(id);
        return k;
    };
    if (keys(a.product_totals) != keys(b.product_totals) || keys(a.tardiness) != keys(b.tardiness)) {
        throw IncompatiblePlans(fmt::format("IncompatiblePlans: {} and {} cover different products or orders", a.id, b.id));
    }
    PlanDiff d;
    d.objective_delta = b.objective - a.objective;
    for (auto& [id, v] : a.product_totals) d.per_product_total_delta[id] = b.product_totals.at(id) - v;
    for (auto& [id, v] : a.tardiness) d.per_order_tardiness_delta[id] = b.tardiness.at(id) - v;

    std::set<ProductionKey> cells;
    for (auto& [k, v] : a.production) cells.insert(k);
    for (auto& [k, v] : b.production) cells.insert(k);
    for (auto& k : cells) {
        auto ia = a.production.find(k);
        auto ib = b.production.find(k);
        double va = ia == a.production.end() ? 0.0 : ia->second;
        double vb = ib == b.production.end() ? 0.0 : ib->second;
        if (std::abs(vb - va) > kTol) {
            d.changed_cells.push_back({std::get<0>(k), std::get<1>(k), std::get<2>(k), va, vb});
        }
    }
    return d;
}

}  // namespace planchat::opt
