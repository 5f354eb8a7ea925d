#include "planchat/planning.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "planchat/csv.hpp"

namespace planchat::opt {

using nlohmann::json;

namespace {

double clean(double v) { return std::abs(v) < 1e-9 ? 0.0 : v; }

}  // namespace

PlanningLP build_lp(const aps::PlanningInstance& base, const std::vector<ScenarioSpec>& mods) {
    if (base.horizon.empty()) throw ScenarioError(ScenarioErrorKind::EmptyHorizon, "EmptyHorizon");

    PlanningLP model;
    model.scenarios = mods;
    model.instance = base;
    for (auto& m : mods) {
        check_references(model.instance, m);
        if (m.is_what_if()) model.instance = apply_what_if(model.instance, std::get<DataChange>(m.change));
    }
    const auto& inst = model.instance;

    std::set<std::string> allowed_plants;
    for (auto& p : inst.plants) allowed_plants.insert(p.id);
    std::set<std::string> hard_deadlines;
    std::vector<MaxProduction> caps;
    for (auto& m : mods) {
        if (m.is_what_if()) continue;
        const auto& r = std::get<Restriction>(m.change);
        if (auto* x = std::get_if<RestrictToPlants>(&r)) {
            std::set<std::string> keep(x->plants.begin(), x->plants.end());
            std::erase_if(allowed_plants, [&](const std::string& p) { return !keep.count(p); });
        } else if (auto* x = std::get_if<ForbidPlant>(&r)) {
            allowed_plants.erase(x->plant);
        } else if (auto* x = std::get_if<HardDeadline>(&r)) {
            hard_deadlines.insert(x->order);
        } else if (auto* x = std::get_if<MaxProduction>(&r)) {
            caps.push_back(*x);
        }
    }

    const std::size_t days = inst.horizon.size();
    double max_weight = 0.0;
    for (auto& o : inst.orders) max_weight = std::max(max_weight, o.weight);
    model.shortage_penalty = 1e4 * max_weight;

    auto& lp = model.lp;
    auto& cols = model.columns;

    // Column blocks: production, allocation, shortage.
    for (std::size_t p = 0; p < inst.plants.size(); ++p) {
        const auto& plant = inst.plants[p];
        if (!allowed_plants.count(plant.id)) continue;
        for (std::size_t i = 0; i < inst.products.size(); ++i) {
            const auto& product = inst.products[i];
            if (!plant.can_make(product.id)) continue;
            double cost = plant.unit_cost.count(product.id) ? plant.unit_cost.at(product.id) : 0.0;
            for (std::size_t t = 0; t < days; ++t) {
                lp.variable_names.push_back(
                    fmt::format("x[{},{},{}]", plant.id, product.id, format_date(inst.horizon[t])));
                lp.objective.push_back(cost);
                cols.push_back({Column::Kind::Production, p, i, 0, t});
            }
        }
    }
    for (std::size_t o = 0; o < inst.orders.size(); ++o) {
        const auto& order = inst.orders[o];
        const auto due = static_cast<std::ptrdiff_t>(*inst.day_index(order.due_date));
        const bool hard = hard_deadlines.count(order.id) > 0;
        for (std::size_t t = 0; t < days; ++t) {
            const auto late = static_cast<std::ptrdiff_t>(t) - due;
            if (hard && late > 0) continue;
            lp.variable_names.push_back(fmt::format("a[{},{}]", order.id, format_date(inst.horizon[t])));
            lp.objective.push_back(order.weight * static_cast<double>(std::max<std::ptrdiff_t>(0, late)));
            cols.push_back({Column::Kind::Allocation, 0, 0, o, t});
        }
    }
    for (std::size_t o = 0; o < inst.orders.size(); ++o) {
        if (hard_deadlines.count(inst.orders[o].id)) continue;
        lp.variable_names.push_back(fmt::format("s[{}]", inst.orders[o].id));
        lp.objective.push_back(model.shortage_penalty);
        cols.push_back({Column::Kind::Shortage, 0, 0, o, 0});
    }

    const std::size_t n = cols.size();
    auto emit = [&](std::vector<double> row, Sense sense, double rhs, ConstraintTag tag) {
        if (std::none_of(row.begin(), row.end(), [](double v) { return v != 0.0; })) return;
        lp.rows.push_back(std::move(row));
        lp.senses.push_back(sense);
        lp.rhs.push_back(rhs);
        lp.tags.push_back(std::move(tag));
    };

    for (std::size_t p = 0; p < inst.plants.size(); ++p) {
        const auto& plant = inst.plants[p];
        for (std::size_t t = 0; t < days; ++t) {
            std::vector<double> row(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const auto& c = cols[j];
                if (c.kind == Column::Kind::Production && c.plant == p && c.day == t) {
                    row[j] = plant.proc_time.at(inst.products[c.product].id);
                }
            }
            emit(std::move(row), Sense::LessEqual, plant.capacity.at(inst.horizon[t]),
                 {ConstraintKind::Capacity, plant.id, static_cast<int>(t)});
        }
    }
    for (const auto& material : inst.materials) {
        double available = material.initial_inventory;
        for (std::size_t t = 0; t < days; ++t) {
            auto rec = material.receipts.find(inst.horizon[t]);
            if (rec != material.receipts.end()) available += rec->second;
            std::vector<double> row(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const auto& c = cols[j];
                if (c.kind != Column::Kind::Production || c.day > t) continue;
                const auto& bom = inst.products[c.product].bom;
                auto it = bom.find(material.id);
                if (it != bom.end()) row[j] = it->second;
            }
            emit(std::move(row), Sense::LessEqual, available,
                 {ConstraintKind::Material, material.id, static_cast<int>(t)});
        }
    }
    for (std::size_t i = 0; i < inst.products.size(); ++i) {
        for (std::size_t t = 0; t < days; ++t) {
            std::vector<double> row(n, 0.0);
            for (std::size_t j = 0; j < n; ++j) {
                const auto& c = cols[j];
                if (c.day > t) continue;
                if (c.kind == Column::Kind::Allocation && inst.orders[c.order].product_id == inst.products[i].id) {
                    row[j] = 1.0;
                } else if (c.kind == Column::Kind::Production && c.product == i) {
                    row[j] = -1.0;
                }
            }
            emit(std::move(row), Sense::LessEqual, 0.0,
                 {ConstraintKind::Linking, inst.products[i].id, static_cast<int>(t)});
        }
    }
    for (std::size_t o = 0; o < inst.orders.size(); ++o) {
        std::vector<double> row(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const auto& c = cols[j];
            if ((c.kind == Column::Kind::Allocation || c.kind == Column::Kind::Shortage) && c.order == o) row[j] = 1.0;
        }
        // An order with no columns at all (hard deadline, nothing deliverable) still
        // needs its row so the model reports infeasibility.
        bool empty = std::none_of(row.begin(), row.end(), [](double v) { return v != 0.0; });
        if (empty) {
            lp.rows.push_back(std::move(row));
            lp.senses.push_back(Sense::Equal);
            lp.rhs.push_back(inst.orders[o].quantity);
            lp.tags.push_back({ConstraintKind::Demand, inst.orders[o].id, -1});
        } else {
            emit(std::move(row), Sense::Equal, inst.orders[o].quantity, {ConstraintKind::Demand, inst.orders[o].id, -1});
        }
    }
    for (const auto& cap : caps) {
        auto idx = std::find_if(inst.products.begin(), inst.products.end(),
                                [&](const aps::Product& p) { return p.id == cap.product; }) -
                   inst.products.begin();
        std::vector<double> row(n, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (cols[j].kind == Column::Kind::Production && cols[j].product == static_cast<std::size_t>(idx)) row[j] = 1.0;
        }
        emit(std::move(row), Sense::LessEqual, cap.units, {ConstraintKind::Restriction, cap.product, -1});
    }

    lp.check_dimensions();
    return model;
}

Plan extract_plan(const PlanningLP& model, const LPSolution& solution, std::string plan_id) {
    if (solution.status != SolveStatus::Optimal) {
        throw NotOptimal(fmt::format("NotOptimal: solve status {}", to_string(solution.status)));
    }
    if (solution.x.size() != model.columns.size()) {
        throw DimensionMismatch(fmt::format("solution has {} values for {} columns", solution.x.size(),
                                            model.columns.size()));
    }
    const auto& inst = model.instance;
    Plan plan;
    plan.id = std::move(plan_id);
    plan.instance_id = inst.id;
    plan.provenance = model.scenarios;
    for (auto& o : inst.orders) {
        plan.tardiness[o.id] = 0.0;
        plan.shortage[o.id] = 0.0;
    }
    for (auto& p : inst.products) plan.product_totals[p.id] = 0.0;

    for (std::size_t j = 0; j < model.columns.size(); ++j) {
        const auto& c = model.columns[j];
        const double v = clean(solution.x[j]);
        switch (c.kind) {
            case Column::Kind::Production: {
                const auto& plant = inst.plants[c.plant];
                const auto& product = inst.products[c.product];
                plan.production[{plant.id, product.id, inst.horizon[c.day]}] = v;
                plan.product_totals[product.id] += v;
                plan.breakdown.production_cost += v * plant.unit_cost.at(product.id);
                break;
            }
            case Column::Kind::Allocation: {
                const auto& order = inst.orders[c.order];
                plan.allocation[{order.id, inst.horizon[c.day]}] = v;
                const auto late = (inst.horizon[c.day] - order.due_date).count();
                if (late > 0) plan.tardiness[order.id] += order.weight * static_cast<double>(late) * v;
                break;
            }
            case Column::Kind::Shortage:
                plan.shortage[inst.orders[c.order].id] = v;
                plan.breakdown.shortage_cost += model.shortage_penalty * v;
                break;
        }
    }
    for (auto& [id, t] : plan.tardiness) plan.breakdown.tardiness_cost += t;
    plan.objective = solution.objective;
    return plan;
}

std::vector<double> column_values(const PlanningLP& model, const Plan& plan) {
    const auto& inst = model.instance;
    std::vector<double> x(model.columns.size(), 0.0);
    for (std::size_t j = 0; j < model.columns.size(); ++j) {
        const auto& c = model.columns[j];
        switch (c.kind) {
            case Column::Kind::Production: {
                auto it = plan.production.find({inst.plants[c.plant].id, inst.products[c.product].id, inst.horizon[c.day]});
                if (it != plan.production.end()) x[j] = it->second;
                break;
            }
            case Column::Kind::Allocation: {
                auto it = plan.allocation.find({inst.orders[c.order].id, inst.horizon[c.day]});
                if (it != plan.allocation.end()) x[j] = it->second;
                break;
            }
            case Column::Kind::Shortage: {
                auto it = plan.shortage.find(inst.orders[c.order].id);
                if (it != plan.shortage.end()) x[j] = it->second;
                break;
            }
        }
    }
    return x;
}

std::string plan_to_csv(const Plan& plan) {
    std::ostringstream os;
    csv::write_row(os, {"plant_id", "product_id", "date", "units"});
    for (auto& [key, units] : plan.production) {
        auto& [plant, product, date] = key;
        csv::write_row(os, {plant, product, format_date(date), fmt::format("{}", units)});
    }
    return os.str();
}

void to_json(json& j, const Plan& plan) {
    j = json::object();
    j["id"] = plan.id;
    j["instance_id"] = plan.instance_id;
    j["production"] = json::array();
    for (auto& [key, units] : plan.production) {
        auto& [plant, product, date] = key;
        j["production"].push_back({{"plant", plant}, {"product", product}, {"date", format_date(date)}, {"units", units}});
    }
    j["allocation"] = json::array();
    for (auto& [key, units] : plan.allocation) {
        j["allocation"].push_back({{"order", key.first}, {"date", format_date(key.second)}, {"units", units}});
    }
    j["tardiness"] = plan.tardiness;
    j["shortage"] = plan.shortage;
    j["product_totals"] = plan.product_totals;
    j["objective"] = plan.objective;
    j["objective_breakdown"] = {{"tardiness_cost", plan.breakdown.tardiness_cost},
                                {"shortage_cost", plan.breakdown.shortage_cost},
                                {"production_cost", plan.breakdown.production_cost}};
    if (plan.provenance.empty()) {
        j["provenance"] = "baseline";
    } else {
        j["provenance"] = plan.provenance;
    }
}

void from_json(const json& j, Plan& plan) {
    auto date_of = [](const json& v) {
        auto d = parse_date(v.get<std::string>());
        if (!d) throw std::runtime_error("invalid date in plan document");
        return *d;
    };
    plan = Plan{};
    plan.id = j.at("id").get<std::string>();
    plan.instance_id = j.at("instance_id").get<std::string>();
    for (auto& c : j.at("production")) {
        plan.production[{c.at("plant").get<std::string>(), c.at("product").get<std::string>(), date_of(c.at("date"))}] =
            c.at("units").get<double>();
    }
    for (auto& c : j.at("allocation")) {
        plan.allocation[{c.at("order").get<std::string>(), date_of(c.at("date"))}] = c.at("units").get<double>();
    }
    plan.tardiness = j.at("tardiness").get<std::map<std::string, double>>();
    plan.shortage = j.at("shortage").get<std::map<std::string, double>>();
    plan.product_totals = j.at("product_totals").get<std::map<std::string, double>>();
    plan.objective = j.at("objective").get<double>();
    const auto& b = j.at("objective_breakdown");
    plan.breakdown = {b.at("tardiness_cost").get<double>(), b.at("shortage_cost").get<double>(),
                      b.at("production_cost").get<double>()};
    if (j.at("provenance").is_array()) plan.provenance = j.at("provenance").get<std::vector<ScenarioSpec>>();
}

}  // namespace planchat::opt
