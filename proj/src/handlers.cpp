#include "planchat/handlers.hpp"

#include <cmath>

#include <fmt/format.h>

#include "planchat/analysis.hpp"
#include "planchat/relaxation.hpp"
#include "planchat/text.hpp"
#include "planchat/tool_manager.hpp"

namespace planchat::tools {

using nlohmann::json;
using namespace planchat::opt;

namespace {

constexpr double kTol = 1e-6;

// Rounds away simplex noise so that payloads read 64 rather than 63.99999999997.
double clean(double v) {
    double r = std::round(v * 1e6) / 1e6;
    return r == 0.0 ? 0.0 : r;
}

std::string param_str(const HandlerContext& ctx, const std::string& name) {
    if (!ctx.params.contains(name)) throw HandlerError("validate", "missing parameter " + name);
    return ctx.params.at(name).get<std::string>();
}

double param_num(const HandlerContext& ctx, const std::string& name) {
    if (!ctx.params.contains(name)) throw HandlerError("validate", "missing parameter " + name);
    return ctx.params.at(name).get<double>();
}

Date param_date(const HandlerContext& ctx, const std::string& name) {
    auto d = parse_date(param_str(ctx, name));
    if (!d) throw HandlerError("validate", "bad date for " + name);
    return *d;
}

const chat::ModelRecord& need_model(const HandlerContext& ctx) {
    if (!ctx.model) throw HandlerError("model selection", "no model selected");
    return *ctx.model;
}

const aps::PlanningInstance& base_instance(const HandlerContext& ctx) {
    const auto& m = need_model(ctx);
    auto it = ctx.session.instances.find(m.instance_id);
    if (it == ctx.session.instances.end()) throw HandlerError("model selection", "instance not loaded: " + m.instance_id);
    return it->second;
}

const Plan& model_plan(const HandlerContext& ctx) {
    const auto* p = ctx.session.find_plan(need_model(ctx).plan_id);
    if (!p) throw HandlerError("model selection", "model has no plan");
    return *p;
}

const Plan& plan_param(const HandlerContext& ctx, const std::string& name) {
    auto id = param_str(ctx, name);
    const auto* p = ctx.session.find_plan(id);
    if (!p) throw HandlerError("validate", "unknown plan " + id);
    return *p;
}

// Instance as seen by a plan: the stored data with the plan's what-ifs applied.
aps::PlanningInstance plan_instance(const HandlerContext& ctx, const Plan& plan) {
    auto it = ctx.session.instances.find(plan.instance_id);
    if (it == ctx.session.instances.end()) throw HandlerError("lookup", "instance not loaded: " + plan.instance_id);
    return chat::effective_instance(it->second, plan.provenance);
}

std::string day_label(const aps::PlanningInstance& inst, int day) {
    if (day < 0 || static_cast<std::size_t>(day) >= inst.horizon.size()) return "";
    return format_date(inst.horizon[static_cast<std::size_t>(day)]);
}

void check_in_horizon(const aps::PlanningInstance& inst, Date d) {
    if (inst.horizon.empty() || d < inst.horizon.front() || d > inst.horizon.back())
        throw HandlerError("validate", fmt::format("{} is outside the planning horizon {} to {}", format_date(d),
                                                   format_date(inst.horizon.front()), format_date(inst.horizon.back())));
}

json change_rows(const PlanDiff& d) {
    json rows = json::array();
    for (const auto& c : d.changed_cells)
        rows.push_back({c.plant, c.product, format_date(c.date), clean(c.old_units), clean(c.new_units)});
    return rows;
}

struct ScenarioRun {
    std::optional<Plan> plan;  // absent when infeasible
    std::optional<RelaxationReport> relaxation;
    PlanningLP model;
    PlanDiff diff;
    std::string plan_id;
    std::string model_id;
};

// Shared what-if / why-not path: layer `spec` on the selected model, solve,
// compare with the model's plan and save the result as a new scenario model.
ScenarioRun run_scenario(HandlerContext& ctx, const ScenarioSpec& spec) {
    const auto base = need_model(ctx);
    const auto& inst = base_instance(ctx);
    auto scenarios = base.scenarios;
    scenarios.push_back(spec);

    ScenarioRun run;
    try {
        check_references(chat::effective_instance(inst, base.scenarios), spec);
        run.model = build_lp(inst, scenarios);
    } catch (const ScenarioError& e) {
        throw HandlerError("apply scenario", e.what());
    }
    auto sol = solve_lp(run.model.lp);
    if (sol.status == SolveStatus::Infeasible) {
        run.relaxation = relax_infeasible(run.model.lp);
        return run;
    }
    if (sol.status != SolveStatus::Optimal) throw HandlerError("solve", "solver returned " + to_string(sol.status));
    Plan plan = extract_plan(run.model, sol);
    run.diff = diff_plans(model_plan(ctx), plan);
    const auto& added = chat::add_scenario_model(ctx.session, base, spec, std::move(plan));
    run.model_id = added.id;
    run.plan_id = added.plan_id;
    run.plan = *ctx.session.find_plan(added.plan_id);
    return run;
}

json scenario_payload(const ScenarioRun& run) {
    return {{"plan_id", run.plan_id},
            {"model_id", run.model_id},
            {"objective", clean(run.plan->objective)},
            {"objective_delta", clean(run.diff.objective_delta)},
            {"tardiness_delta", clean(run.diff.total_tardiness_delta())},
            {"units_delta", clean(run.diff.total_units_delta())},
            {"changes", change_rows(run.diff)}};
}

// Keeps only the fields a contract declares, so shared helpers can over-supply.
json project(const ToolContract& c, json payload) {
    json out = json::object();
    for (const auto& f : c.output)
        if (payload.contains(f.name)) out[f.name] = std::move(payload[f.name]);
    return out;
}

json require_feasible(HandlerContext& ctx, const ScenarioSpec& spec) {
    auto run = run_scenario(ctx, spec);
    if (!run.plan) throw HandlerError("solve", "the scenario has no feasible plan");
    return scenario_payload(run);
}

// ---------------------------------------------------------------------------

json query_production(HandlerContext& ctx) {
    const auto& plan = model_plan(ctx);
    const auto& inst = base_instance(ctx);
    auto day = param_date(ctx, "date");
    check_in_horizon(inst, day);
    std::optional<std::string> product, plant;
    if (ctx.params.contains("product")) product = param_str(ctx, "product");
    if (ctx.params.contains("plant")) plant = param_str(ctx, "plant");

    double units = 0.0;
    json rows = json::array();
    for (const auto& [key, v] : plan.production) {
        const auto& [pl, pr, d] = key;
        if (d != day || (product && pr != *product) || (plant && pl != *plant) || v <= kTol) continue;
        units += v;
        rows.push_back({pl, pr, clean(v)});
    }
    return {{"date", format_date(day)},
            {"units", clean(units)},
            {"product_label", product ? inst.find_product(*product)->name : "all products"},
            {"plant_label", plant ? inst.find_plant(*plant)->name : "all plants"},
            {"production", rows}};
}

json query_order_status(HandlerContext& ctx) {
    const auto& m = need_model(ctx);
    const auto& plan = model_plan(ctx);
    auto lp = build_lp(base_instance(ctx), m.scenarios);
    const auto order_id = param_str(ctx, "order");
    const auto* order = lp.instance.find_order(order_id);
    if (!order) throw HandlerError("validate", "unknown order " + order_id);

    DelayExplanation why;
    try {
        why = explain_delay(lp, plan, order_id);
    } catch (const std::exception& e) {
        throw HandlerError("explain delay", e.what());
    }
    const double shortage = plan.shortage.count(order_id) ? plan.shortage.at(order_id) : 0.0;
    json rows = json::array();
    for (const auto& [key, v] : plan.allocation) {
        if (key.first != order_id || v <= kTol) continue;
        auto late = std::max<long>(0, (key.second - order->due_date).count());
        rows.push_back({format_date(key.second), clean(v), static_cast<double>(late)});
    }
    return {{"order_id", order_id},
            {"product_name", lp.instance.find_product(order->product_id)->name},
            {"quantity", clean(order->quantity)},
            {"due_date", format_date(order->due_date)},
            {"on_time_units", clean(order->quantity - why.tardy_units)},
            {"late_units", clean(why.tardy_units - shortage)},
            {"shortage_units", clean(shortage)},
            {"tardiness", clean(plan.tardiness.count(order_id) ? plan.tardiness.at(order_id) : 0.0)},
            {"reason", to_string(why.reason)},
            {"explanation", why.summary()},
            {"deliveries", rows}};
}

json query_material_inventory(HandlerContext& ctx) {
    const auto& plan = model_plan(ctx);
    auto inst = chat::effective_instance(base_instance(ctx), need_model(ctx).scenarios);
    const auto material_id = param_str(ctx, "material");
    const auto* mat = inst.find_material(material_id);
    if (!mat) throw HandlerError("validate", "unknown material " + material_id);
    auto day = param_date(ctx, "date");
    check_in_horizon(inst, day);

    std::map<Date, double> consumed;
    for (const auto& [key, v] : plan.production) {
        const auto& [pl, pr, d] = key;
        const auto* product = inst.find_product(pr);
        auto it = product->bom.find(material_id);
        if (it != product->bom.end()) consumed[d] += v * it->second;
    }
    double on_hand = mat->initial_inventory, at_day = 0.0;
    json rows = json::array();
    for (auto d : inst.horizon) {
        double rec = mat->receipts.count(d) ? mat->receipts.at(d) : 0.0;
        on_hand += rec - consumed[d];
        if (d == day) at_day = on_hand;
        rows.push_back({format_date(d), clean(rec), clean(consumed[d]), clean(on_hand)});
    }
    return {{"material_name", mat->name}, {"date", format_date(day)}, {"on_hand_kg", clean(at_day)}, {"inventory", rows}};
}

json whynot_restrict_plants(HandlerContext& ctx) {
    std::vector<std::string> plants = ctx.params.at("plants").get<std::vector<std::string>>();
    auto payload = require_feasible(ctx, ScenarioSpec{Restriction{RestrictToPlants{plants}}});
    const auto& inst = base_instance(ctx);
    std::vector<std::string> names;
    for (const auto& p : plants) names.push_back(inst.find_plant(p) ? inst.find_plant(p)->name : p);
    payload["plants"] = fmt::format("{}", fmt::join(names, ", "));
    return payload;
}

json whynot_hard_deadline(HandlerContext& ctx) {
    const auto order_id = param_str(ctx, "order");
    auto inst = chat::effective_instance(base_instance(ctx), need_model(ctx).scenarios);
    const auto* order = inst.find_order(order_id);
    if (!order) throw HandlerError("validate", "unknown order " + order_id);

    auto run = run_scenario(ctx, ScenarioSpec{Restriction{HardDeadline{order_id}}});
    json payload{{"order_id", order_id}, {"due_date", format_date(order->due_date)}};
    if (run.plan) {
        payload.update(scenario_payload(run));
        payload["feasible"] = "yes";
        payload["violations"] = json::array();
        payload["outcome"] = fmt::format("feasible; plan {} changes the objective by {} and total tardiness by {} unit-days.",
                                         run.plan_id, text::format_number(run.diff.objective_delta),
                                         text::format_number(run.diff.total_tardiness_delta()));
        return payload;
    }
    const auto& rep = *run.relaxation;
    json rows = json::array();
    std::vector<std::string> parts;
    for (const auto& v : rep.violated) {
        auto kind = to_string(v.tag.kind);
        auto day = day_label(run.model.instance, v.tag.day);
        rows.push_back({kind, v.tag.entity, day, clean(v.amount)});
        parts.push_back(fmt::format("{} {} for {}{}", text::format_number(v.amount), kind == "demand" ? "units of demand" : kind,
                                    v.tag.entity, day.empty() ? "" : " on " + day));
    }
    payload["feasible"] = "no";
    payload["plan_id"] = "none";
    payload["objective_delta"] = 0.0;
    payload["violations"] = rows;
    payload["outcome"] = fmt::format("not feasible. The smallest relaxation violates constraints by {} in total: {}.",
                                     text::format_number(rep.total_violation), fmt::join(parts, "; "));
    return payload;
}

json whynot_max_production(HandlerContext& ctx) {
    const auto product = param_str(ctx, "product");
    const double limit = param_num(ctx, "limit");
    if (limit < 0) throw HandlerError("validate", "limit must not be negative");
    auto payload = require_feasible(ctx, ScenarioSpec{Restriction{MaxProduction{product, limit}}});
    payload["product_name"] = base_instance(ctx).find_product(product)->name;
    payload["limit"] = clean(limit);
    return payload;
}

json whatif_add_receipt(HandlerContext& ctx) {
    const auto material = param_str(ctx, "material");
    const double kg = param_num(ctx, "quantity");
    const auto day = param_date(ctx, "date");
    auto payload = require_feasible(ctx, ScenarioSpec{DataChange{AddReceipt{material, day, kg}}});
    payload["material_name"] = base_instance(ctx).find_material(material)->name;
    payload["quantity"] = clean(kg);
    payload["date"] = format_date(day);
    return payload;
}

json whatif_set_capacity(HandlerContext& ctx) {
    const auto plant = param_str(ctx, "plant");
    const auto day = param_date(ctx, "date");
    const double hours = param_num(ctx, "hours");
    auto payload = require_feasible(ctx, ScenarioSpec{DataChange{SetCapacity{plant, day, hours}}});
    payload["plant_name"] = base_instance(ctx).find_plant(plant)->name;
    payload["date"] = format_date(day);
    payload["hours"] = clean(hours);
    return payload;
}

json whatif_change_due_date(HandlerContext& ctx) {
    const auto order = param_str(ctx, "order");
    const auto day = param_date(ctx, "date");
    auto payload = require_feasible(ctx, ScenarioSpec{DataChange{ChangeDueDate{order, day}}});
    payload["order_id"] = order;
    payload["date"] = format_date(day);
    return payload;
}

json whatif_change_quantity(HandlerContext& ctx) {
    const auto order = param_str(ctx, "order");
    const double units = param_num(ctx, "quantity");
    auto payload = require_feasible(ctx, ScenarioSpec{DataChange{ChangeOrderQty{order, units}}});
    payload["order_id"] = order;
    payload["quantity"] = clean(units);
    return payload;
}

json compare_plans(HandlerContext& ctx) {
    const auto& a = plan_param(ctx, "plan_a");
    const auto& b = plan_param(ctx, "plan_b");
    PlanDiff d;
    try {
        d = diff_plans(a, b);
    } catch (const IncompatiblePlans& e) {
        throw HandlerError("compare", e.what());
    }
    json products = json::array();
    for (const auto& [id, v] : d.per_product_total_delta) products.push_back({id, clean(v)});
    return {{"plan_a", a.id},
            {"plan_b", b.id},
            {"objective_delta", clean(d.objective_delta)},
            {"units_delta", clean(d.total_units_delta())},
            {"tardiness_delta", clean(d.total_tardiness_delta())},
            {"products", products},
            {"changes", change_rows(d)}};
}

json display_production(HandlerContext& ctx) {
    const auto& plan = plan_param(ctx, "plan");
    json rows = json::array();
    double total = 0.0;
    for (const auto& [key, v] : plan.production) {
        if (v <= kTol) continue;
        const auto& [pl, pr, d] = key;
        rows.push_back({pl, pr, format_date(d), clean(v)});
        total += v;
    }
    return {{"plan_id", plan.id},
            {"total_units", clean(total)},
            {"cells", static_cast<double>(rows.size())},
            {"production", rows}};
}

json display_orders(HandlerContext& ctx) {
    const auto& plan = plan_param(ctx, "plan");
    auto inst = plan_instance(ctx, plan);
    json rows = json::array();
    int late_orders = 0;
    for (const auto& o : inst.orders) {
        double tardy = tardy_units(inst, plan, o.id);
        double short_units = plan.shortage.count(o.id) ? plan.shortage.at(o.id) : 0.0;
        if (tardy > kTol) ++late_orders;
        rows.push_back({o.id, o.product_id, clean(o.quantity), format_date(o.due_date), clean(o.quantity - tardy),
                        clean(tardy - short_units), clean(short_units),
                        clean(plan.tardiness.count(o.id) ? plan.tardiness.at(o.id) : 0.0)});
    }
    return {{"plan_id", plan.id},
            {"order_count", static_cast<double>(inst.orders.size())},
            {"late_orders", static_cast<double>(late_orders)},
            {"orders", rows}};
}

Handler projected(json (*fn)(HandlerContext&)) {
    return [fn](HandlerContext& ctx) { return project(ctx.contract, fn(ctx)); };
}

}  // namespace

HandlerRegistry default_registry() {
    return {
        {"query_production", projected(query_production)},
        {"query_order_status", projected(query_order_status)},
        {"query_material_inventory", projected(query_material_inventory)},
        {"whynot_restrict_plants", projected(whynot_restrict_plants)},
        {"whynot_hard_deadline", projected(whynot_hard_deadline)},
        {"whynot_max_production", projected(whynot_max_production)},
        {"whatif_add_receipt", projected(whatif_add_receipt)},
        {"whatif_set_capacity", projected(whatif_set_capacity)},
        {"whatif_change_due_date", projected(whatif_change_due_date)},
        {"whatif_change_quantity", projected(whatif_change_quantity)},
        {"compare_plans", projected(compare_plans)},
        {"display_production", projected(display_production)},
        {"display_orders", projected(display_orders)},
    };
}

}  // namespace planchat::tools
