#include "planchat/tool_manager.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "planchat/handlers.hpp"

namespace planchat::chat {

using nlohmann::json;

bool needs_model(const tools::ToolContract& contract) { return contract.category != tools::Category::ComparePlan; }

aps::PlanningInstance effective_instance(const aps::PlanningInstance& base,
                                         const std::vector<opt::ScenarioSpec>& scenarios) {
    aps::PlanningInstance out = base;
    for (const auto& s : scenarios)
        if (s.is_what_if()) out = opt::apply_what_if(out, std::get<opt::DataChange>(s.change));
    return out;
}

std::string add_instance(SessionState& session, aps::PlanningInstance instance) {
    auto model = opt::build_lp(instance);
    auto sol = opt::solve_lp(model.lp);
    auto plan = opt::extract_plan(model, sol);

    ModelRecord rec;
    rec.id = session.models.empty() ? "baseline" : "baseline_" + instance.id;
    for (int n = 2; session.find_model(rec.id); ++n) rec.id = fmt::format("baseline_{}_{}", instance.id, n);
    rec.name = session.models.empty() ? "Baseline" : "Baseline " + instance.id;
    rec.instance_id = instance.id;
    session.instances[instance.id] = std::move(instance);
    rec.plan_id = save_plan(session, std::move(plan));
    session.models.push_back(rec);
    return rec.id;
}

const ModelRecord& add_scenario_model(SessionState& session, const ModelRecord& base, const opt::ScenarioSpec& spec,
                                      opt::Plan plan) {
    ModelRecord rec;
    const bool from_root = base.scenarios.empty();
    auto stem = from_root ? opt::slug(spec) : base.id + "_" + opt::slug(spec);
    rec.id = stem;
    for (int n = 2; session.find_model(rec.id); ++n) rec.id = fmt::format("{}_{}", stem, n);
    rec.name = from_root ? opt::describe(spec) : base.name + ", then " + opt::describe(spec);
    rec.instance_id = base.instance_id;
    rec.scenarios = base.scenarios;
    rec.scenarios.push_back(spec);
    rec.plan_id = save_plan(session, std::move(plan));
    session.models.push_back(std::move(rec));
    return session.models.back();
}

namespace {

std::vector<llm::Candidate> model_candidates(const SessionState& session) {
    std::vector<llm::Candidate> out;
    for (const auto& m : session.models) out.push_back({m.id, m.name});
    return out;
}

std::vector<llm::Candidate> plan_candidates(const SessionState& session) {
    std::vector<llm::Candidate> out;
    for (const auto& m : session.models) {
        if (m.plan_id.empty()) continue;
        out.push_back({m.plan_id, m.name});
        out.push_back({m.plan_id, m.id});
    }
    return out;
}

// Fills one parameter from its infer rule, or leaves it absent.
std::optional<json> infer_value(const tools::ParamSpec& p, const SessionState& session, const ModelRecord* model,
                                const json& params) {
    const aps::PlanningInstance* inst = nullptr;
    if (model) {
        auto it = session.instances.find(model->instance_id);
        if (it != session.instances.end()) inst = &it->second;
    }
    if (p.infer == "horizon_start" && inst && !inst->horizon.empty()) return json(format_date(inst->horizon.front()));
    if (p.infer == "horizon_end" && inst && !inst->horizon.empty()) return json(format_date(inst->horizon.back()));
    if (p.infer == "model_plan" && model && !model->plan_id.empty()) return json(model->plan_id);
    if (p.infer == "reference_plan" && !session.models.empty() && !session.models.front().plan_id.empty())
        return json(session.models.front().plan_id);
    if (p.infer == "latest_plan") {
        for (auto it = session.plan_order.rbegin(); it != session.plan_order.rend(); ++it) {
            bool taken = false;
            for (const auto& [k, v] : params.items()) taken = taken || (v.is_string() && v.get<std::string>() == *it);
            if (!taken) return json(*it);
        }
    }
    return std::nullopt;
}

}  // namespace

std::variant<Invocation, MissingParams> prepare_invocation(const tools::BoundTool& tool, const SessionState& session,
                                                           const std::vector<llm::Message>& conversation,
                                                           const std::string& query, ToolEnv env,
                                                           const PendingClarification* pending,
                                                           std::vector<std::string>* trace) {
    auto note = [&](std::string line) {
        if (trace) trace->push_back(std::move(line));
    };
    const auto& contract = tool.contract;

    const ModelRecord* model = nullptr;
    bool model_missing = false;
    if (needs_model(contract)) {
        if (session.models.empty()) throw NoInstanceLoaded();
        std::optional<std::string> chosen;
        if (pending && !pending->model_id.empty()) {
            chosen = pending->model_id;
        } else {
            chosen = llm::select_model(conversation, query, model_candidates(session), env.client, env.prompts);
            if (!chosen && pending) {
                // A follow-up may name the model on its own.
                chosen = llm::parse_model_choice(query, model_candidates(session));
            }
        }
        if (chosen) model = session.find_model(*chosen);
        if (model) {
            note(fmt::format("Selected model {}", model->id));
        } else {
            model_missing = true;
            note("Could not determine which model the question refers to");
        }
    }

    // Entities resolve against the selected model's data, or the newest model's
    // when no model is settled yet.
    const aps::PlanningInstance* inst = nullptr;
    const ModelRecord* data_model = model ? model : (session.models.empty() ? nullptr : &session.models.back());
    if (data_model) {
        auto it = session.instances.find(data_model->instance_id);
        if (it != session.instances.end()) inst = &it->second;
    }

    json params = pending ? pending->collected : json::object();
    if (!contract.input.empty()) {
        auto ex = llm::extract_parameters(contract.input, conversation, query, env.client, env.prompts, inst,
                                          plan_candidates(session));
        for (auto& [k, v] : ex.params.items()) params[k] = v;
        note(fmt::format("Extracted parameters {}", ex.params.dump()));
    }
    for (const auto& p : contract.input) {
        if (params.contains(p.name) || p.infer.empty()) continue;
        if (auto v = infer_value(p, session, model, params)) {
            params[p.name] = *v;
            note(fmt::format("Inferred {} = {}", p.name, v->is_string() ? v->get<std::string>() : v->dump()));
        }
    }

    std::vector<std::string> missing;
    if (model_missing) missing.push_back("model");
    for (const auto& p : contract.input)
        if (p.required && !params.contains(p.name)) missing.push_back(p.name);
    if (!missing.empty()) {
        note(fmt::format("Missing parameters: {}", fmt::join(missing, ", ")));
        return MissingParams{missing, params, model ? model->id : ""};
    }
    Invocation inv;
    inv.tool_id = contract.id;
    if (model) {
        inv.model_id = model->id;
        inv.instance_id = model->instance_id;
    }
    inv.params = std::move(params);
    return inv;
}

tools::ToolOutput execute(const Invocation& invocation, SessionState& session, ToolEnv env) {
    const auto* tool = env.catalog.find(invocation.tool_id);
    if (!tool) throw tools::HandlerError("dispatch", "unknown tool " + invocation.tool_id);
    // Handlers append models, so they get a copy rather than a pointer into the vector.
    std::optional<ModelRecord> model;
    if (!invocation.model_id.empty()) {
        const auto* m = session.find_model(invocation.model_id);
        if (!m) throw tools::HandlerError("model selection", "unknown model " + invocation.model_id);
        model = *m;
    }
    tools::HandlerContext ctx{tool->contract, invocation.params, session, model ? &*model : nullptr};
    json payload;
    try {
        payload = tool->handler(ctx);
    } catch (const tools::HandlerError&) {
        throw;
    } catch (const std::exception& e) {
        throw tools::HandlerError(tool->contract.function, e.what());
    }
    try {
        return tools::make_output(tool->contract, std::move(payload));
    } catch (const tools::CatalogError& e) {
        throw tools::HandlerError("render output", e.what());
    }
}

}  // namespace planchat::chat
