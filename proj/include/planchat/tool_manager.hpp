#pragma once

#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "planchat/contracts.hpp"
#include "planchat/llm_gateway.hpp"
#include "planchat/session.hpp"

namespace planchat::chat {

struct ToolEnv {
    const tools::BoundCatalog& catalog;
    llm::CompletionClient& client;
    const llm::PromptSet& prompts;
};

struct Invocation {
    std::string tool_id;
    std::string model_id;     // empty for tools that work on saved plans only
    std::string instance_id;  // likewise
    nlohmann::json params = nlohmann::json::object();
};

struct MissingParams {
    std::vector<std::string> names;  // schema order, "model" first when undetermined
    nlohmann::json collected = nlohmann::json::object();
    std::string model_id;
};

class NoInstanceLoaded : public std::runtime_error {
public:
    NoInstanceLoaded() : std::runtime_error("no planning data loaded in this session") {}
};

/// True for tools that run against a selected model (everything except plan comparison).
bool needs_model(const tools::ToolContract& contract);

/// Selects the model, extracts parameters from `query` (with `conversation` as
/// context), merges anything already collected in `pending`, then fills
/// remaining gaps from each parameter's `infer` rule. `trace` receives one line
/// per stage when given.
std::variant<Invocation, MissingParams> prepare_invocation(const tools::BoundTool& tool, const SessionState& session,
                                                           const std::vector<llm::Message>& conversation,
                                                           const std::string& query, ToolEnv env,
                                                           const PendingClarification* pending = nullptr,
                                                           std::vector<std::string>* trace = nullptr);

/// Runs the bound handler and renders its output. New plans and scenario models
/// are appended to `session`; nothing existing is modified.
tools::ToolOutput execute(const Invocation& invocation, SessionState& session, ToolEnv env);

/// Stores `instance`, solves its baseline and registers it as a model. Returns the model id.
std::string add_instance(SessionState& session, aps::PlanningInstance instance);

/// Registers the model `base` + `spec` with an already solved plan. Returns the new model.
const ModelRecord& add_scenario_model(SessionState& session, const ModelRecord& base, const opt::ScenarioSpec& spec,
                                      opt::Plan plan);

/// `base` with every what-if in `scenarios` applied.
aps::PlanningInstance effective_instance(const aps::PlanningInstance& base,
                                         const std::vector<opt::ScenarioSpec>& scenarios);

}  // namespace planchat::chat
