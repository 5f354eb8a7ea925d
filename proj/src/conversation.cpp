#include "planchat/conversation.hpp"

#include <fmt/format.h>

#include "planchat/handlers.hpp"
#include "planchat/text.hpp"

namespace planchat::chat {

using nlohmann::json;

void to_json(json& j, const AssistantResponse& r) {
    j = {{"role", "assistant"},
         {"text", r.text},
         {"renderables", r.renderables},
         {"steps", r.steps},
         {"tasks", r.tasks},
         {"timestamp", r.timestamp}};
}

std::string ask_clarification(const PendingClarification& pending, const tools::ToolContract& contract,
                              const SessionState& session) {
    std::vector<std::string> asks;
    for (const auto& name : pending.missing) {
        if (name == "model") {
            std::vector<std::string> ids;
            for (const auto& m : session.models) ids.push_back(m.id);
            asks.push_back(fmt::format("model (which saved model to use: {})", fmt::join(ids, ", ")));
            continue;
        }
        const auto* p = contract.find_param(name);
        asks.push_back(p && !p->description.empty() ? fmt::format("{} ({})", name, p->description) : name);
    }
    return fmt::format("I can answer this with the {} tool, but I still need: {}. Could you provide {}?", contract.id,
                       fmt::join(asks, "; "), pending.missing.size() == 1 ? "it" : "them");
}

Assistant::Assistant(tools::BoundCatalog catalog, std::unique_ptr<retrieval::Embedder> embedder,
                     std::unique_ptr<llm::CompletionClient> client, llm::PromptSet prompts, Clock clock,
                     AssistantConfig config)
    : catalog_(std::move(catalog)),
      embedder_(std::move(embedder)),
      index_(retrieval::index_catalog(catalog_, *embedder_)),
      client_(std::move(client)),
      fallback_([&] {
          std::vector<tools::ToolContract> contracts;
          for (const auto& t : catalog_.tools()) contracts.push_back(t.contract);
          return llm::catalog_keywords(contracts);
      }()),
      prompts_(std::move(prompts)),
      clock_(std::move(clock)),
      config_(config) {}

ToolEnv Assistant::env(llm::CompletionClient& client) { return ToolEnv{catalog_, client, prompts_}; }

AssistantResponse Assistant::reply(SessionState& session, AssistantResponse resp) {
    resp.timestamp = clock_();
    session.messages.push_back({llm::Role::Assistant, resp.text, resp.timestamp});
    return resp;
}

AssistantResponse Assistant::run_tool(SessionState& session, const tools::BoundTool& tool,
                                      const std::vector<llm::Message>& conversation, const std::string& text,
                                      const PendingClarification* pending, AssistantResponse resp) {
    const auto& contract = tool.contract;
    std::variant<Invocation, MissingParams> prepared;
    try {
        try {
            prepared = prepare_invocation(tool, session, conversation, text, env(*client_), pending, &resp.steps);
        } catch (const llm::ClientFailure&) {
            resp.steps.push_back("Language model unavailable; using the offline extractor");
            prepared = prepare_invocation(tool, session, conversation, text, env(fallback_), pending, &resp.steps);
        }
    } catch (const NoInstanceLoaded& e) {
        auto& task = begin_task(session, contract.id, clock_());
        resp.tasks.push_back(finish_task(session, task.seq, TaskStatus::Failed, e.what(), clock_()));
        session.pending.reset();
        resp.steps.push_back("Model selection failed: no planning data loaded");
        resp.text = "Sorry, the model selection step failed: no planning data is loaded in this session yet. "
                    "Upload a dataset first.";
        return reply(session, std::move(resp));
    }

    if (auto* missing = std::get_if<MissingParams>(&prepared)) {
        PendingClarification next{contract.id, missing->model_id, missing->collected, missing->names,
                                  pending ? pending->attempts + 1 : 0};
        if (next.attempts >= kMaxClarifications) {
            session.pending.reset();
            resp.steps.push_back("Clarification attempts exhausted; request dropped");
            resp.text = fmt::format(
                "I still could not get {} for the {} tool, so I have dropped that request. Please ask again with "
                "all the details in one message.",
                fmt::join(missing->names, ", "), contract.id);
            return reply(session, std::move(resp));
        }
        resp.text = ask_clarification(next, contract, session);
        resp.steps.push_back(fmt::format("Asked for {}", fmt::join(missing->names, ", ")));
        session.pending = std::move(next);
        return reply(session, std::move(resp));
    }

    session.pending.reset();
    const auto& inv = std::get<Invocation>(prepared);
    auto& task = begin_task(session, contract.id, clock_());
    const auto seq = task.seq;
    tools::ToolOutput out;
    try {
        out = execute(inv, session, env(*client_));
    } catch (const tools::HandlerError& e) {
        resp.tasks.push_back(finish_task(session, seq, TaskStatus::Failed, e.what(), clock_()));
        resp.steps.push_back(fmt::format("Tool {} failed at {}", contract.id, e.stage()));
        resp.text = fmt::format("Sorry, the {} tool failed during the {} step: {}", contract.id, e.stage(), e.detail());
        return reply(session, std::move(resp));
    }
    resp.steps.push_back(fmt::format("Executed {}", contract.id));
    resp.tasks.push_back(finish_task(session, seq, TaskStatus::Done, out.nl_text, clock_()));
    resp.text = llm::refine_response(conversation, text, out.nl_text, *client_, prompts_);
    resp.steps.push_back("Refined the tool output into a reply");
    resp.renderables = std::move(out.renderables);
    return reply(session, std::move(resp));
}

AssistantResponse Assistant::handle_message(SessionState& session, const std::string& text) {
    if (text::trim(text).empty()) throw std::invalid_argument("empty message");
    auto conversation = llm::tail(session.messages);
    session.messages.push_back({llm::Role::User, text, clock_()});
    AssistantResponse resp;

    if (session.pending) {
        const auto pending = *session.pending;
        const auto* tool = catalog_.find(pending.tool_id);
        if (tool) {
            resp.steps.push_back(fmt::format("Continuing clarification for {}", pending.tool_id));
            return run_tool(session, *tool, conversation, text, &pending, std::move(resp));
        }
        session.pending.reset();
    }

    const aps::PlanningInstance* inst = nullptr;
    if (!session.models.empty()) {
        auto it = session.instances.find(session.models.back().instance_id);
        if (it != session.instances.end()) inst = &it->second;
    }
    llm::Intent intent;
    try {
        intent = llm::classify_intent(conversation, text, *client_, prompts_, inst);
    } catch (const llm::ClientFailure&) {
        resp.steps.push_back("Language model unavailable; classified offline");
        intent = llm::classify_intent(conversation, text, fallback_, prompts_, inst);
    }
    resp.steps.push_back(fmt::format("Classified intent as {}", llm::to_string(intent)));

    if (intent == llm::Intent::CasualConversation) {
        resp.text = llm::refine_response(conversation, text, llm::kNoToolOutput, *client_, prompts_);
        if (resp.text == llm::kNoToolOutput)
            resp.text = "Hello! Ask me about the production plan, or try a what-if or why-not scenario.";
        return reply(session, std::move(resp));
    }

    auto found = retrieval::retrieve(text, index_, config_.top_k, *embedder_, config_.tau);
    const auto& best = found.best();
    resp.steps.push_back(fmt::format("Retrieved tool {} (distance {})", best.tool_id, text::format_number(best.distance)));
    if (!found.confident) {
        session.tool_gaps.push_back({text, best.tool_id, best.distance, clock_()});
        resp.steps.push_back("No tool is close enough; logged a tool gap");
        const auto* nearest = catalog_.find(best.tool_id);
        resp.text = fmt::format(
            "I don't have a tool for that yet. The closest one is {}: {} I have logged this request so a new tool "
            "can be considered.",
            best.tool_id, nearest ? nearest->contract.description : "");
        return reply(session, std::move(resp));
    }
    return run_tool(session, *catalog_.find(best.tool_id), conversation, text, nullptr, std::move(resp));
}

}  // namespace planchat::chat
