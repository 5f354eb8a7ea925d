#pragma once

#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planchat/contracts.hpp"
#include "planchat/llm_gateway.hpp"
#include "planchat/retriever.hpp"
#include "planchat/session.hpp"
#include "planchat/tool_manager.hpp"

namespace planchat::chat {

struct AssistantResponse {
    std::string text;
    std::vector<tools::Table> renderables;
    std::vector<std::string> steps;
    std::vector<TaskRecord> tasks;  // records created by this turn
    Timestamp timestamp = 0;
};

void to_json(nlohmann::json& j, const AssistantResponse& r);

/// Most clarification questions asked for one pending invocation before giving up.
inline constexpr int kMaxClarifications = 2;

/// Question confirming the tool and listing what is still missing.
std::string ask_clarification(const PendingClarification& pending, const tools::ToolContract& contract,
                              const SessionState& session);

struct AssistantConfig {
    double tau = retrieval::kDefaultTau;
    std::size_t top_k = 3;
};

/// The message pipeline: intent, retrieval, tool management, refinement.
class Assistant {
public:
    Assistant(tools::BoundCatalog catalog, std::unique_ptr<retrieval::Embedder> embedder,
              std::unique_ptr<llm::CompletionClient> client, llm::PromptSet prompts, Clock clock = now_millis,
              AssistantConfig config = {});

    AssistantResponse handle_message(SessionState& session, const std::string& text);

    const tools::BoundCatalog& catalog() const { return catalog_; }
    const retrieval::VectorIndex& index() const { return index_; }
    const retrieval::Embedder& embedder() const { return *embedder_; }
    Timestamp now() const { return clock_(); }

private:
    AssistantResponse run_tool(SessionState& session, const tools::BoundTool& tool,
                               const std::vector<llm::Message>& conversation, const std::string& text,
                               const PendingClarification* pending, AssistantResponse resp);
    AssistantResponse reply(SessionState& session, AssistantResponse resp);
    ToolEnv env(llm::CompletionClient& client);

    tools::BoundCatalog catalog_;
    std::unique_ptr<retrieval::Embedder> embedder_;
    retrieval::VectorIndex index_;
    std::unique_ptr<llm::CompletionClient> client_;
    llm::StubClient fallback_;
    llm::PromptSet prompts_;
    Clock clock_;
    AssistantConfig config_;
};

}  // namespace planchat::chat
