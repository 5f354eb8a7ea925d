#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planchat/aps_data.hpp"
#include "planchat/contracts.hpp"
#include "planchat/dates.hpp"

namespace planchat::llm {

enum class Role { User, Assistant };

std::string to_string(Role r);

struct Message {
    Role role = Role::User;
    std::string text;
    Timestamp timestamp = 0;
    bool operator==(const Message&) const = default;
};

void to_json(nlohmann::json& j, const Message& m);
void from_json(const nlohmann::json& j, Message& m);

/// Messages fed to prompts: the last `n` of `log`.
std::vector<Message> tail(const std::vector<Message>& log, std::size_t n = 10);

enum class Task { IntentClassification, RefineResponse, ParameterExtraction, ModelSelection };

std::string to_string(Task t);

class TemplateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PromptTemplate {
    Task task;
    std::string text;

    /// Slots this task may use.
    static std::set<std::string> allowed_slots(Task task);
    /// Throws TemplateError on an undeclared or unfilled slot.
    std::string fill(const std::map<std::string, std::string>& values) const;
};

struct PromptSet {
    std::map<Task, PromptTemplate> templates;
    const PromptTemplate& at(Task t) const { return templates.at(t); }
};

/// Loads {intent_classification,refine_response,parameter_extraction,model_selection}.txt.
PromptSet load_prompts(const std::filesystem::path& dir);

struct Candidate {
    std::string id;
    std::string name;
};

/// What the prompt was built from. Remote clients only read `prompt`; the stub
/// answers from these fields so that offline runs need no text parsing of prompts.
struct PromptContext {
    std::vector<Message> conversation;  // tail, oldest first, current query excluded
    std::string query;
    std::string tool_output;
    std::vector<tools::ParamSpec> schema;
    const aps::PlanningInstance* instance = nullptr;
    std::vector<Candidate> candidates;  // models, oldest first
    std::vector<Candidate> plans;       // plan references: id plus a name to match
};

struct CompletionRequest {
    Task task;
    std::string prompt;
    int max_tokens = 256;
    PromptContext context;
};

class ClientFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class CompletionClient {
public:
    virtual ~CompletionClient() = default;
    /// Returns completion text or throws ClientFailure.
    virtual std::string complete(const CompletionRequest& request) = 0;
    virtual bool is_stub() const { return false; }
};

struct HttpClientConfig {
    std::string endpoint;
    std::chrono::milliseconds timeout = std::chrono::seconds(30);
    int max_retries = 2;
    std::vector<std::chrono::milliseconds> backoff{std::chrono::seconds(1), std::chrono::seconds(2)};
};

/// POSTs {"prompt","max_tokens"} and reads {"text"}.
class HttpCompletionClient : public CompletionClient {
public:
    explicit HttpCompletionClient(HttpClientConfig config);
    std::string complete(const CompletionRequest& request) override;
    const HttpClientConfig& config() const { return config_; }

private:
    HttpClientConfig config_;
};

/// Rule-based offline client.
class StubClient : public CompletionClient {
public:
    /// `keywords`: planning vocabulary, normally catalog_keywords(catalog).
    explicit StubClient(std::set<std::string> keywords);
    std::string complete(const CompletionRequest& request) override;
    bool is_stub() const override { return true; }

    const std::set<std::string>& keywords() const { return keywords_; }

private:
    std::string classify(const PromptContext& ctx) const;
    std::string refine(const PromptContext& ctx) const;
    std::string extract(const PromptContext& ctx) const;
    std::string select(const PromptContext& ctx) const;

    std::set<std::string> keywords_;
};

/// Words of the catalog's example queries that signal a planning request.
std::set<std::string> catalog_keywords(const std::vector<tools::ToolContract>& catalog);

struct GatewayConfig {
    std::string llm_endpoint;
    std::string embed_endpoint;
    std::chrono::milliseconds llm_timeout = std::chrono::seconds(30);

    /// Reads LLM_ENDPOINT, LLM_TIMEOUT_S and EMBED_ENDPOINT.
    static GatewayConfig from_env();
};

/// Stub when no endpoint is configured.
std::unique_ptr<CompletionClient> make_client(const GatewayConfig& config, std::set<std::string> keywords);

enum class Intent { CasualConversation, OperationsPlanning };

std::string to_string(Intent i);

/// Case-insensitive search for either label; the earliest one wins, neither means casual.
Intent parse_intent(const std::string& completion);

Intent classify_intent(const std::vector<Message>& conversation, const std::string& query, CompletionClient& client,
                       const PromptSet& prompts, const aps::PlanningInstance* instance = nullptr);

/// Marker passed as tool output for casual turns.
inline const std::string kNoToolOutput = "(no tool output)";

/// Falls back to `tool_nl_text` when the client fails.
std::string refine_response(const std::vector<Message>& conversation, const std::string& query,
                            const std::string& tool_nl_text, CompletionClient& client, const PromptSet& prompts);

struct Extraction {
    nlohmann::json params = nlohmann::json::object();
    std::vector<std::string> missing;  // schema order
    bool unparseable = false;
};

/// First balanced {...} block of `text`, if any.
std::optional<std::string> first_json_block(const std::string& text);

/// Checks one raw value against its spec and canonicalizes it (entity ids,
/// ISO dates). nullopt when the value is invalid.
std::optional<nlohmann::json> validate_param(const tools::ParamSpec& spec, const nlohmann::json& value,
                                             const aps::PlanningInstance* instance,
                                             const std::vector<Candidate>& plans);

/// Parses a completion into validated parameters. Invalid values are dropped and
/// named in `missing` together with absent required parameters.
Extraction parse_extraction(const std::string& completion, const std::vector<tools::ParamSpec>& schema,
                            const aps::PlanningInstance* instance, const std::vector<Candidate>& plans);

Extraction extract_parameters(const std::vector<tools::ParamSpec>& schema, const std::vector<Message>& conversation,
                              const std::string& query, CompletionClient& client, const PromptSet& prompts,
                              const aps::PlanningInstance* instance, const std::vector<Candidate>& plans = {});

/// Exact id containment first, then case-insensitive name containment.
std::optional<std::string> parse_model_choice(const std::string& completion, const std::vector<Candidate>& candidates);

/// nullopt means Undetermined. One candidate is returned without calling the client.
std::optional<std::string> select_model(const std::vector<Message>& conversation, const std::string& query,
                                        const std::vector<Candidate>& candidates, CompletionClient& client,
                                        const PromptSet& prompts);

}  // namespace planchat::llm
