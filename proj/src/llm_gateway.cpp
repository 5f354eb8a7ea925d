#include "planchat/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "planchat/http_client.hpp"
#include "planchat/retriever.hpp"
#include "planchat/text.hpp"

namespace planchat::llm {

using nlohmann::json;

std::string to_string(Role r) { return r == Role::User ? "user" : "assistant"; }

void to_json(json& j, const Message& m) {
    j = {{"role", to_string(m.role)}, {"text", m.text}, {"timestamp", m.timestamp}};
}

void from_json(const json& j, Message& m) {
    m.role = j.at("role").get<std::string>() == "user" ? Role::User : Role::Assistant;
    m.text = j.at("text").get<std::string>();
    m.timestamp = j.at("timestamp").get<Timestamp>();
}

std::vector<Message> tail(const std::vector<Message>& log, std::size_t n) {
    auto first = log.size() > n ? log.end() - static_cast<std::ptrdiff_t>(n) : log.begin();
    return {first, log.end()};
}

std::string to_string(Task t) {
    switch (t) {
        case Task::IntentClassification: return "intent_classification";
        case Task::RefineResponse: return "refine_response";
        case Task::ParameterExtraction: return "parameter_extraction";
        case Task::ModelSelection: return "model_selection";
    }
    return "intent_classification";
}

std::string to_string(Intent i) {
    return i == Intent::OperationsPlanning ? "OPERATIONS_PLANNING" : "CASUAL_CONVERSATION";
}

// ---------------------------------------------------------------------------
// Templates

std::set<std::string> PromptTemplate::allowed_slots(Task task) {
    switch (task) {
        case Task::IntentClassification: return {"conversation", "query", "options"};
        case Task::RefineResponse: return {"conversation", "query", "tool_output"};
        case Task::ParameterExtraction: return {"conversation", "query", "schema"};
        case Task::ModelSelection: return {"conversation", "query", "candidates"};
    }
    return {};
}

std::string PromptTemplate::fill(const std::map<std::string, std::string>& values) const {
    const auto allowed = allowed_slots(task);
    for (const auto& slot : tools::template_placeholders(text)) {
        if (!allowed.count(slot)) throw TemplateError(fmt::format("{}: undeclared slot {{{}}}", to_string(task), slot));
        if (!values.count(slot)) throw TemplateError(fmt::format("{}: slot {{{}}} not filled", to_string(task), slot));
    }
    json payload(values);
    return tools::render_nl_output(text, payload);
}

PromptSet load_prompts(const std::filesystem::path& dir) {
    PromptSet set;
    for (auto task : {Task::IntentClassification, Task::RefineResponse, Task::ParameterExtraction,
                      Task::ModelSelection}) {
        auto path = dir / (to_string(task) + ".txt");
        std::ifstream in(path);
        if (!in) throw TemplateError("missing prompt template " + path.string());
        std::stringstream ss;
        ss << in.rdbuf();
        PromptTemplate t{task, ss.str()};
        const auto allowed = PromptTemplate::allowed_slots(task);
        for (const auto& slot : tools::template_placeholders(t.text))
            if (!allowed.count(slot))
                throw TemplateError(fmt::format("{}: undeclared slot {{{}}}", path.string(), slot));
        set.templates.emplace(task, std::move(t));
    }
    return set;
}

namespace {

std::string render_conversation(const std::vector<Message>& conversation) {
    if (conversation.empty()) return "(empty)";
    std::string out;
    for (const auto& m : conversation) out += fmt::format("{}: {}\n", to_string(m.role), m.text);
    out.pop_back();
    return out;
}

std::string render_schema(const std::vector<tools::ParamSpec>& schema) {
    std::string out;
    for (const auto& p : schema)
        out += fmt::format("- {}: {}{}, {}\n", p.name, p.type_label(), p.required ? " (required)" : "", p.description);
    if (!out.empty()) out.pop_back();
    return out;
}

std::string render_candidates(const std::vector<Candidate>& candidates) {
    std::string out;
    for (const auto& c : candidates) out += fmt::format("- {}: {}\n", c.id, c.name);
    if (!out.empty()) out.pop_back();
    return out;
}

// Word-boundary position of the last occurrence of `needle` in `haystack`, in
// units of words, after both are reduced to lowercase alphanumeric words.
std::optional<std::size_t> last_phrase_position(const std::string& haystack, const std::string& needle) {
    auto h = text::words(haystack);
    auto n = text::words(needle);
    if (n.empty() || n.size() > h.size()) return std::nullopt;
    for (std::size_t i = h.size() - n.size() + 1; i-- > 0;) {
        if (std::equal(n.begin(), n.end(), h.begin() + static_cast<std::ptrdiff_t>(i))) return i;
    }
    return std::nullopt;
}

// Question and filler words that appear in example queries but do not signal planning.
const std::set<std::string> kGenericWords{
    "about", "all",    "any",  "can",   "could", "get",   "give",    "happens", "has",   "have",   "how",
    "if",    "instead", "into", "its",  "let",   "many",  "much",    "not",     "please", "see",   "should",
    "suppose", "take", "tell", "than",  "their", "there", "want",    "what",    "when",  "which",  "who",
    "whether", "why",  "will", "would", "your",  "it",    "am",      "there"};

bool is_number_token(const std::string& w) {
    return !w.empty() && std::all_of(w.begin(), w.end(), [](unsigned char c) { return std::isdigit(c); });
}

const std::regex kDateRe(R"((\d{4}-\d{2}-\d{2}))");
const std::regex kNumberRe(R"((^|[^A-Za-z0-9_.\-])(\d+(?:\.\d+)?)(?:\s*(?:kg|units?|hours?|hrs|h)\b)?)");
const std::regex kPlanIdRe(R"(\bplan-\d+\b)", std::regex::icase);

}  // namespace

// ---------------------------------------------------------------------------
// Clients

HttpCompletionClient::HttpCompletionClient(HttpClientConfig config) : config_(std::move(config)) {}

std::string HttpCompletionClient::complete(const CompletionRequest& request) {
    json body{{"prompt", request.prompt}, {"max_tokens", request.max_tokens}};
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0 && !config_.backoff.empty()) {
            auto idx = std::min<std::size_t>(static_cast<std::size_t>(attempt - 1), config_.backoff.size() - 1);
            std::this_thread::sleep_for(config_.backoff[idx]);
        }
        try {
            auto reply = net::post_json(config_.endpoint, body, config_.timeout);
            if (!reply.contains("text") || !reply["text"].is_string()) {
                last_error = "completion reply lacks a text field";
                continue;
            }
            return reply["text"].get<std::string>();
        } catch (const net::HttpError& e) {
            last_error = e.what();
        }
    }
    throw ClientFailure(fmt::format("completion failed after {} attempts: {}", config_.max_retries + 1, last_error));
}

StubClient::StubClient(std::set<std::string> keywords) : keywords_(std::move(keywords)) {}

std::set<std::string> catalog_keywords(const std::vector<tools::ToolContract>& catalog) {
    std::set<std::string> out;
    for (const auto& c : catalog)
        for (const auto& e : c.examples)
            for (const auto& w : text::words(e))
                if (w.size() > 1 && !is_number_token(w) && !retrieval::HashEmbedder::is_stop_word(w) &&
                    !kGenericWords.count(w))
                    out.insert(w);
    return out;
}

std::string StubClient::complete(const CompletionRequest& request) {
    switch (request.task) {
        case Task::IntentClassification: return classify(request.context);
        case Task::RefineResponse: return refine(request.context);
        case Task::ParameterExtraction: return extract(request.context);
        case Task::ModelSelection: return select(request.context);
    }
    return {};
}

std::string StubClient::classify(const PromptContext& ctx) const {
    std::set<std::string> vocab = keywords_;
    if (ctx.instance) {
        auto add = [&](const std::string& s) {
            for (auto& w : text::words(s)) vocab.insert(w);
        };
        for (const auto& p : ctx.instance->plants) add(p.id), add(p.name);
        for (const auto& p : ctx.instance->products) add(p.id), add(p.name);
        for (const auto& m : ctx.instance->materials) add(m.id), add(m.name);
        for (const auto& o : ctx.instance->orders) add(o.id);
    }
    for (const auto& w : text::words(ctx.query))
        if (vocab.count(w)) return to_string(Intent::OperationsPlanning);
    return to_string(Intent::CasualConversation);
}

std::string StubClient::refine(const PromptContext& ctx) const {
    if (ctx.tool_output == kNoToolOutput)
        return "Hello! I can answer questions about the production plan, run what-if and why-not scenarios, "
               "compare plans and show them as tables.";
    return fmt::format("Regarding your question: {} — {}", ctx.query, ctx.tool_output);
}

std::string StubClient::extract(const PromptContext& ctx) const {
    json out = json::object();
    std::string rest = ctx.query;

    std::vector<std::string> dates;
    for (std::sregex_iterator it(ctx.query.begin(), ctx.query.end(), kDateRe), end; it != end; ++it)
        dates.push_back((*it)[1]);
    rest = std::regex_replace(rest, kDateRe, " ");
    rest = std::regex_replace(rest, kPlanIdRe, " ");

    std::vector<double> numbers;
    for (std::sregex_iterator it(rest.begin(), rest.end(), kNumberRe), end; it != end; ++it)
        numbers.push_back(std::stod((*it)[2]));

    // Entity mentions: n-grams of query words, longest first, each word used once.
    const auto toks = text::words(ctx.query);
    struct Hit {
        std::size_t pos;
        aps::EntityRef ref;
    };
    std::map<aps::EntityKind, std::vector<Hit>> hits;
    if (ctx.instance) {
        std::set<aps::EntityKind> kinds;
        for (const auto& p : ctx.schema)
            if (p.type == tools::ParamType::Entity) kinds.insert(p.kind);
        for (auto kind : kinds) {
            std::vector<bool> used(toks.size(), false);
            for (std::size_t n = std::min<std::size_t>(4, toks.size()); n >= 1; --n) {
                for (std::size_t i = 0; i + n <= toks.size(); ++i) {
                    if (std::any_of(used.begin() + static_cast<std::ptrdiff_t>(i),
                                    used.begin() + static_cast<std::ptrdiff_t>(i + n), [](bool b) { return b; }))
                        continue;
                    std::string phrase = toks[i];
                    for (std::size_t k = 1; k < n; ++k) phrase += " " + toks[i + k];
                    // Short or function words would substring-match inside names.
                    if (n == 1 && (phrase.size() < 4 || retrieval::HashEmbedder::is_stop_word(phrase) ||
                                   kGenericWords.count(phrase))) {
                        auto exact = aps::resolve_entity(phrase, *ctx.instance, kind);
                        if (!exact.matched() || text::normalize_phrase(exact.match->id) != phrase) continue;
                    }
                    auto r = aps::resolve_entity(phrase, *ctx.instance, kind);
                    if (!r.matched()) continue;
                    hits[kind].push_back({i, *r.match});
                    for (std::size_t k = 0; k < n; ++k) used[i + k] = true;
                }
            }
            std::sort(hits[kind].begin(), hits[kind].end(), [](const Hit& a, const Hit& b) { return a.pos < b.pos; });
        }
    }

    // Plan references: explicit plan ids, then plan names, in order of mention.
    std::vector<std::pair<std::size_t, std::string>> plan_refs;
    for (const auto& c : ctx.plans) {
        auto pos = last_phrase_position(ctx.query, c.id);
        if (!pos && !c.name.empty()) pos = last_phrase_position(ctx.query, c.name);
        if (pos) plan_refs.push_back({*pos, c.id});
    }
    std::sort(plan_refs.begin(), plan_refs.end());
    std::set<std::string> seen_plans;
    plan_refs.erase(std::remove_if(plan_refs.begin(), plan_refs.end(),
                                   [&](const auto& r) { return !seen_plans.insert(r.second).second; }),
                    plan_refs.end());

    std::size_t next_date = 0, next_number = 0, next_plan = 0;
    std::map<aps::EntityKind, std::size_t> next_entity;
    for (const auto& p : ctx.schema) {
        switch (p.type) {
            case tools::ParamType::Date:
                if (next_date < dates.size()) out[p.name] = dates[next_date++];
                break;
            case tools::ParamType::Number:
                if (next_number < numbers.size()) out[p.name] = numbers[next_number++];
                break;
            case tools::ParamType::Entity: {
                auto& list = hits[p.kind];
                auto& next = next_entity[p.kind];
                if (p.multiple) {
                    json ids = json::array();
                    for (; next < list.size(); ++next)
                        if (std::find(ids.begin(), ids.end(), list[next].ref.id) == ids.end())
                            ids.push_back(list[next].ref.id);
                    if (!ids.empty()) out[p.name] = ids;
                } else if (next < list.size()) {
                    out[p.name] = list[next++].ref.id;
                }
                break;
            }
            case tools::ParamType::Enum:
                for (const auto& v : p.values)
                    if (text::contains_phrase(ctx.query, v)) {
                        out[p.name] = v;
                        break;
                    }
                break;
            case tools::ParamType::Plan:
                if (next_plan < plan_refs.size()) out[p.name] = plan_refs[next_plan++].second;
                break;
            case tools::ParamType::String:
                break;
        }
    }
    return out.dump();
}

std::string StubClient::select(const PromptContext& ctx) const {
    auto mentioned = [&](const std::string& msg) -> std::optional<std::string> {
        std::optional<std::string> best;
        std::size_t best_pos = 0;
        for (const auto& c : ctx.candidates) {
            auto pos = last_phrase_position(msg, c.id);
            auto by_name = last_phrase_position(msg, c.name);
            if (by_name && (!pos || *by_name > *pos)) pos = by_name;
            if (pos && (!best || *pos >= best_pos)) {
                best = c.id;
                best_pos = *pos;
            }
        }
        return best;
    };
    if (auto hit = mentioned(ctx.query)) return *hit;
    for (auto it = ctx.conversation.rbegin(); it != ctx.conversation.rend(); ++it)
        if (auto hit = mentioned(it->text)) return *hit;
    return ctx.candidates.empty() ? "unknown" : ctx.candidates.back().id;
}

GatewayConfig GatewayConfig::from_env() {
    GatewayConfig c;
    if (const char* v = std::getenv("LLM_ENDPOINT")) c.llm_endpoint = v;
    if (const char* v = std::getenv("EMBED_ENDPOINT")) c.embed_endpoint = v;
    if (const char* v = std::getenv("LLM_TIMEOUT_S")) {
        char* end = nullptr;
        double s = std::strtod(v, &end);
        if (end != v && s > 0) c.llm_timeout = std::chrono::milliseconds(static_cast<long>(s * 1000));
    }
    return c;
}

std::unique_ptr<CompletionClient> make_client(const GatewayConfig& config, std::set<std::string> keywords) {
    if (config.llm_endpoint.empty()) return std::make_unique<StubClient>(std::move(keywords));
    HttpClientConfig http;
    http.endpoint = config.llm_endpoint;
    http.timeout = config.llm_timeout;
    return std::make_unique<HttpCompletionClient>(std::move(http));
}

// ---------------------------------------------------------------------------
// Tasks

Intent parse_intent(const std::string& completion) {
    auto lower = text::to_lower(completion);
    auto ops = lower.find("operations_planning");
    auto casual = lower.find("casual_conversation");
    if (ops == std::string::npos && casual == std::string::npos) return Intent::CasualConversation;
    return ops < casual ? Intent::OperationsPlanning : Intent::CasualConversation;
}

Intent classify_intent(const std::vector<Message>& conversation, const std::string& query, CompletionClient& client,
                       const PromptSet& prompts, const aps::PlanningInstance* instance) {
    if (text::trim(query).empty()) throw std::invalid_argument("empty query");
    CompletionRequest req{Task::IntentClassification, {}, 16, {}};
    req.context.conversation = tail(conversation);
    req.context.query = query;
    req.context.instance = instance;
    req.prompt = prompts.at(req.task).fill({{"conversation", render_conversation(req.context.conversation)},
                                            {"query", query},
                                            {"options", "CASUAL_CONVERSATION, OPERATIONS_PLANNING"}});
    return parse_intent(client.complete(req));
}

std::string refine_response(const std::vector<Message>& conversation, const std::string& query,
                            const std::string& tool_nl_text, CompletionClient& client, const PromptSet& prompts) {
    CompletionRequest req{Task::RefineResponse, {}, 256, {}};
    req.context.conversation = tail(conversation);
    req.context.query = query;
    req.context.tool_output = tool_nl_text;
    req.prompt = prompts.at(req.task).fill({{"conversation", render_conversation(req.context.conversation)},
                                            {"query", query},
                                            {"tool_output", tool_nl_text}});
    try {
        auto out = text::trim(client.complete(req));
        if (!out.empty()) return out;
    } catch (const ClientFailure&) {
    }
    return tool_nl_text;
}

std::optional<std::string> first_json_block(const std::string& s) {
    auto start = s.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false, escaped = false;
        for (std::size_t i = start; i < s.size(); ++i) {
            char c = s[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) return s.substr(start, i - start + 1);
        }
        start = s.find('{', start + 1);
    }
    return std::nullopt;
}

std::optional<json> validate_param(const tools::ParamSpec& spec, const json& value, const aps::PlanningInstance* instance,
                                   const std::vector<Candidate>& plans) {
    auto one = [&](const json& v) -> std::optional<json> {
        switch (spec.type) {
            case tools::ParamType::Date: {
                if (!v.is_string()) return std::nullopt;
                auto d = parse_date(text::trim(v.get<std::string>()));
                if (!d) return std::nullopt;
                return json(format_date(*d));
            }
            case tools::ParamType::Number: {
                double x;
                if (v.is_number()) {
                    x = v.get<double>();
                } else if (v.is_string()) {
                    auto s = text::trim(v.get<std::string>());
                    char* end = nullptr;
                    x = std::strtod(s.c_str(), &end);
                    if (s.empty() || end != s.c_str() + s.size()) return std::nullopt;
                } else {
                    return std::nullopt;
                }
                if (!std::isfinite(x)) return std::nullopt;
                return json(x);
            }
            case tools::ParamType::Entity: {
                if (!v.is_string() || !instance) return std::nullopt;
                auto r = aps::resolve_entity(v.get<std::string>(), *instance, spec.kind);
                if (!r.matched()) return std::nullopt;
                return json(r.match->id);
            }
            case tools::ParamType::Enum: {
                if (!v.is_string()) return std::nullopt;
                auto s = text::normalize_phrase(v.get<std::string>());
                for (const auto& allowed : spec.values)
                    if (text::normalize_phrase(allowed) == s) return json(allowed);
                return std::nullopt;
            }
            case tools::ParamType::Plan: {
                if (!v.is_string()) return std::nullopt;
                auto s = text::normalize_phrase(v.get<std::string>());
                for (const auto& p : plans)
                    if (text::normalize_phrase(p.id) == s || (!p.name.empty() && text::normalize_phrase(p.name) == s))
                        return json(p.id);
                return std::nullopt;
            }
            case tools::ParamType::String:
                if (!v.is_string() || text::trim(v.get<std::string>()).empty()) return std::nullopt;
                return std::optional<json>(std::in_place, v);
        }
        return std::nullopt;
    };
    if (!spec.multiple) return one(value);
    json list = json::array();
    for (const auto& v : value.is_array() ? value : json::array({value})) {
        auto ok = one(v);
        if (!ok) return std::nullopt;
        if (std::find(list.begin(), list.end(), *ok) == list.end()) list.push_back(*ok);
    }
    if (list.empty()) return std::nullopt;
    return list;
}

Extraction parse_extraction(const std::string& completion, const std::vector<tools::ParamSpec>& schema,
                            const aps::PlanningInstance* instance, const std::vector<Candidate>& plans) {
    Extraction out;
    auto block = first_json_block(completion);
    json raw = block ? json::parse(*block, nullptr, false) : json();
    if (!block || raw.is_discarded() || !raw.is_object()) {
        out.unparseable = true;
        for (const auto& p : schema)
            if (p.required) out.missing.push_back(p.name);
        return out;
    }
    for (const auto& p : schema) {
        if (!raw.contains(p.name) || raw[p.name].is_null()) {
            if (p.required) out.missing.push_back(p.name);
            continue;
        }
        auto v = validate_param(p, raw[p.name], instance, plans);
        if (v)
            out.params[p.name] = *v;
        else
            out.missing.push_back(p.name);
    }
    return out;
}

Extraction extract_parameters(const std::vector<tools::ParamSpec>& schema, const std::vector<Message>& conversation,
                              const std::string& query, CompletionClient& client, const PromptSet& prompts,
                              const aps::PlanningInstance* instance, const std::vector<Candidate>& plans) {
    CompletionRequest req{Task::ParameterExtraction, {}, 256, {}};
    req.context.conversation = tail(conversation);
    req.context.query = query;
    req.context.schema = schema;
    req.context.instance = instance;
    req.context.plans = plans;
    req.prompt = prompts.at(req.task).fill({{"conversation", render_conversation(req.context.conversation)},
                                            {"query", query},
                                            {"schema", render_schema(schema)}});
    return parse_extraction(client.complete(req), schema, instance, plans);
}

std::optional<std::string> parse_model_choice(const std::string& completion, const std::vector<Candidate>& candidates) {
    // Longer ids first so that "baseline_v2" is not read as "baseline".
    std::vector<const Candidate*> by_len;
    for (const auto& c : candidates) by_len.push_back(&c);
    std::stable_sort(by_len.begin(), by_len.end(),
                     [](const Candidate* a, const Candidate* b) { return a->id.size() > b->id.size(); });
    for (const auto* c : by_len)
        if (completion.find(c->id) != std::string::npos) return c->id;
    auto lower = text::normalize_phrase(completion);
    for (const auto* c : by_len)
        if (!c->name.empty() && lower.find(text::normalize_phrase(c->name)) != std::string::npos) return c->id;
    return std::nullopt;
}

std::optional<std::string> select_model(const std::vector<Message>& conversation, const std::string& query,
                                        const std::vector<Candidate>& candidates, CompletionClient& client,
                                        const PromptSet& prompts) {
    if (candidates.empty()) throw std::invalid_argument("no candidate models");
    if (candidates.size() == 1) return candidates.front().id;
    CompletionRequest req{Task::ModelSelection, {}, 32, {}};
    req.context.conversation = tail(conversation);
    req.context.query = query;
    req.context.candidates = candidates;
    req.prompt = prompts.at(req.task).fill({{"conversation", render_conversation(req.context.conversation)},
                                            {"query", query},
                                            {"candidates", render_candidates(candidates)}});
    try {
        return parse_model_choice(client.complete(req), candidates);
    } catch (const ClientFailure&) {
        return std::nullopt;
    }
}

}  // namespace planchat::llm
