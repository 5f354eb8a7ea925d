#include "doctest.h"
#include "planchat/conversation.hpp"
#include "planchat/handlers.hpp"
#include "support/fixtures.hpp"
#include "support/scripted_client.hpp"

using namespace planchat;
using namespace planchat::chat;
using nlohmann::json;

namespace {

const tools::Catalog& contracts() {
    static const auto cat = tools::load_catalog(planchat::testing::data_dir() / "catalog");
    return cat;
}

llm::PromptSet prompts() { return llm::load_prompts(planchat::testing::data_dir() / "prompts"); }

Clock counter() {
    auto t = std::make_shared<Timestamp>(1000);
    return [t] { return ++*t; };
}

Assistant make_assistant(std::unique_ptr<llm::CompletionClient> client = nullptr,
                         tools::HandlerRegistry registry = tools::default_registry()) {
    if (!client) client = std::make_unique<llm::StubClient>(llm::catalog_keywords(contracts()));
    return Assistant(tools::bind_handlers(contracts(), registry), std::make_unique<retrieval::HashEmbedder>(),
                     std::move(client), prompts(), counter());
}

SessionState tire_session() {
    SessionState s;
    s.session_id = "c";
    add_instance(s, planchat::testing::load_fixture("tire_plant"));
    return s;
}

bool is_clarification(const AssistantResponse& r) { return r.text.rfind("I can answer this with the", 0) == 0; }

}  // namespace

TEST_CASE("casual turn") {
    auto a = make_assistant();
    auto s = tire_session();
    auto r = a.handle_message(s, "hello!");
    CHECK(r.tasks.empty());
    CHECK(r.renderables.empty());
    CHECK_FALSE(r.text.empty());
    REQUIRE(s.messages.size() == 2);
    CHECK(s.messages[0].role == llm::Role::User);
    CHECK(s.messages[1].role == llm::Role::Assistant);
    CHECK(s.messages[1].timestamp > s.messages[0].timestamp);
}

TEST_CASE("show the operations plan") {
    auto a = make_assistant();
    auto s = tire_session();
    auto r = a.handle_message(s, "Show me the operations plan");
    REQUIRE(r.renderables.size() == 1);
    CHECK(r.renderables[0].title == "production");
    CHECK_FALSE(r.renderables[0].rows.empty());
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].tool_id == "show_plan_table");
    CHECK(r.tasks[0].status == TaskStatus::Done);
    CHECK(r.tasks[0].finished >= r.tasks[0].started);
    CHECK(s.task_log.size() == 1);
    CHECK(r.steps.size() >= 4);
    CHECK(r.text.find("Regarding your question: Show me the operations plan") == 0);
}

TEST_CASE("rubber what-if end to end") {
    auto a = make_assistant();
    auto s = tire_session();
    auto r = a.handle_message(s, "How would receiving 100 kg of natural rubber on 2024-04-17 impact my plan?");
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].status == TaskStatus::Done);
    CHECK(s.plan_order.size() == 2);
    CHECK(s.models.back().scenarios.size() == 1);
    CHECK(r.text.find("changes the objective by -216") != std::string::npos);
}

TEST_CASE("missing parameters are asked for once, then the follow-up runs") {
    auto a = make_assistant();
    auto s = tire_session();
    auto q = a.handle_message(s, "add a receipt");
    CHECK(is_clarification(q));
    CHECK(q.text.find("add_receipt") != std::string::npos);
    auto pos_m = q.text.find("material");
    auto pos_q = q.text.find("quantity");
    auto pos_d = q.text.find("date");
    CHECK(pos_m < pos_q);
    CHECK(pos_q < pos_d);
    CHECK(pos_d != std::string::npos);
    CHECK(q.tasks.empty());
    CHECK(s.task_log.empty());
    REQUIRE(s.pending.has_value());
    CHECK(s.pending->missing == std::vector<std::string>{"material", "quantity", "date"});

    auto f = a.handle_message(s, "100 kg of natural rubber on 2024-04-17");
    CHECK_FALSE(is_clarification(f));
    REQUIRE(f.tasks.size() == 1);
    CHECK(f.tasks[0].tool_id == "add_receipt");
    CHECK(f.tasks[0].status == TaskStatus::Done);
    CHECK_FALSE(s.pending.has_value());
}

TEST_CASE("partial answers keep what was collected") {
    auto a = make_assistant();
    auto s = tire_session();
    a.handle_message(s, "add a receipt");
    auto second = a.handle_message(s, "natural rubber please");
    CHECK(is_clarification(second));
    CHECK(second.text.find("material") == std::string::npos);
    CHECK(s.pending->collected == json{{"material", "natural_rubber"}});
    auto third = a.handle_message(s, "100 kg on 2024-04-17");
    REQUIRE(third.tasks.size() == 1);
    CHECK(third.tasks[0].status == TaskStatus::Done);
}

TEST_CASE("clarification gives up after two follow-ups") {
    auto a = make_assistant();
    auto s = tire_session();
    CHECK(is_clarification(a.handle_message(s, "add a receipt")));
    CHECK(is_clarification(a.handle_message(s, "hmm")));
    CHECK(s.pending->attempts == 1);
    auto last = a.handle_message(s, "not sure");
    CHECK_FALSE(is_clarification(last));
    CHECK(last.text.find("dropped") != std::string::npos);
    CHECK_FALSE(s.pending.has_value());
    CHECK(s.task_log.empty());
}

TEST_CASE("unsupported planning query is logged as a tool gap") {
    SUBCASE("stub classifier") {
        auto a = make_assistant();
        auto s = tire_session();
        auto r = a.handle_message(s, "What is the weather forecast for the plant picnic?");
        REQUIRE(s.tool_gaps.size() == 1);
        CHECK(s.tool_gaps[0].best_distance > retrieval::kDefaultTau);
        CHECK(s.tool_gaps[0].query == "What is the weather forecast for the plant picnic?");
        CHECK(r.text.find(s.tool_gaps[0].best_tool_id) != std::string::npos);
        CHECK(r.tasks.empty());
    }
    SUBCASE("nonsense routed as planning") {
        auto stub = std::make_unique<llm::StubClient>(llm::catalog_keywords(contracts()));
        auto scripted = std::make_unique<planchat::testing::ScriptedClient>(stub.get());
        scripted->always(llm::Task::IntentClassification, "OPERATIONS_PLANNING");
        auto a = make_assistant(std::move(scripted));
        auto s = tire_session();
        a.handle_message(s, "qqq zzz xxx");
        REQUIRE(s.tool_gaps.size() == 1);
        CHECK(s.tool_gaps[0].best_distance == doctest::Approx(2.0));
    }
}

TEST_CASE("handler failure becomes a failed task") {
    auto reg = tools::default_registry();
    reg["display_production"] = [](tools::HandlerContext&) -> json { throw std::runtime_error("disk on fire"); };
    auto a = make_assistant(nullptr, reg);
    auto s = tire_session();
    auto r = a.handle_message(s, "Show me the operations plan");
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].status == TaskStatus::Failed);
    CHECK(r.text.find("display_production") != std::string::npos);
    CHECK(s.messages.size() == 2);
}

TEST_CASE("planning without data fails politely") {
    auto a = make_assistant();
    SessionState s;
    auto r = a.handle_message(s, "Show me the operations plan");
    CHECK(r.text.rfind("Sorry", 0) == 0);
    CHECK(s.messages.size() == 2);
}

TEST_CASE("classifier outage falls back to offline rules") {
    auto scripted = std::make_unique<planchat::testing::ScriptedClient>();
    scripted->fail(llm::Task::IntentClassification);
    scripted->fail(llm::Task::RefineResponse);
    auto* raw = scripted.get();
    scripted->always(llm::Task::ParameterExtraction, "{}");
    auto a = make_assistant(std::move(scripted));
    auto s = tire_session();
    auto r = a.handle_message(s, "Show me the operations plan");
    CHECK(raw->calls(llm::Task::IntentClassification) == 1);
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].status == TaskStatus::Done);
    // Refinement failed, so the reply is the tool text itself.
    CHECK(r.text.rfind("Plan plan-1 schedules", 0) == 0);
}

TEST_CASE("scripted conversation replays identically") {
    const std::vector<std::string> script{
        "hello!",
        "How would receiving 100 kg of natural rubber on 2024-04-17 impact my plan?",
        "Show me the operations plan",
        "add a receipt",
        "50 kg of synthetic rubber on 2024-04-16",
        "I want to only use the plant in Vancouver.",
        "Compare the plans",
        "Why is order O2 delayed?",
        "What is the weather forecast for the plant picnic?",
    };
    auto run = [&] {
        auto a = make_assistant();
        auto s = tire_session();
        json out = json::array();
        std::size_t messages = 0, tasks = 0, plans = 0;
        for (const auto& line : script) {
            auto r = a.handle_message(s, line);
            out.push_back(r);
            CHECK(s.messages.size() == messages + 2);
            CHECK(s.task_log.size() >= tasks);
            CHECK(s.plans.size() >= plans);
            messages = s.messages.size();
            tasks = s.task_log.size();
            plans = s.plans.size();
        }
        return std::make_pair(out, json(s));
    };
    auto [r1, s1] = run();
    auto [r2, s2] = run();
    CHECK(r1.dump() == r2.dump());
    CHECK(s1.dump() == s2.dump());
}
