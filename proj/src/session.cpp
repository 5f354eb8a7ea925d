#include "planchat/session.hpp"

#include <fmt/format.h>

namespace planchat::chat {

using nlohmann::json;

std::string to_string(TaskStatus s) {
    switch (s) {
        case TaskStatus::Running: return "running";
        case TaskStatus::Done: return "done";
        case TaskStatus::Failed: return "failed";
    }
    return "running";
}

namespace {

TaskStatus status_from_string(const std::string& s) {
    if (s == "done") return TaskStatus::Done;
    if (s == "failed") return TaskStatus::Failed;
    if (s == "running") return TaskStatus::Running;
    throw std::runtime_error("unknown task status " + s);
}

}  // namespace

const ModelRecord* SessionState::find_model(const std::string& id) const {
    for (const auto& m : models)
        if (m.id == id) return &m;
    return nullptr;
}

const opt::Plan* SessionState::find_plan(const std::string& id) const {
    auto it = plans.find(id);
    return it == plans.end() ? nullptr : &it->second;
}

std::string SessionState::next_plan_id() const { return fmt::format("plan-{}", plan_order.size() + 1); }

TaskRecord& begin_task(SessionState& session, const std::string& tool_id, Timestamp now) {
    TaskRecord t;
    t.seq = session.task_log.empty() ? 1 : session.task_log.back().seq + 1;
    t.tool_id = tool_id;
    t.status = TaskStatus::Running;
    t.started = now;
    session.task_log.push_back(std::move(t));
    return session.task_log.back();
}

TaskRecord& finish_task(SessionState& session, std::size_t seq, TaskStatus to, std::string summary, Timestamp now) {
    for (auto& t : session.task_log) {
        if (t.seq != seq) continue;
        if (t.status != TaskStatus::Running || to == TaskStatus::Running)
            throw InvalidTransition(fmt::format("task {}: {} -> {}", seq, to_string(t.status), to_string(to)));
        t.status = to;
        t.finished = std::max(now, t.started);
        t.summary = std::move(summary);
        return t;
    }
    throw InvalidTransition(fmt::format("no task with seq {}", seq));
}

std::string save_plan(SessionState& session, opt::Plan plan) {
    plan.id = session.next_plan_id();
    auto id = plan.id;
    session.plans.emplace(id, std::move(plan));
    session.plan_order.push_back(id);
    return id;
}

void to_json(json& j, const TaskRecord& t) {
    j = {{"seq", t.seq},         {"tool_id", t.tool_id},   {"status", to_string(t.status)},
         {"started", t.started}, {"finished", t.finished}, {"summary", t.summary}};
}

void from_json(const json& j, TaskRecord& t) {
    t.seq = j.at("seq").get<std::size_t>();
    t.tool_id = j.at("tool_id").get<std::string>();
    t.status = status_from_string(j.at("status").get<std::string>());
    t.started = j.at("started").get<Timestamp>();
    t.finished = j.at("finished").get<Timestamp>();
    t.summary = j.at("summary").get<std::string>();
}

void to_json(json& j, const ToolGapRecord& g) {
    j = {{"query", g.query},
         {"best_tool_id", g.best_tool_id},
         {"best_distance", g.best_distance},
         {"timestamp", g.timestamp}};
}

namespace {

void from_json(const json& j, ToolGapRecord& g) {
    g.query = j.at("query").get<std::string>();
    g.best_tool_id = j.at("best_tool_id").get<std::string>();
    g.best_distance = j.at("best_distance").get<double>();
    g.timestamp = j.at("timestamp").get<Timestamp>();
}

json model_json(const ModelRecord& m) {
    return {{"id", m.id},
            {"name", m.name},
            {"instance_id", m.instance_id},
            {"scenarios", m.scenarios},
            {"plan_id", m.plan_id}};
}

ModelRecord model_from(const json& j) {
    ModelRecord m;
    m.id = j.at("id").get<std::string>();
    m.name = j.at("name").get<std::string>();
    m.instance_id = j.at("instance_id").get<std::string>();
    m.scenarios = j.at("scenarios").get<std::vector<opt::ScenarioSpec>>();
    m.plan_id = j.at("plan_id").get<std::string>();
    return m;
}

}  // namespace

void to_json(json& j, const SessionState& s) {
    j = json::object();
    j["session_id"] = s.session_id;
    j["messages"] = s.messages;
    json instances = json::object();
    for (const auto& [id, inst] : s.instances) instances[id] = inst;
    j["instances"] = instances;
    json models = json::array();
    for (const auto& m : s.models) models.push_back(model_json(m));
    j["models"] = models;
    json plans = json::object();
    for (const auto& [id, plan] : s.plans) plans[id] = plan;
    j["plans"] = plans;
    j["plan_order"] = s.plan_order;
    j["task_log"] = s.task_log;
    if (s.pending) {
        j["pending"] = {{"tool_id", s.pending->tool_id},
                        {"model_id", s.pending->model_id},
                        {"collected", s.pending->collected},
                        {"missing", s.pending->missing},
                        {"attempts", s.pending->attempts}};
    } else {
        j["pending"] = nullptr;
    }
    j["tool_gaps"] = s.tool_gaps;
}

void from_json(const json& j, SessionState& s) {
    s = SessionState{};
    s.session_id = j.at("session_id").get<std::string>();
    s.messages = j.at("messages").get<std::vector<llm::Message>>();
    for (const auto& [id, inst] : j.at("instances").items()) s.instances.emplace(id, inst.get<aps::PlanningInstance>());
    for (const auto& m : j.at("models")) s.models.push_back(model_from(m));
    for (const auto& [id, plan] : j.at("plans").items()) s.plans.emplace(id, plan.get<opt::Plan>());
    s.plan_order = j.at("plan_order").get<std::vector<std::string>>();
    s.task_log = j.at("task_log").get<std::vector<TaskRecord>>();
    if (!j.at("pending").is_null()) {
        const auto& p = j.at("pending");
        s.pending = PendingClarification{p.at("tool_id").get<std::string>(), p.at("model_id").get<std::string>(),
                                         p.at("collected"), p.at("missing").get<std::vector<std::string>>(),
                                         p.at("attempts").get<int>()};
    }
    for (const auto& g : j.at("tool_gaps")) {
        ToolGapRecord rec;
        from_json(g, rec);
        s.tool_gaps.push_back(std::move(rec));
    }
}

}  // namespace planchat::chat
