#pragma once

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "planchat/aps_data.hpp"
#include "planchat/llm_gateway.hpp"
#include "planchat/planning.hpp"

namespace planchat::chat {

using Clock = std::function<Timestamp()>;

enum class TaskStatus { Running, Done, Failed };

std::string to_string(TaskStatus s);

struct TaskRecord {
    std::size_t seq = 0;
    std::string tool_id;
    TaskStatus status = TaskStatus::Running;
    Timestamp started = 0;
    Timestamp finished = 0;  // 0 while running
    std::string summary;
    bool operator==(const TaskRecord&) const = default;
};

struct PendingClarification {
    std::string tool_id;
    std::string model_id;  // empty until a model is settled
    nlohmann::json collected = nlohmann::json::object();
    std::vector<std::string> missing;
    int attempts = 0;
    bool operator==(const PendingClarification&) const = default;
};

/// A named optimization model: an instance plus the scenarios layered on it,
/// and the plan solved for it.
struct ModelRecord {
    std::string id;
    std::string name;
    std::string instance_id;
    std::vector<opt::ScenarioSpec> scenarios;
    std::string plan_id;
    bool operator==(const ModelRecord&) const = default;
};

struct ToolGapRecord {
    std::string query;
    std::string best_tool_id;
    double best_distance = 0.0;
    Timestamp timestamp = 0;
    bool operator==(const ToolGapRecord&) const = default;
};

struct SessionState {
    std::string session_id;
    std::vector<llm::Message> messages;
    std::map<std::string, aps::PlanningInstance> instances;
    std::vector<ModelRecord> models;  // creation order
    std::map<std::string, opt::Plan> plans;
    std::vector<std::string> plan_order;  // creation order of plan ids
    std::vector<TaskRecord> task_log;
    std::optional<PendingClarification> pending;
    std::vector<ToolGapRecord> tool_gaps;

    const ModelRecord* find_model(const std::string& id) const;
    const opt::Plan* find_plan(const std::string& id) const;
    /// "plan-{n}" with n one past the number of plans ever saved.
    std::string next_plan_id() const;

    bool operator==(const SessionState&) const = default;
};

void to_json(nlohmann::json& j, const TaskRecord& t);
void from_json(const nlohmann::json& j, TaskRecord& t);
void to_json(nlohmann::json& j, const ToolGapRecord& g);
void to_json(nlohmann::json& j, const SessionState& s);
void from_json(const nlohmann::json& j, SessionState& s);

class InvalidTransition : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Appends a running record with the next sequence number.
TaskRecord& begin_task(SessionState& session, const std::string& tool_id, Timestamp now);

/// Moves task `seq` from running to done or failed. Anything else, including
/// touching a finished record, throws InvalidTransition.
TaskRecord& finish_task(SessionState& session, std::size_t seq, TaskStatus to, std::string summary, Timestamp now);

/// Stores `plan` under a fresh id (overwriting plan.id) and returns the id.
std::string save_plan(SessionState& session, opt::Plan plan);

}  // namespace planchat::chat
