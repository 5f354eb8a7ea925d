#pragma once

#include <deque>
#include <map>
#include <string>
#include <vector>

#include "planchat/llm_gateway.hpp"

namespace planchat::testing {

/// Answers each task from a fixed script, or from a fallback client when the
/// task has no scripted reply. Records every request.
class ScriptedClient : public llm::CompletionClient {
public:
    explicit ScriptedClient(llm::CompletionClient* fallback = nullptr) : fallback_(fallback) {}

    void always(llm::Task task, std::string reply) { fixed_[task] = std::move(reply); }
    void once(llm::Task task, std::string reply) { queued_[task].push_back(std::move(reply)); }
    void fail(llm::Task task) { failing_.push_back(task); }

    std::string complete(const llm::CompletionRequest& request) override {
        requests.push_back(request);
        for (auto t : failing_)
            if (t == request.task) throw llm::ClientFailure("scripted failure");
        auto& q = queued_[request.task];
        if (!q.empty()) {
            auto r = q.front();
            q.pop_front();
            return r;
        }
        if (auto it = fixed_.find(request.task); it != fixed_.end()) return it->second;
        if (fallback_) return fallback_->complete(request);
        throw llm::ClientFailure("no scripted reply");
    }

    std::size_t calls(llm::Task task) const {
        std::size_t n = 0;
        for (const auto& r : requests) n += r.task == task;
        return n;
    }

    std::vector<llm::CompletionRequest> requests;

private:
    llm::CompletionClient* fallback_;
    std::map<llm::Task, std::string> fixed_;
    std::map<llm::Task, std::deque<std::string>> queued_;
    std::vector<llm::Task> failing_;
};

}  // namespace planchat::testing
