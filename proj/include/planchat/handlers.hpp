#pragma once

#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "planchat/contracts.hpp"
#include "planchat/session.hpp"

namespace planchat::tools {

struct HandlerContext {
    const ToolContract& contract;
    const nlohmann::json& params;
    chat::SessionState& session;
    const chat::ModelRecord* model;  // null for tools without a model
};

class HandlerError : public std::runtime_error {
public:
    HandlerError(std::string stage, const std::string& detail)
        : std::runtime_error(stage + ": " + detail), stage_(std::move(stage)), detail_(detail) {}
    const std::string& stage() const { return stage_; }
    const std::string& detail() const { return detail_; }

private:
    std::string stage_;
    std::string detail_;
};

/// Handlers for every function named in the bundled catalog.
HandlerRegistry default_registry();

}  // namespace planchat::tools
