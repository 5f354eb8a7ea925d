#pragma once

#include <chrono>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

namespace planchat::net {

class HttpError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// POSTs `body` as JSON to `url` (http://host[:port]/path) and parses the reply.
/// Throws HttpError on connection failure, timeout, a non-2xx status or a body
/// that is not JSON.
nlohmann::json post_json(const std::string& url, const nlohmann::json& body, std::chrono::milliseconds timeout);

}  // namespace planchat::net
