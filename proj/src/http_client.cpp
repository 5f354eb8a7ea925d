#include "planchat/http_client.hpp"

#include <httplib.h>

#include <fmt/format.h>

namespace planchat::net {

namespace {

struct Target {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

Target split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw HttpError("not an absolute URL: " + url);
    auto slash = url.find('/', scheme_end + 3);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

nlohmann::json post_json(const std::string& url, const nlohmann::json& body, std::chrono::milliseconds timeout) {
    auto target = split_url(url);
    httplib::Client client(target.origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(target.path, body.dump(), "application/json");
    if (!res) throw HttpError(fmt::format("POST {} failed: {}", url, httplib::to_string(res.error())));
    if (res->status < 200 || res->status >= 300) throw HttpError(fmt::format("POST {} returned {}", url, res->status));
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw HttpError(fmt::format("POST {} returned a non-JSON body", url));
    return parsed;
}

}  // namespace planchat::net
