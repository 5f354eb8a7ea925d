#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "planchat/conversation.hpp"
#include "planchat/llm_gateway.hpp"

namespace httplib {
class Server;
}

namespace planchat::service {

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct ServiceConfig {
    std::filesystem::path data_dir;  // snapshot root, empty disables persistence
    std::filesystem::path catalog_dir;
    std::filesystem::path prompts_dir;
    llm::GatewayConfig gateway;
};

/// Catalog, prompts, embedder and completion client as configured.
std::unique_ptr<chat::Assistant> make_assistant(const ServiceConfig& config, chat::Clock clock = now_millis);

/// Session store plus the HTTP handlers. Each handler is callable directly, so
/// the HTTP layer in mount() only routes and copies bytes.
class Service {
public:
    /// Loads every snapshot found under `data_dir`.
    Service(std::unique_ptr<chat::Assistant> assistant, std::filesystem::path data_dir);

    Reply create_session();
    Reply get_session(const std::string& id);
    /// Body {"text": ...}. 409 while another message on the session is in flight.
    Reply post_message(const std::string& id, const std::string& body);
    Reply get_tasks(const std::string& id);
    /// Zip of the CSV dataset; solves and registers the baseline.
    Reply ingest_data(const std::string& id, const std::string& zip);
    /// `format` is "json" or "csv".
    Reply get_plan(const std::string& id, const std::string& plan_id, const std::string& format);
    Reply healthz() const;

    std::vector<std::string> session_ids() const;

    void mount(httplib::Server& server);

private:
    struct Entry {
        std::mutex mu;
        chat::SessionState state;
    };

    std::shared_ptr<Entry> find(const std::string& id) const;
    void snapshot(const chat::SessionState& state) const;
    void load();

    std::unique_ptr<chat::Assistant> assistant_;
    std::filesystem::path data_dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::shared_ptr<Entry>> sessions_;
    std::size_t next_id_ = 1;
};

/// Blocks serving `service` on host:port until the process ends.
bool serve(Service& service, const std::string& host, int port, bool verbose);

}  // namespace planchat::service
