#include "planchat/service.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <set>

#include <httplib.h>

#include <fmt/format.h>

#include "planchat/archive.hpp"
#include "planchat/handlers.hpp"
#include "planchat/retriever.hpp"
#include "planchat/tool_manager.hpp"

namespace planchat::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

Reply ok(const json& body) { return {200, body.dump(), "application/json"}; }

Reply error(int status, const std::string& message, json extra = json::object()) {
    extra["error"] = message;
    return {status, extra.dump(), "application/json"};
}

Reply no_session(const std::string& id) { return error(404, "unknown session " + id); }

Reply busy(const std::string& id) {
    return error(409, "session " + id + " is still processing a previous request; retry when it finishes");
}

std::string safe_name(const std::string& s) {
    std::string out;
    for (char c : s)
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_');
    return out.empty() ? "dataset" : out;
}

/// Splits "dir/file.csv" style archives into the folder name and flat files.
std::pair<std::string, std::map<std::string, std::string>> flatten(const std::map<std::string, std::string>& files) {
    std::map<std::string, std::string> flat;
    std::set<std::string> folders;
    for (const auto& [path, content] : files) {
        auto base = fs::path(path).filename().string();
        if (base.empty() || base.front() == '.' || path.rfind("__MACOSX/", 0) == 0) continue;
        auto parent = fs::path(path).parent_path().filename().string();
        folders.insert(parent);
        flat[base] = content;
    }
    std::string name = folders.size() == 1 && !folders.begin()->empty() ? *folders.begin() : "dataset";
    return {safe_name(name), flat};
}

void write_atomically(const fs::path& target, const std::string& content) {
    auto tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("short write on " + tmp.string());
    }
    fs::rename(tmp, target);
}

}  // namespace

std::unique_ptr<chat::Assistant> make_assistant(const ServiceConfig& config, chat::Clock clock) {
    auto contracts = tools::load_catalog(config.catalog_dir);
    auto keywords = llm::catalog_keywords(contracts);
    auto bound = tools::bind_handlers(contracts, tools::default_registry());
    return std::make_unique<chat::Assistant>(std::move(bound), retrieval::make_embedder(config.gateway.embed_endpoint),
                                             llm::make_client(config.gateway, std::move(keywords)),
                                             llm::load_prompts(config.prompts_dir), std::move(clock));
}

Service::Service(std::unique_ptr<chat::Assistant> assistant, fs::path data_dir)
    : assistant_(std::move(assistant)), data_dir_(std::move(data_dir)) {
    load();
}

void Service::load() {
    if (data_dir_.empty()) return;
    auto dir = data_dir_ / "sessions";
    fs::create_directories(dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        auto doc = json::parse(in);
        auto entry = std::make_shared<Entry>();
        entry->state = doc.get<chat::SessionState>();
        auto id = entry->state.session_id;
        if (id.rfind("session-", 0) == 0) {
            try {
                next_id_ = std::max(next_id_, static_cast<std::size_t>(std::stoul(id.substr(8))) + 1);
            } catch (const std::exception&) {
            }
        }
        sessions_[id] = std::move(entry);
    }
}

void Service::snapshot(const chat::SessionState& state) const {
    if (data_dir_.empty()) return;
    write_atomically(data_dir_ / "sessions" / (state.session_id + ".json"), json(state).dump());
}

std::shared_ptr<Service::Entry> Service::find(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
}

std::vector<std::string> Service::session_ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
}

Reply Service::create_session() {
    auto entry = std::make_shared<Entry>();
    {
        std::lock_guard lock(mu_);
        entry->state.session_id = fmt::format("session-{}", next_id_++);
        sessions_[entry->state.session_id] = entry;
    }
    std::lock_guard lock(entry->mu);
    snapshot(entry->state);
    return ok({{"session_id", entry->state.session_id}});
}

Reply Service::get_session(const std::string& id) {
    auto entry = find(id);
    if (!entry) return no_session(id);
    std::lock_guard lock(entry->mu);
    return ok(entry->state);
}

Reply Service::post_message(const std::string& id, const std::string& body) {
    auto entry = find(id);
    if (!entry) return no_session(id);
    auto doc = json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") || !doc["text"].is_string())
        return error(400, "expected a JSON body {\"text\": ...}");
    auto text = doc["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return error(400, "message text is empty");

    std::unique_lock lock(entry->mu, std::try_to_lock);
    if (!lock.owns_lock()) return busy(id);
    auto reply = assistant_->handle_message(entry->state, text);
    snapshot(entry->state);
    return ok(reply);
}

Reply Service::get_tasks(const std::string& id) {
    auto entry = find(id);
    if (!entry) return no_session(id);
    std::lock_guard lock(entry->mu);
    return ok(entry->state.task_log);
}

Reply Service::ingest_data(const std::string& id, const std::string& zip) {
    auto entry = find(id);
    if (!entry) return no_session(id);
    std::map<std::string, std::string> files;
    try {
        files = archive::read_zip(zip);
    } catch (const archive::ArchiveError& e) {
        return error(400, std::string("unreadable dataset archive: ") + e.what());
    }
    auto [name, flat] = flatten(files);

    std::unique_lock lock(entry->mu, std::try_to_lock);
    if (!lock.owns_lock()) return busy(id);

    auto instance_id = name;
    for (int n = 2; entry->state.instances.count(instance_id); ++n) instance_id = fmt::format("{}_{}", name, n);

    std::random_device rd;
    auto scratch = fs::temp_directory_path() / fmt::format("planchat-ingest-{}-{}", rd(), rd());
    fs::create_directories(scratch);
    struct Cleanup {
        fs::path p;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(p, ec);
        }
    } cleanup{scratch};
    for (const auto& [file, content] : flat) std::ofstream(scratch / file, std::ios::binary) << content;

    aps::PlanningInstance instance;
    try {
        instance = aps::parse_instance(scratch, instance_id);
    } catch (const aps::DataError& e) {
        json diags = json::array();
        for (const auto& d : e.diagnostics()) diags.push_back(d);
        return error(400, e.what(), {{"diagnostics", diags}});
    }
    auto model_id = chat::add_instance(entry->state, std::move(instance));
    snapshot(entry->state);
    const auto* model = entry->state.find_model(model_id);
    const auto* plan = entry->state.find_plan(model->plan_id);
    return ok({{"instance_id", instance_id},
               {"model_id", model_id},
               {"plan_id", model->plan_id},
               {"objective", plan->objective}});
}

Reply Service::get_plan(const std::string& id, const std::string& plan_id, const std::string& format) {
    auto entry = find(id);
    if (!entry) return no_session(id);
    if (format != "json" && format != "csv") return error(400, "format must be json or csv");
    std::lock_guard lock(entry->mu);
    const auto* plan = entry->state.find_plan(plan_id);
    if (!plan) return error(404, "unknown plan " + plan_id);
    if (format == "csv") return {200, opt::plan_to_csv(*plan), "text/csv"};
    return ok(*plan);
}

Reply Service::healthz() const {
    std::lock_guard lock(mu_);
    return ok({{"status", "ok"}, {"sessions", sessions_.size()}, {"tools", assistant_->catalog().size()}});
}

void Service::mount(httplib::Server& server) {
    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, healthz()); });
    server.Post("/sessions",
                [this, send](const httplib::Request&, httplib::Response& res) { send(res, create_session()); });
    server.Get(R"(/sessions/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_session(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/messages)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, post_message(req.matches[1], req.body));
    });
    server.Get(R"(/sessions/([^/]+)/tasks)", [this, send](const httplib::Request& req, httplib::Response& res) {
        send(res, get_tasks(req.matches[1]));
    });
    server.Post(R"(/sessions/([^/]+)/data)", [this, send](const httplib::Request& req, httplib::Response& res) {
        // Raw zip bodies and single-file multipart uploads are both accepted.
        std::string zip = req.body;
        if (req.is_multipart_form_data() && !req.files.empty()) zip = req.files.begin()->second.content;
        send(res, ingest_data(req.matches[1], zip));
    });
    server.Get(R"(/sessions/([^/]+)/plans/([^/]+))", [this, send](const httplib::Request& req, httplib::Response& res) {
        auto format = req.has_param("format") ? req.get_param_value("format") : "json";
        send(res, get_plan(req.matches[1], req.matches[2], format));
    });
}

bool serve(Service& service, const std::string& host, int port, bool verbose) {
    httplib::Server server;
    service.mount(server);
    if (verbose) {
        server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
            fmt::print(stderr, "{} {} {} -> {}\n", now_millis(), req.method, req.path, res.status);
        });
    }
    return server.listen(host, port);
}

}  // namespace planchat::service
