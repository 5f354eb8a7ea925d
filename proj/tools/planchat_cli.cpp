#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "planchat/aps_data.hpp"
#include "planchat/planning.hpp"
#include "planchat/relaxation.hpp"
#include "planchat/retriever.hpp"
#include "planchat/service.hpp"
#include "planchat/text.hpp"

using namespace planchat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

int cmd_validate(const fs::path& dataset) {
    try {
        auto inst = aps::parse_instance(dataset);
        fmt::print("ok: {} ({} plants, {} products, {} materials, {} orders, {} days)\n", inst.id, inst.plants.size(),
                   inst.products.size(), inst.materials.size(), inst.orders.size(), inst.horizon.size());
        return 0;
    } catch (const aps::DataError& e) {
        fmt::print("invalid: {}\n", e.what());
        for (const auto& d : e.diagnostics()) fmt::print("  {} {}: {}\n", d.invariant, d.id, d.message);
        return 1;
    }
}

std::vector<opt::ScenarioSpec> read_scenarios(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open " + file.string());
    auto doc = json::parse(in);
    std::vector<opt::ScenarioSpec> out;
    if (doc.is_array())
        for (const auto& s : doc) out.push_back(s.get<opt::ScenarioSpec>());
    else
        out.push_back(doc.get<opt::ScenarioSpec>());
    return out;
}

int cmd_solve(const fs::path& dataset, const std::string& scenario_file, bool verbose) {
    aps::PlanningInstance inst;
    try {
        inst = aps::parse_instance(dataset);
    } catch (const aps::DataError& e) {
        fmt::print(stderr, "invalid dataset: {}\n", e.what());
        return 1;
    }
    std::vector<opt::ScenarioSpec> specs;
    if (!scenario_file.empty()) specs = read_scenarios(scenario_file);
    // build_lp applies the what-if changes itself.
    for (const auto& s : specs) opt::check_references(inst, s);

    auto start = std::chrono::steady_clock::now();
    auto model = opt::build_lp(inst, specs);
    auto sol = opt::solve_lp(model.lp);
    if (verbose)
        fmt::print(stderr, "solved {} columns x {} rows in {} iterations, {} ms\n", model.lp.num_vars(),
                   model.lp.num_rows(), sol.iterations,
                   std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start)
                       .count());

    if (sol.status == opt::SolveStatus::Infeasible) {
        auto r = opt::relax_infeasible(model.lp);
        fmt::print("status: infeasible\nminimal total violation: {}\n", text::format_number(r.total_violation));
        for (const auto& v : r.violated)
            fmt::print("  {} {} day {}: {}\n", opt::to_string(v.tag.kind), v.tag.entity, v.tag.day,
                       text::format_number(v.amount));
        return 1;
    }
    if (sol.status != opt::SolveStatus::Optimal) {
        fmt::print("status: {}\n", opt::to_string(sol.status));
        return 1;
    }
    auto plan = opt::extract_plan(model, sol, "plan-1");
    fmt::print("{}", opt::plan_to_csv(plan));
    fmt::print("# objective {}\n", text::format_number(plan.objective));
    fmt::print("# production_cost {}\n", text::format_number(plan.breakdown.production_cost));
    fmt::print("# tardiness_cost {}\n", text::format_number(plan.breakdown.tardiness_cost));
    fmt::print("# shortage_cost {}\n", text::format_number(plan.breakdown.shortage_cost));
    return 0;
}

int cmd_eval(const fs::path& corpus, const fs::path& catalog_dir, const std::string& embed_endpoint, double floor) {
    auto catalog = tools::load_catalog(catalog_dir);
    auto embedder = retrieval::make_embedder(embed_endpoint);
    auto index = retrieval::index_catalog(catalog, *embedder);
    auto set = retrieval::load_annotated_set(corpus);
    auto report = retrieval::evaluate_retrieval(set, index, *embedder, catalog);

    std::vector<retrieval::AnnotatedQuery> verbatim;
    for (const auto& c : catalog)
        for (const auto& e : c.examples) verbatim.push_back({e, c.id});
    auto exact = retrieval::evaluate_retrieval(verbatim, index, *embedder, catalog);

    fmt::print("{:<14} {:>7} {:>5} {:>9}\n", "category", "correct", "total", "accuracy");
    for (const auto& [cat, s] : report.per_category)
        fmt::print("{:<14} {:>7} {:>5} {:>9.4f}\n", cat, s.correct, s.total, s.accuracy());
    fmt::print("{:<14} {:>7} {:>5} {:>9.4f}\n", "overall", report.overall.correct, report.overall.total,
               report.accuracy());
    fmt::print("{:<14} {:>7} {:>5} {:>9.4f}\n", "verbatim", exact.overall.correct, exact.overall.total,
               exact.accuracy());
    for (const auto& [q, got] : report.misses)
        fmt::print("miss: \"{}\" expected {} got {}\n", q.query, q.gold_tool_id, got);
    return report.accuracy() >= floor && exact.accuracy() == 1.0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path data = PLANCHAT_DEFAULT_DATA_DIR;

    CLI::App app{"Conversational planning assistant: service, dataset tools and retrieval evaluation", "planchat"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string catalog_dir = (data / "catalog").string();
    std::string prompts_dir = (data / "prompts").string();
    std::string llm_endpoint = env_or("LLM_ENDPOINT", "");
    std::string embed_endpoint = env_or("EMBED_ENDPOINT", "");
    bool verbose = false;
    app.add_option("--catalog-dir", catalog_dir, "Directory of tool contracts")->capture_default_str();
    app.add_option("--llm-endpoint", llm_endpoint, "Completion endpoint; unset means the offline stub");
    app.add_option("--embed-endpoint", embed_endpoint, "Embedding endpoint; unset means the hashed embedder");
    app.add_flag("--verbose", verbose, "Log requests and timings to stderr");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    int port = std::atoi(env_or("PORT", "8080").c_str());
    std::string host = "0.0.0.0";
    std::string data_dir = env_or("DATA_DIR", "planchat-data");
    serve->add_option("--port", port, "Listening port")->capture_default_str();
    serve->add_option("--host", host, "Listening address")->capture_default_str();
    serve->add_option("--data-dir", data_dir, "Session snapshot directory")->capture_default_str();
    serve->add_option("--prompts-dir", prompts_dir, "Prompt template directory")->capture_default_str();

    auto* validate = app.add_subcommand("validate", "Check a CSV dataset directory");
    std::string dataset;
    validate->add_option("dataset", dataset, "Dataset directory")->required();

    auto* solve = app.add_subcommand("solve", "Solve a dataset and print the plan as CSV");
    std::string scenario;
    solve->add_option("dataset", dataset, "Dataset directory")->required();
    solve->add_option("scenario", scenario, "Scenario JSON: one spec or a list");

    auto* eval = app.add_subcommand("eval-retriever", "Top-1 accuracy of tool retrieval on an annotated corpus");
    std::string corpus = (data / "eval" / "retrieval_corpus.csv").string();
    double floor = 0.80;
    eval->add_option("corpus", corpus, "CSV with query,gold_tool_id")->capture_default_str();
    eval->add_option("--min-accuracy", floor, "Exit 1 below this overall accuracy")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*validate) return cmd_validate(dataset);
        if (*solve) return cmd_solve(dataset, scenario, verbose);
        if (*eval) return cmd_eval(corpus, catalog_dir, embed_endpoint, floor);
        if (*serve) {
            service::ServiceConfig cfg;
            cfg.data_dir = data_dir;
            cfg.catalog_dir = catalog_dir;
            cfg.prompts_dir = prompts_dir;
            cfg.gateway = llm::GatewayConfig::from_env();
            cfg.gateway.llm_endpoint = llm_endpoint;
            cfg.gateway.embed_endpoint = embed_endpoint;
            service::Service svc(service::make_assistant(cfg), cfg.data_dir);
            fmt::print(stderr, "listening on {}:{} ({} mode), snapshots in {}\n", host, port,
                       llm_endpoint.empty() ? "stub" : "remote", data_dir);
            return service::serve(svc, host, port, verbose) ? 0 : 1;
        }
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 2;
}
