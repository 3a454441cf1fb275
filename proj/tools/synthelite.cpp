// Command-line entry point: index, plan, search, benchmark, validate, serve.

#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "synthelite/bench/benchmark.hpp"
#include "synthelite/error.hpp"
#include "synthelite/index/library.hpp"
#include "synthelite/pipeline/pipeline.hpp"
#include "synthelite/routes/checker.hpp"
#include "synthelite/service/jobs.hpp"
#include "synthelite/service/server.hpp"
#include "synthelite/util/io.hpp"
#include "synthelite/util/log.hpp"

using namespace synthelite;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// "@path" reads the prompt from a file.
std::string read_prompt(const std::string& arg) {
    if (!arg.empty() && arg[0] == '@') return util::trim(util::read_file(arg.substr(1)));
    return arg;
}

json read_json_file(const fs::path& path) {
    try {
        return json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
}

struct LlmOptions {
    std::string selector;
    int retries = 2;
    int retry_delay_ms = 200;
    double rpm = 0.0;

    void add(CLI::App* app) {
        app->add_option("--llm", selector, "backend selector (scripted:FILE, openai:MODEL, anthropic:MODEL); "
                                           "defaults to $SYNTHELITE_LLM");
        app->add_option("--retries", retries, "transport retries per call")->check(CLI::NonNegativeNumber);
        app->add_option("--rpm", rpm, "requests per minute, 0 for unlimited")->check(CLI::NonNegativeNumber);
    }
    llm::RetryPolicy policy() const { return {retries, std::chrono::milliseconds(retry_delay_ms)}; }
    llm::LlmClient client(std::shared_ptr<llm::CallLedger> ledger = std::make_shared<llm::CallLedger>()) const {
        return llm::LlmClient(llm::make_backend(selector), policy(), std::move(ledger),
                              rpm > 0 ? std::make_shared<llm::RateLimiter>(rpm) : nullptr);
    }
};

struct ConfigOptions {
    std::string file;
    int attempts = -1;
    int max_steps = -1;
    double alpha = -1;
    int iterations = -1;

    void add(CLI::App* app) {
        app->add_option("--config", file, "JSON file with planner/search sections")->check(CLI::ExistingFile);
        app->add_option("--attempts", attempts, "Phase 1 attempts")->check(CLI::PositiveNumber);
        app->add_option("--max-steps", max_steps, "steps per attempt")->check(CLI::NonNegativeNumber);
        app->add_option("--alpha", alpha, "similarity weight of the search logit")->check(CLI::Range(0.0, 1.0));
        app->add_option("--iterations", iterations, "search iterations per attempt")->check(CLI::PositiveNumber);
    }
    pipeline::RunConfig resolve() const {
        auto c = file.empty() ? pipeline::RunConfig{} : pipeline::run_config_from_json(read_json_file(file));
        if (attempts >= 0) c.planner.attempts = attempts;
        if (max_steps >= 0) c.planner.max_steps = max_steps;
        if (alpha >= 0) c.search.alpha = alpha;
        if (iterations >= 0) c.search.iterations = iterations;
        c.planner.validate();
        c.search.validate();
        return c;
    }
};

void print_summary(const pipeline::RunResult& result) {
    for (const auto& a : result.attempts) {
        std::cout << "attempt " << a.index << ": " << a.reactions.size() << " steps, "
                  << (a.solved ? "solved" : "unsolved") << ", " << planner::to_string(a.stop_reason) << "\n";
    }
    std::size_t solved = 0;
    for (const auto& r : result.routes) solved += r.solved;
    std::cout << result.routes.size() << " routes (" << solved << " solved)\n";
}

std::vector<std::size_t> parse_ks(const std::string& text) {
    std::vector<std::size_t> ks;
    for (const auto& part : util::split(text, ',')) {
        const auto t = util::trim(part);
        if (t.empty()) continue;
        long v = 0;
        try {
            v = std::stol(t);
        } catch (const std::exception&) {
            throw ValidationError("bad k: " + t);
        }
        if (v < 1) throw ValidationError("k must be >= 1");
        ks.push_back(static_cast<std::size_t>(v));
    }
    if (ks.empty()) throw ValidationError("no k given");
    return ks;
}

// A bare route, a route candidate, or the first line of a routes.jsonl file.
routes::Route read_route(const fs::path& path) {
    const auto text = util::read_file(path);
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception&) {
        const auto lines = util::read_lines(path);
        if (lines.empty()) throw SchemaError(path.string() + ": empty");
        j = json::parse(lines.front());
    }
    if (j.is_object() && j.contains("route")) return routes::route_from_json(j.at("route"));
    return routes::route_from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthelite retrosynthesis planner"};
    app.require_subcommand(1);
    std::string log_level;
    app.add_option("--log", log_level, "log threshold")->check(CLI::IsMember({"debug", "info", "warn", "error", "off"}));

    // index
    auto* index_cmd = app.add_subcommand("index", "build or query a template index");
    index_cmd->require_subcommand(1);
    auto* index_build = index_cmd->add_subcommand("build", "describe a template library and embed it");
    std::string templates_file, index_out, embedder_id = "hashed";
    bool no_describe = false;
    int parallelism = 4;
    LlmOptions index_llm;
    index_build->add_option("--templates", templates_file, "library (JSONL or TSV)")->required()->check(CLI::ExistingFile);
    index_build->add_option("--out", index_out, "output directory")->required();
    index_build->add_option("--embedder", embedder_id, "hashed, hashed-N or openai:MODEL");
    index_build->add_flag("--no-describe", no_describe, "use the descriptions already in the library");
    index_build->add_option("--parallelism", parallelism, "concurrent describe calls")->check(CLI::PositiveNumber);
    index_llm.add(index_build);

    auto* index_query = index_cmd->add_subcommand("query", "nearest templates for a reaction text");
    std::string query_index, query_text;
    std::size_t query_k = 10;
    index_query->add_option("--index", query_index, "index directory")->required()->check(CLI::ExistingDirectory);
    index_query->add_option("--text", query_text, "query text")->required();
    index_query->add_option("-k", query_k, "hits")->check(CLI::PositiveNumber);

    // plan
    auto* plan_cmd = app.add_subcommand("plan", "run both planning phases for one target");
    std::string plan_target, plan_prompt, plan_stock, plan_index, plan_out;
    bool phase1_only = false;
    LlmOptions plan_llm;
    ConfigOptions plan_config;
    plan_cmd->add_option("--target", plan_target, "target SMILES")->required();
    plan_cmd->add_option("--prompt", plan_prompt, "user prompt, or @FILE; defaults to the neutral prompt");
    plan_cmd->add_option("--stock", plan_stock, "stock SMILES file")->required()->check(CLI::ExistingFile);
    plan_cmd->add_option("--index", plan_index, "index directory")->required()->check(CLI::ExistingDirectory);
    plan_cmd->add_option("--out", plan_out, "output directory")->required();
    plan_cmd->add_flag("--phase1-only", phase1_only, "skip the tree search");
    plan_llm.add(plan_cmd);
    plan_config.add(plan_cmd);

    // search
    auto* search_cmd = app.add_subcommand("search", "tree search guided by a stored blueprint");
    std::string search_blueprint, search_target, search_stock, search_index, search_out;
    int search_attempt = 1, search_total = 1;
    ConfigOptions search_config;
    search_cmd->add_option("--blueprint", search_blueprint, "attempt_k.json or a blueprint list")
        ->required()
        ->check(CLI::ExistingFile);
    search_cmd->add_option("--target", search_target, "target SMILES; read from the attempt file when omitted");
    search_cmd->add_option("--stock", search_stock, "stock SMILES file")->required()->check(CLI::ExistingFile);
    search_cmd->add_option("--index", search_index, "index directory")->required()->check(CLI::ExistingDirectory);
    search_cmd->add_option("--out", search_out, "routes.jsonl path; stdout when omitted");
    search_cmd->add_option("--attempt-index", search_attempt, "attempt number for ranking")->check(CLI::PositiveNumber);
    search_cmd->add_option("--total-attempts", search_total, "attempt count for ranking")->check(CLI::PositiveNumber);
    search_config.add(search_cmd);

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "run or score a benchmark suite");
    bench_cmd->require_subcommand(1);
    auto* bench_run = bench_cmd->add_subcommand("run", "plan every case of a manifest");
    std::string bench_manifest, bench_stock, bench_index, bench_out;
    LlmOptions bench_llm;
    ConfigOptions bench_config;
    bench_run->add_option("--manifest", bench_manifest, "manifest JSON")->required()->check(CLI::ExistingFile);
    bench_run->add_option("--stock", bench_stock, "stock SMILES file")->required()->check(CLI::ExistingFile);
    bench_run->add_option("--index", bench_index, "index directory")->required()->check(CLI::ExistingDirectory);
    bench_run->add_option("--out", bench_out, "results directory")->required();
    bench_llm.add(bench_run);
    bench_config.add(bench_run);

    auto* bench_score = bench_cmd->add_subcommand("score", "recall@K, precision and solve rate of a results directory");
    std::string score_results, score_ks = "1,5,10,20,30";
    bench_score->add_option("--results", score_results, "results directory")->required()->check(CLI::ExistingDirectory);
    bench_score->add_option("-k", score_ks, "comma-separated K values");

    // validate
    auto* validate_cmd = app.add_subcommand("validate", "check a route against a constraint checker");
    std::string validate_route, validate_checker, validate_stock;
    validate_cmd->add_option("--route", validate_route, "route JSON, route candidate or routes.jsonl")
        ->required()
        ->check(CLI::ExistingFile);
    validate_cmd->add_option("--checker", validate_checker, "checker JSON")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--stock", validate_stock, "also require a solved route")->check(CLI::ExistingFile);

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "HTTP job service");
    std::string serve_store, serve_index, serve_stock, serve_host = "127.0.0.1", serve_static;
    int serve_port = 8080, serve_workers = 2;
    LlmOptions serve_llm;
    if (const char* env = std::getenv("SYNTHELITE_STORE"); env && *env) serve_store = env;
    serve_cmd->add_option("--port", serve_port, "TCP port")->check(CLI::Range(1, 65535));
    serve_cmd->add_option("--host", serve_host, "bind address");
    serve_cmd->add_option("--store", serve_store, "job store root; defaults to $SYNTHELITE_STORE");
    serve_cmd->add_option("--index", serve_index, "index directory")->required()->check(CLI::ExistingDirectory);
    serve_cmd->add_option("--stock", serve_stock, "stock SMILES file")->required()->check(CLI::ExistingFile);
    serve_cmd->add_option("--workers", serve_workers, "concurrent jobs")->check(CLI::PositiveNumber);
    serve_cmd->add_option("--static", serve_static, "static files served at /")->check(CLI::ExistingDirectory);
    serve_llm.add(serve_cmd);

    CLI11_PARSE(app, argc, argv);
    if (!log_level.empty()) util::set_log_level(*util::parse_log_level(log_level));

    try {
        if (index_build->parsed()) {
            auto records = index::load_library(templates_file);
            if (!no_describe) {
                auto client = index_llm.client();
                index::DescribeOptions options;
                options.parallelism = parallelism;
                records = index::describe_templates(std::move(records), client, options);
            }
            const auto idx = index::TemplateIndex::build(std::move(records), index::make_embedder(embedder_id));
            idx.save(index_out);
            std::cout << "indexed " << idx.size() << " plausible templates into " << index_out << "\n";
        } else if (index_query->parsed()) {
            const auto idx = index::TemplateIndex::load(query_index);
            for (const auto& hit : idx.search(query_text, query_k)) {
                const auto* rec = idx.find(hit.template_id);
                std::cout << json{{"template_id", hit.template_id},
                                  {"similarity", hit.similarity},
                                  {"count", rec ? rec->count : 0},
                                  {"description", rec ? rec->description : ""}}
                                 .dump()
                          << "\n";
            }
        } else if (plan_cmd->parsed()) {
            const auto config = plan_config.resolve();
            const auto target = chem::canonicalize(plan_target);
            auto prompt = read_prompt(plan_prompt);
            if (prompt.empty()) prompt = pipeline::neutral_prompt();
            const auto idx = index::TemplateIndex::load(plan_index);
            const auto stock = chem::Stock::load(plan_stock);
            fs::create_directories(plan_out);
            fs::remove(fs::path(plan_out) / "llm_calls.jsonl");
            auto client = plan_llm.client(std::make_shared<llm::CallLedger>(fs::path(plan_out) / "llm_calls.jsonl"));
            pipeline::RunResult result;
            if (phase1_only) {
                planner::PlannerContext ctx{prompt, &idx, &stock, &client, config.planner};
                result.attempts = planner::run_phase1(target, ctx);
                for (const auto& a : result.attempts) pipeline::write_attempt(plan_out, a);
            } else {
                result = pipeline::run_pipeline(target, prompt, idx, stock, client, config);
                pipeline::write_run(plan_out, result);
            }
            util::atomic_write(fs::path(plan_out) / "config.json", pipeline::to_json(config).dump(2) + "\n");
            print_summary(result);
        } else if (search_cmd->parsed()) {
            const auto config = search_config.resolve();
            const auto j = read_json_file(search_blueprint);
            const auto blueprint = planner::blueprint_from_json(j);
            std::string target_smiles = search_target;
            if (target_smiles.empty() && j.is_object() && j.contains("target")) target_smiles = j["target"].get<std::string>();
            if (target_smiles.empty()) throw ValidationError("--target is required for a bare blueprint");
            const auto idx = index::TemplateIndex::load(search_index);
            const auto stock = chem::Stock::load(search_stock);
            search::SearchStats stats;
            auto found = search::run_search(blueprint, chem::canonicalize(target_smiles), stock, idx, config.search,
                                            search_attempt, &stats);
            const auto text = search::format_routes_jsonl(search::rank_routes(std::move(found), search_total));
            if (search_out.empty()) {
                std::cout << text;
            } else {
                util::atomic_write(search_out, text);
            }
            std::cerr << stats.iterations << " iterations, " << stats.nodes << " nodes, " << stats.queries
                      << " index queries\n";
        } else if (bench_run->parsed()) {
            const auto config = bench_config.resolve();
            const auto cases = bench::load_manifest(bench_manifest);
            const auto idx = index::TemplateIndex::load(bench_index);
            const auto stock = chem::Stock::load(bench_stock);
            bench::run_benchmark(cases, idx, stock, llm::make_backend(bench_llm.selector), bench_llm.policy(), config,
                                 bench_out);
            std::cout << "ran " << cases.size() << " cases into " << bench_out << "\n";
        } else if (bench_score->parsed()) {
            const auto report = bench::score_results(score_results, parse_ks(score_ks));
            const auto j = bench::to_json(report);
            util::atomic_write(fs::path(score_results) / "report.json", j.dump(2) + "\n");
            for (const auto& [k, v] : report.recall) std::cout << "recall@" << k << " " << v << "\n";
            if (report.precision) std::cout << "precision " << *report.precision << "\n";
            if (report.precision_macro) std::cout << "precision_macro " << *report.precision_macro << "\n";
            std::cout << "solve_rate " << report.solve_rate << "\n";
        } else if (validate_cmd->parsed()) {
            const auto route = read_route(validate_route);
            const auto checker = routes::load_checker(validate_checker);
            bool ok = routes::check_constraint(route, checker);
            if (!validate_stock.empty()) ok = ok && routes::is_solved(route, chem::Stock::load(validate_stock));
            std::cout << (ok ? "pass" : "fail") << "\n";
            return ok ? 0 : 1;
        } else if (serve_cmd->parsed()) {
            if (serve_store.empty()) throw ValidationError("--store or $SYNTHELITE_STORE is required");
            // Signals are taken by a dedicated thread so shutdown runs outside a handler.
            sigset_t signals;
            sigemptyset(&signals);
            sigaddset(&signals, SIGINT);
            sigaddset(&signals, SIGTERM);
            pthread_sigmask(SIG_BLOCK, &signals, nullptr);

            const auto idx = index::TemplateIndex::load(serve_index);
            const auto stock = chem::Stock::load(serve_stock);
            service::JobStore store(serve_store);
            service::ManagerOptions options;
            options.workers = serve_workers;
            service::JobManager manager(store, idx, stock, llm::make_backend(serve_llm.selector), serve_llm.policy(),
                                        options);
            std::thread waiter([&signals] {
                int sig = 0;
                sigwait(&signals, &sig);
                service::stop_server();
            });
            waiter.detach();
            if (!service::serve(manager, serve_host, serve_port, serve_static)) {
                throw Error("cannot bind " + serve_host + ":" + std::to_string(serve_port));
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
