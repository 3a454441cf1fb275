#include "synthelite/pipeline/pipeline.hpp"

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::pipeline {

using nlohmann::json;

json to_json(const RunConfig& config) {
    return {{"planner", planner::to_json(config.planner)}, {"search", search::to_json(config.search)}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ValidationError("config must be an object");
    for (const auto& [key, value] : j.items()) {
        if (key != "planner" && key != "search") throw ValidationError("unknown config section: " + key);
    }
    if (j.contains("planner")) c.planner = planner::planner_config_from_json(j.at("planner"));
    if (j.contains("search")) c.search = search::scoring_params_from_json(j.at("search"));
    return c;
}

std::string neutral_prompt() { return util::trim(util::read_file(util::asset_dir() / "prompts" / "neutral_prompt.txt")); }

RunResult run_pipeline(const chem::Molecule& target, const std::string& user_prompt,
                       const index::TemplateIndex& index, const chem::Stock& stock, const llm::LlmClient& llm,
                       const RunConfig& config) {
    planner::PlannerContext ctx{user_prompt, &index, &stock, &llm, config.planner};
    RunResult result;
    result.attempts = planner::run_phase1(target, ctx);
    result.routes = search::refine_attempts(result.attempts, target, stock, index, config.search, config.planner.attempts);
    return result;
}

std::filesystem::path attempt_path(const std::filesystem::path& dir, int index) {
    return dir / ("attempt_" + std::to_string(index) + ".json");
}

void write_attempt(const std::filesystem::path& dir, const planner::AttemptResult& attempt) {
    util::atomic_write(attempt_path(dir, attempt.index), planner::to_json(attempt).dump(2) + "\n");
}

void write_routes(const std::filesystem::path& dir, const std::vector<search::RouteCandidate>& routes) {
    util::atomic_write(dir / "routes.jsonl", search::format_routes_jsonl(routes));
}

void write_run(const std::filesystem::path& dir, const RunResult& result) {
    std::filesystem::create_directories(dir);
    for (const auto& a : result.attempts) write_attempt(dir, a);
    write_routes(dir, result.routes);
}

std::vector<planner::AttemptResult> read_attempts(const std::filesystem::path& dir) {
    std::vector<planner::AttemptResult> out;
    for (int k = 1;; ++k) {
        const auto path = attempt_path(dir, k);
        if (!std::filesystem::exists(path)) break;
        try {
            out.push_back(planner::attempt_from_json(json::parse(util::read_file(path))));
        } catch (const json::exception& e) {
            throw SchemaError(path.string() + ": " + e.what());
        }
    }
    return out;
}

std::vector<search::RouteCandidate> read_routes(const std::filesystem::path& dir) {
    const auto path = dir / "routes.jsonl";
    if (!std::filesystem::exists(path)) return {};
    return search::parse_routes_jsonl(util::read_file(path));
}

} // namespace synthelite::pipeline
