#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthelite/planner/phase1.hpp"
#include "synthelite/search/mcts.hpp"

namespace synthelite::pipeline {

struct RunConfig {
    planner::PlannerConfig planner;
    search::ScoringParams search;
};

/// {"planner": {...}, "search": {...}}
nlohmann::json to_json(const RunConfig& config);
/// Missing sections keep their defaults. Throws ValidationError.
RunConfig run_config_from_json(const nlohmann::json& j);

struct RunResult {
    std::vector<planner::AttemptResult> attempts;
    std::vector<search::RouteCandidate> routes; ///< ranked
};

/// The shipped default user prompt.
std::string neutral_prompt();

/// Phase 1 attempts followed by one Phase 2 search per attempt.
RunResult run_pipeline(const chem::Molecule& target, const std::string& user_prompt,
                       const index::TemplateIndex& index, const chem::Stock& stock, const llm::LlmClient& llm,
                       const RunConfig& config);

std::filesystem::path attempt_path(const std::filesystem::path& dir, int index);

/// attempt_<k>.json per attempt and routes.jsonl, each written atomically.
void write_attempt(const std::filesystem::path& dir, const planner::AttemptResult& attempt);
void write_routes(const std::filesystem::path& dir, const std::vector<search::RouteCandidate>& routes);
void write_run(const std::filesystem::path& dir, const RunResult& result);

/// attempt_1.json, attempt_2.json, ... until the first gap.
std::vector<planner::AttemptResult> read_attempts(const std::filesystem::path& dir);
std::vector<search::RouteCandidate> read_routes(const std::filesystem::path& dir);

} // namespace synthelite::pipeline
