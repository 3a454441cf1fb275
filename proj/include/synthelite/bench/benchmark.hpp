#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthelite/pipeline/pipeline.hpp"
#include "synthelite/routes/checker.hpp"
#include "synthelite/routes/metrics.hpp"

namespace synthelite::bench {

/// One manifest entry. Exactly one of checker_file / building_block is set.
struct BenchmarkCase {
    std::string case_id;
    std::string target_smiles;
    std::string prompt;
    std::filesystem::path checker_file; ///< absolute after loading
    std::string building_block;
    std::string building_block_name; ///< used in the default starting-material prompt
};

nlohmann::json to_json(const BenchmarkCase& c);

/// JSON list of cases; checker paths resolve against the manifest's
/// directory. A missing prompt becomes the starting-material prompt for
/// building-block cases and the neutral prompt otherwise.
/// Throws SchemaError, ValidationError.
std::vector<BenchmarkCase> load_manifest(const std::filesystem::path& path);

/// Solved and satisfying the case's checker or building-block constraint.
bool route_passes(const search::RouteCandidate& candidate, const BenchmarkCase& c,
                  const routes::ConstraintChecker* checker);

/// Runs every case into <out>/<case_id>/ and copies the resolved manifest to
/// <out>/manifest.json. Each case gets its own call ledger file.
void run_benchmark(const std::vector<BenchmarkCase>& cases, const index::TemplateIndex& index,
                   const chem::Stock& stock, std::shared_ptr<llm::LlmBackend> backend,
                   const llm::RetryPolicy& policy, const pipeline::RunConfig& config,
                   const std::filesystem::path& out);

struct Report {
    std::vector<routes::CaseOutcome> cases;
    std::map<std::size_t, double> recall;
    std::optional<double> precision;       ///< pooled; empty when no route exists
    std::optional<double> precision_macro;
    double solve_rate = 0.0;
};

/// Scores a results directory written by run_benchmark. Throws EmptyBenchmarkError.
Report score_results(const std::filesystem::path& results, const std::vector<std::size_t>& ks);

nlohmann::json to_json(const Report& report);

} // namespace synthelite::bench
