#include <gtest/gtest.h>

#include <filesystem>

#include "fixtures.hpp"
#include "synthelite/bench/benchmark.hpp"
#include "synthelite/error.hpp"
#include "synthelite/pipeline/pipeline.hpp"
#include "synthelite/routes/route.hpp"

using namespace synthelite;
namespace fs = std::filesystem;

namespace {

std::shared_ptr<llm::LlmBackend> plan_backend() {
    return std::make_shared<llm::ScriptedBackend>(llm::ScriptedBackend::load(fixtures::toy_dir() / "plan_script.jsonl"));
}

llm::LlmClient plan_client() { return llm::LlmClient(plan_backend(), llm::RetryPolicy{0, std::chrono::milliseconds(0)}); }

fs::path scratch(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("synthelite_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST(RunConfig, DefaultsAndSections) {
    auto c = pipeline::run_config_from_json(nlohmann::json::parse(R"({"planner":{"attempts":2},"search":{"alpha":1.0}})"));
    EXPECT_EQ(c.planner.attempts, 2);
    EXPECT_EQ(c.planner.max_steps, 25);
    EXPECT_DOUBLE_EQ(c.search.alpha, 1.0);
    EXPECT_EQ(c.search.iterations, 300);
    auto back = pipeline::run_config_from_json(pipeline::to_json(c));
    EXPECT_EQ(pipeline::to_json(back), pipeline::to_json(c));
    EXPECT_THROW(pipeline::run_config_from_json(nlohmann::json::parse(R"({"mcts":{}})")), ValidationError);
    EXPECT_THROW(pipeline::run_config_from_json(nlohmann::json::parse(R"({"planner":{"attempts":0}})")), ValidationError);
    EXPECT_EQ(pipeline::neutral_prompt().rfind("Highly feasible synthesis with high overall yields", 0), 0u);
}

TEST(Pipeline, ScriptedToyRunSolvesTarget) {
    auto client = plan_client();
    auto target = chem::canonicalize(fixtures::kToyTarget);
    auto result = pipeline::run_pipeline(target, pipeline::neutral_prompt(), fixtures::toy_index(), fixtures::toy_stock(),
                                         client, {});
    ASSERT_EQ(result.attempts.size(), 3u);
    for (const auto& a : result.attempts) {
        EXPECT_TRUE(a.solved) << a.detail;
        EXPECT_EQ(a.stop_reason, planner::StopReason::StopSignal);
        EXPECT_EQ(a.blueprint.depth(), 3u);
        ASSERT_TRUE(a.feedback.has_value());
    }
    ASSERT_FALSE(result.routes.empty());
    const auto& top = result.routes.front();
    EXPECT_TRUE(top.solved);
    EXPECT_DOUBLE_EQ(top.alignment, 1.0);
    EXPECT_EQ(top.attempt_index, 3);
    EXPECT_EQ(routes::reaction_count(top.route), 3u);
    EXPECT_TRUE(routes::is_solved(top.route, fixtures::toy_stock()));
}

TEST(Pipeline, RoutesFileIsByteIdenticalAcrossRuns) {
    auto run_once = [](const fs::path& dir) {
        auto client = plan_client();
        auto result = pipeline::run_pipeline(chem::canonicalize(fixtures::kToyTarget), pipeline::neutral_prompt(),
                                             fixtures::toy_index(), fixtures::toy_stock(), client, {});
        pipeline::write_run(dir, result);
        return util::read_file(dir / "routes.jsonl");
    };
    const auto a = run_once(scratch("run_a"));
    const auto b = run_once(scratch("run_b"));
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, b);
}

TEST(Pipeline, WriteReadRoundTrip) {
    auto client = plan_client();
    pipeline::RunConfig config;
    config.planner.attempts = 2;
    auto result = pipeline::run_pipeline(chem::canonicalize(fixtures::kToyTarget), pipeline::neutral_prompt(),
                                         fixtures::toy_index(), fixtures::toy_stock(), client, config);
    auto dir = scratch("roundtrip");
    pipeline::write_run(dir, result);
    EXPECT_TRUE(fs::exists(dir / "attempt_1.json"));
    EXPECT_TRUE(fs::exists(dir / "attempt_2.json"));
    EXPECT_FALSE(fs::exists(dir / "attempt_3.json"));
    auto attempts = pipeline::read_attempts(dir);
    ASSERT_EQ(attempts.size(), 2u);
    for (std::size_t i = 0; i < attempts.size(); ++i) {
        EXPECT_EQ(planner::to_json(attempts[i]), planner::to_json(result.attempts[i]));
    }
    auto routes = pipeline::read_routes(dir);
    EXPECT_EQ(search::format_routes_jsonl(routes), search::format_routes_jsonl(result.routes));
    EXPECT_TRUE(pipeline::read_routes(scratch("empty")).empty());
}

TEST(Pipeline, RefinesFromAttemptsAlone) {
    // Phase 2 only needs the persisted blueprints.
    auto client = plan_client();
    auto result = pipeline::run_pipeline(chem::canonicalize(fixtures::kToyTarget), pipeline::neutral_prompt(),
                                         fixtures::toy_index(), fixtures::toy_stock(), client, {});
    auto dir = scratch("refine");
    pipeline::write_run(dir, result);
    auto again = search::refine_attempts(pipeline::read_attempts(dir), chem::canonicalize(fixtures::kToyTarget),
                                         fixtures::toy_stock(), fixtures::toy_index(), {}, 3);
    EXPECT_EQ(search::format_routes_jsonl(again), util::read_file(dir / "routes.jsonl"));
}

// ---- benchmark ---------------------------------------------------------------

namespace {

fs::path toy_manifest() { return fixtures::toy_dir() / "benchmark" / "manifest.json"; }

} // namespace

TEST(Manifest, LoadsShippedSuite) {
    auto cases = bench::load_manifest(toy_manifest());
    ASSERT_EQ(cases.size(), 5u);
    EXPECT_EQ(cases[0].case_id, "amide_last");
    EXPECT_TRUE(cases[0].checker_file.is_absolute());
    EXPECT_TRUE(fs::exists(cases[0].checker_file));
    const auto& bb = cases[4];
    EXPECT_EQ(bb.building_block, chem::canonicalize("O=C(O)C1CC1").smiles);
    EXPECT_NE(bb.prompt.find("cyclopropanecarboxylic acid"), std::string::npos);
    EXPECT_NE(bb.prompt.find(bb.building_block), std::string::npos);
}

TEST(Manifest, RejectsBadEntries) {
    auto dir = scratch("manifest");
    auto write = [&](const std::string& body) {
        util::atomic_write(dir / "m.json", body);
        return dir / "m.json";
    };
    EXPECT_THROW(bench::load_manifest(write("{}")), SchemaError);
    EXPECT_THROW(bench::load_manifest(write(R"([{"case_id":"a","target_smiles":"CCO"}])")), SchemaError);
    EXPECT_THROW(bench::load_manifest(write(
                     R"([{"case_id":"../a","target_smiles":"CCO","building_block_smiles":"CO"}])")),
                 SchemaError);
    EXPECT_THROW(bench::load_manifest(write(
                     R"([{"case_id":"a","target_smiles":"CCO","building_block_smiles":"CO"},
                         {"case_id":"a","target_smiles":"CCO","building_block_smiles":"CO"}])")),
                 SchemaError);
    EXPECT_THROW(bench::load_manifest(write(
                     R"([{"case_id":"a","target_smiles":"C1CC","building_block_smiles":"CO"}])")),
                 ValidationError);
    auto ok = bench::load_manifest(write(R"([{"case_id":"a","target_smiles":"OCC","building_block_smiles":"OC"}])"));
    EXPECT_EQ(ok[0].target_smiles, "CCO");
}

TEST(Benchmark, ToySuiteRunAndScore) {
    auto cases = bench::load_manifest(toy_manifest());
    auto out = scratch("bench");
    bench::run_benchmark(cases, fixtures::toy_index(), fixtures::toy_stock(), plan_backend(),
                         llm::RetryPolicy{0, std::chrono::milliseconds(0)}, {}, out);
    for (const auto& c : cases) {
        EXPECT_TRUE(fs::exists(out / c.case_id / "routes.jsonl")) << c.case_id;
        EXPECT_TRUE(fs::exists(out / c.case_id / "attempt_3.json")) << c.case_id;
        EXPECT_GT(util::read_lines(out / c.case_id / "llm_calls.jsonl").size(), 0u) << c.case_id;
    }
    auto report = bench::score_results(out, {1, 5});
    ASSERT_EQ(report.cases.size(), 5u);
    // The scripted planner proposes the same route for every prompt: amide last,
    // nitro reduction first, no acyl chloride, no Suzuki, cyclopropane acid as a leaf.
    std::map<std::string, bool> top1;
    for (const auto& c : report.cases) top1[c.case_id] = !c.passes.empty() && c.passes[0];
    EXPECT_TRUE(top1["amide_last"]);
    EXPECT_TRUE(top1["nitro_first"]);
    EXPECT_TRUE(top1["no_acyl_chloride"]);
    EXPECT_FALSE(top1["suzuki_required"]);
    EXPECT_TRUE(top1["cyclopropane_acid"]);
    EXPECT_NEAR(report.recall.at(1), 4.0 / 5.0, 1e-12);
    EXPECT_LE(report.recall.at(1), report.recall.at(5));
    EXPECT_NEAR(report.solve_rate, 4.0 / 5.0, 1e-12);
    ASSERT_TRUE(report.precision.has_value());
    EXPECT_GE(*report.precision, 0.0);
    EXPECT_LE(*report.precision, 1.0);

    auto j = bench::to_json(report);
    EXPECT_EQ(j["cases"].size(), 5u);
    EXPECT_TRUE(j["cases"][0]["pass_at_k"]["1"].get<bool>());
    EXPECT_FALSE(j["cases"][3]["pass_at_k"]["5"].get<bool>());
}

TEST(Benchmark, RoutePassesNeedsSolvedRoute) {
    bench::BenchmarkCase c;
    c.case_id = "x";
    c.building_block = "CCO";
    search::RouteCandidate cand;
    cand.route.root.smiles = "CCO";
    cand.route.root.in_stock = true;
    cand.solved = false;
    EXPECT_FALSE(bench::route_passes(cand, c, nullptr));
    cand.solved = true;
    EXPECT_TRUE(bench::route_passes(cand, c, nullptr));
}
