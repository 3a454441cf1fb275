#include "synthelite/bench/benchmark.hpp"

#include "synthelite/error.hpp"
#include "synthelite/llm/prompt.hpp"
#include "synthelite/util/io.hpp"
#include "synthelite/util/log.hpp"

namespace synthelite::bench {

using nlohmann::json;

json to_json(const BenchmarkCase& c) {
    json j{{"case_id", c.case_id}, {"target_smiles", c.target_smiles}, {"prompt", c.prompt}};
    if (!c.checker_file.empty()) j["checker_file"] = c.checker_file.string();
    if (!c.building_block.empty()) j["building_block_smiles"] = c.building_block;
    if (!c.building_block_name.empty()) j["building_block_name"] = c.building_block_name;
    return j;
}

std::vector<BenchmarkCase> load_manifest(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(util::read_file(path));
    } catch (const json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    if (!j.is_array()) throw SchemaError(path.string() + ": manifest must be a list");
    const auto base = std::filesystem::absolute(path).parent_path();
    std::vector<BenchmarkCase> out;
    std::set<std::string> ids;
    for (const auto& e : j) {
        BenchmarkCase c;
        try {
            c.case_id = e.at("case_id").get<std::string>();
            c.target_smiles = e.at("target_smiles").get<std::string>();
            c.prompt = e.value("prompt", std::string{});
            if (e.contains("checker_file")) c.checker_file = base / e.at("checker_file").get<std::string>();
            c.building_block = e.value("building_block_smiles", std::string{});
            c.building_block_name = e.value("building_block_name", std::string{});
        } catch (const json::exception& ex) {
            throw SchemaError(path.string() + ": bad case: " + ex.what());
        }
        if (c.case_id.empty() || c.case_id.find_first_of("/\\") != std::string::npos || c.case_id[0] == '.') {
            throw SchemaError("bad case_id: '" + c.case_id + "'");
        }
        if (!ids.insert(c.case_id).second) throw SchemaError("duplicate case_id: " + c.case_id);
        if (c.checker_file.empty() == c.building_block.empty()) {
            throw SchemaError(c.case_id + ": give exactly one of checker_file and building_block_smiles");
        }
        try {
            c.target_smiles = chem::canonicalize(c.target_smiles).smiles;
            if (!c.building_block.empty()) c.building_block = chem::canonicalize(c.building_block).smiles;
        } catch (const ParseError& ex) {
            throw ValidationError(c.case_id + ": " + ex.what());
        }
        if (!c.checker_file.empty()) routes::load_checker(c.checker_file);
        if (c.prompt.empty()) {
            if (!c.building_block.empty()) {
                const auto name = c.building_block_name.empty() ? c.building_block : c.building_block_name;
                c.prompt = llm::load_prompt("starting_material").render({{"IUPAC_NAME", name}, {"SMILES", c.building_block}});
            } else {
                c.prompt = pipeline::neutral_prompt();
            }
        }
        out.push_back(std::move(c));
    }
    return out;
}

bool route_passes(const search::RouteCandidate& candidate, const BenchmarkCase& c,
                  const routes::ConstraintChecker* checker) {
    if (!candidate.solved) return false;
    if (!c.building_block.empty()) {
        return routes::contains_building_block(candidate.route, chem::Molecule{c.building_block});
    }
    return checker && routes::check_constraint(candidate.route, *checker);
}

void run_benchmark(const std::vector<BenchmarkCase>& cases, const index::TemplateIndex& index,
                   const chem::Stock& stock, std::shared_ptr<llm::LlmBackend> backend,
                   const llm::RetryPolicy& policy, const pipeline::RunConfig& config,
                   const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    json manifest = json::array();
    for (const auto& c : cases) manifest.push_back(to_json(c));
    util::atomic_write(out / "manifest.json", manifest.dump(2) + "\n");
    for (const auto& c : cases) {
        const auto dir = out / c.case_id;
        std::filesystem::create_directories(dir);
        std::filesystem::remove(dir / "llm_calls.jsonl");
        llm::LlmClient client(backend, policy, std::make_shared<llm::CallLedger>(dir / "llm_calls.jsonl"));
        util::log_info("benchmark case " + c.case_id);
        const auto result =
            pipeline::run_pipeline(chem::Molecule{c.target_smiles}, c.prompt, index, stock, client, config);
        pipeline::write_run(dir, result);
    }
}

Report score_results(const std::filesystem::path& results, const std::vector<std::size_t>& ks) {
    const auto cases = load_manifest(results / "manifest.json");
    Report report;
    for (const auto& c : cases) {
        std::optional<routes::ConstraintChecker> checker;
        if (!c.checker_file.empty()) checker = routes::load_checker(c.checker_file);
        routes::CaseOutcome outcome{c.case_id, {}};
        for (const auto& r : pipeline::read_routes(results / c.case_id)) {
            outcome.passes.push_back(route_passes(r, c, checker ? &*checker : nullptr));
        }
        report.cases.push_back(std::move(outcome));
    }
    for (auto k : ks) report.recall[k] = routes::recall_at_k(report.cases, k);
    report.solve_rate = routes::solve_rate(report.cases);
    try {
        report.precision = routes::precision(report.cases);
        report.precision_macro = routes::precision(report.cases, true);
    } catch (const EmptyBenchmarkError&) {
    }
    return report;
}

json to_json(const Report& report) {
    json cases = json::array();
    for (const auto& c : report.cases) {
        json at_k = json::object();
        for (const auto& [k, _] : report.recall) {
            bool hit = false;
            for (std::size_t i = 0; i < c.passes.size() && i < k; ++i) hit = hit || c.passes[i];
            at_k[std::to_string(k)] = hit;
        }
        cases.push_back({{"case_id", c.case_id}, {"passes", c.passes}, {"pass_at_k", at_k}});
    }
    json recall = json::object();
    for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
    return {{"cases", cases},
            {"recall_at_k", recall},
            {"precision", report.precision ? json(*report.precision) : json(nullptr)},
            {"precision_macro", report.precision_macro ? json(*report.precision_macro) : json(nullptr)},
            {"solve_rate", report.solve_rate}};
}

} // namespace synthelite::bench
