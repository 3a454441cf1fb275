#pragma once

#include <memory>
#include <string>
#include <vector>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/index/embedder.hpp"
#include "synthelite/index/library.hpp"
#include "synthelite/index/template_index.hpp"
#include "synthelite/llm/protocol.hpp"
#include "synthelite/llm/scripted.hpp"
#include "synthelite/planner/phase1.hpp"
#include "synthelite/util/io.hpp"

namespace fixtures {

using namespace synthelite;

inline std::filesystem::path toy_dir() { return util::asset_dir() / "toy"; }

/// The shipped toy library described through its scripted describer.
inline const index::TemplateIndex& toy_index() {
    static const index::TemplateIndex idx = [] {
        auto backend = std::make_shared<llm::ScriptedBackend>(
            llm::ScriptedBackend::load(toy_dir() / "describe_script.jsonl"));
        llm::LlmClient client(backend, llm::RetryPolicy{0, std::chrono::milliseconds(0)});
        auto records = index::describe_templates(index::load_library(toy_dir() / "templates.tsv"), client);
        return index::TemplateIndex::build(std::move(records), std::make_shared<index::HashedEmbedder>());
    }();
    return idx;
}

inline const chem::Stock& toy_stock() {
    static const chem::Stock stock = chem::Stock::load((toy_dir() / "stock.smi").string());
    return stock;
}

inline llm::LlmClient scripted_client(std::vector<llm::ScriptRule> rules) {
    return llm::LlmClient(std::make_shared<llm::ScriptedBackend>(std::move(rules)),
                          llm::RetryPolicy{0, std::chrono::milliseconds(0)});
}

/// A complete Task 1 + Task 2 answer.
inline std::string step_reply(const std::string& forward, int molecule, std::vector<int> atoms) {
    llm::SynthesisPlan plan;
    plan.strategy_overview = "disconnect";
    plan.next_steps = {{1, "", "next"}};
    llm::NextStep next{"retro " + forward, forward, molecule, std::move(atoms)};
    return llm::format_tag("synthesis_plan", llm::to_json(plan).dump(2)) + "\n\n" + llm::format_next_step(next);
}

inline std::string stop_reply() { return llm::format_tag("stop_signal", "TRUE"); }

inline std::string select_reply(std::vector<int> ranked) {
    return llm::format_tag("selected_reaction_indices", llm::format_int_list(ranked));
}

inline const char* kToyTarget = "CCOC(=O)c1ccc(NC(=O)C2CC2)cc1";

/// (template, forward query) of the toy target's three-step route.
inline const std::vector<std::pair<std::string, std::string>>& toy_steps() {
    static const std::vector<std::pair<std::string, std::string>> steps{
        {"amide_coupling", "The corresponding reaction involves amide bond formation (amide coupling) of a carboxylic "
                           "acid and an aniline to form an amide, focusing on the new C-N bond"},
        {"fischer_esterification", "The corresponding reaction involves esterification (Fischer esterification) of "
                                   "a carboxylic acid and ethanol to form an ethyl ester"},
        {"nitro_reduction", "The corresponding reaction involves reduction of an aromatic nitro group to an aniline "
                            "(nitro reduction)"},
    };
    return steps;
}

/// Blueprint following the toy route, each step expanding the one open reactant.
inline planner::Blueprint blueprint_for(const chem::Molecule& target,
                                        const std::vector<std::pair<std::string, std::string>>& steps,
                                        const index::TemplateIndex& idx, const chem::Stock& stock) {
    planner::Blueprint bp;
    chem::Molecule current = target;
    for (const auto& [id, query] : steps) {
        const auto reactions = chem::apply_template(idx.find(id)->tmpl, current);
        const auto& r = reactions.at(0);
        bp.steps.push_back({static_cast<int>(bp.steps.size()) + 1, r, query});
        for (const auto& m : r.reactants) {
            if (!stock.contains(m)) current = m;
        }
    }
    return bp;
}

inline planner::Blueprint toy_blueprint() {
    return blueprint_for(chem::canonicalize(kToyTarget), toy_steps(), toy_index(), toy_stock());
}

} // namespace fixtures
