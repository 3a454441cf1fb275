#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/chem/reaction.hpp"
#include "synthelite/index/template_index.hpp"
#include "synthelite/planner/phase1.hpp"
#include "synthelite/routes/route.hpp"

namespace synthelite::search {

struct ScoringParams {
    double alpha = 0.5;
    double c = 100.0;
    int iterations = 300;
    double exploration_c = 1.4;
    int depth_slack = 5;
    std::size_t top_k = 50; ///< hits retrieved per depth, or popular templates past the blueprint

    /// Throws ValidationError.
    void validate() const;
};

nlohmann::json to_json(const ScoringParams& params);
/// Missing keys keep their defaults. Throws ValidationError.
ScoringParams scoring_params_from_json(const nlohmann::json& j);

/// alpha * sim + (1 - alpha) * count / (count + C).
double action_logit(double similarity, std::int64_t count, const ScoringParams& params);

struct ScoredAction {
    chem::RetroReaction reaction;
    double logit = 0.0;
    double prior = 0.0;
};

/// Softmax of the logits written into each prior.
void assign_priors(std::vector<ScoredAction>& actions);

/// Memoized action enumeration for one search. Retrieval runs at most once
/// per blueprint depth; actions are kept per (molecule, depth).
class ActionCache {
public:
    ActionCache(const planner::Blueprint& blueprint, const index::TemplateIndex& index, ScoringParams params);

    /// Sorted by prior descending, then retro SMILES. depth >= 1.
    const std::vector<ScoredAction>& actions(const chem::Molecule& molecule, int depth);

    std::size_t queries() const { return queries_; }
    const planner::Blueprint& blueprint() const { return *blueprint_; }

private:
    const std::vector<index::SearchHit>& hits(int depth);
    bool on_reference_site(const chem::RetroReaction& reaction, const chem::Molecule& molecule, int depth);

    const planner::Blueprint* blueprint_;
    const index::TemplateIndex* index_;
    ScoringParams params_;
    std::map<int, std::vector<index::SearchHit>> hits_;
    std::map<std::pair<std::string, int>, std::vector<ScoredAction>> actions_;
    std::map<std::string, std::vector<std::set<int>>> reference_sites_;
    std::size_t queries_ = 0;
};

std::vector<ScoredAction> candidate_actions(const chem::Molecule& molecule, int depth, ActionCache& cache);

struct RouteCandidate {
    routes::Route route;
    double alignment = 0.0;
    int attempt_index = 1;
    bool solved = false;
};

nlohmann::json to_json(const RouteCandidate& candidate);
/// Throws SchemaError.
RouteCandidate route_candidate_from_json(const nlohmann::json& j);

/// Share of blueprint steps whose (template, product) occurs in the route.
double alignment_score(const routes::Route& route, const planner::Blueprint& blueprint);

/// Frontier molecule a node at `depth` expands: the blueprint's product for
/// that depth when it is still open, otherwise the first open molecule.
/// Returns -1 when every molecule is in stock.
int expansion_slot(const std::vector<routes::FrontierEntry>& frontier, const planner::Blueprint& blueprint, int depth);

/// True when a reactant would re-create a molecule already expanded on the route.
bool closes_cycle(const chem::RetroReaction& reaction, const std::vector<chem::RetroReaction>& applied);

struct SearchStats {
    int iterations = 0;
    std::size_t nodes = 0;
    std::size_t queries = 0;
    bool exhausted = false; ///< the whole tree was enumerated before the budget ran out
};

/// Blueprint-guided PUCT search. Returns every distinct solved route in
/// discovery order, or the best unsolved route when none is solved.
std::vector<RouteCandidate> run_search(const planner::Blueprint& blueprint, const chem::Molecule& target,
                                       const chem::Stock& stock, const index::TemplateIndex& index,
                                       const ScoringParams& params, int attempt_index = 1,
                                       SearchStats* stats = nullptr);

/// Solved first, then alignment weighted by attempt_index / total_attempts,
/// then fewer reactions, then route hash. Keeps one route per reaction multiset.
std::vector<RouteCandidate> rank_routes(std::vector<RouteCandidate> candidates, int total_attempts);

/// One search per attempt, run concurrently, ranked together.
std::vector<RouteCandidate> refine_attempts(const std::vector<planner::AttemptResult>& attempts,
                                            const chem::Molecule& target, const chem::Stock& stock,
                                            const index::TemplateIndex& index, const ScoringParams& params,
                                            int total_attempts);

/// One compact JSON line per candidate.
std::string format_routes_jsonl(const std::vector<RouteCandidate>& ranked);
std::vector<RouteCandidate> parse_routes_jsonl(std::string_view text);

} // namespace synthelite::search
