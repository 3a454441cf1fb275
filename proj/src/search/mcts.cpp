#include "synthelite/search/mcts.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <tuple>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::search {

using nlohmann::json;

void ScoringParams::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
    if (!(c > 0.0)) throw ValidationError("C must be positive");
    if (iterations < 1) throw ValidationError("iterations must be positive");
    if (!(exploration_c > 0.0)) throw ValidationError("exploration_c must be positive");
    if (depth_slack < 0) throw ValidationError("depth_slack must be non-negative");
    if (top_k < 1) throw ValidationError("top_k must be positive");
}

json to_json(const ScoringParams& p) {
    return {{"alpha", p.alpha},
            {"c", p.c},
            {"iterations", p.iterations},
            {"exploration_c", p.exploration_c},
            {"depth_slack", p.depth_slack},
            {"top_k", p.top_k}};
}

ScoringParams scoring_params_from_json(const json& j) {
    ScoringParams p;
    if (j.is_null()) return p;
    if (!j.is_object()) throw ValidationError("search parameters must be an object");
    try {
        p.alpha = j.value("alpha", p.alpha);
        p.c = j.value("c", p.c);
        p.iterations = j.value("iterations", p.iterations);
        p.exploration_c = j.value("exploration_c", p.exploration_c);
        p.depth_slack = j.value("depth_slack", p.depth_slack);
        p.top_k = j.value("top_k", p.top_k);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad search parameters: ") + e.what());
    }
    p.validate();
    return p;
}

double action_logit(double similarity, std::int64_t count, const ScoringParams& params) {
    return params.alpha * similarity + (1.0 - params.alpha) * index::popularity_prior(count, params.c);
}

void assign_priors(std::vector<ScoredAction>& actions) {
    if (actions.empty()) return;
    double top = actions.front().logit;
    for (const auto& a : actions) top = std::max(top, a.logit);
    double total = 0.0;
    for (auto& a : actions) total += (a.prior = std::exp(a.logit - top));
    for (auto& a : actions) a.prior /= total;
}

namespace {

void sort_actions(std::vector<ScoredAction>& actions) {
    std::stable_sort(actions.begin(), actions.end(), [](const ScoredAction& a, const ScoredAction& b) {
        if (a.prior != b.prior) return a.prior > b.prior;
        return a.reaction.retro_smiles() < b.reaction.retro_smiles();
    });
}

// Adds or keeps the higher-scored copy of a reaction.
void merge_action(std::vector<ScoredAction>& out, std::map<std::string, std::size_t>& seen, chem::RetroReaction r,
                  double logit) {
    auto key = r.retro_smiles();
    if (auto it = seen.find(key); it != seen.end()) {
        if (logit > out[it->second].logit) out[it->second] = {std::move(r), logit, 0.0};
        return;
    }
    seen.emplace(std::move(key), out.size());
    out.push_back({std::move(r), logit, 0.0});
}

} // namespace

ActionCache::ActionCache(const planner::Blueprint& blueprint, const index::TemplateIndex& index, ScoringParams params)
    : blueprint_(&blueprint), index_(&index), params_(params) {}

const std::vector<index::SearchHit>& ActionCache::hits(int depth) {
    auto it = hits_.find(depth);
    if (it != hits_.end()) return it->second;
    std::vector<index::SearchHit> found;
    try {
        ++queries_;
        found = index_->search(blueprint_->steps.at(depth - 1).query, params_.top_k);
    } catch (const EmptyIndexError&) {
    } catch (const EmptyTextError&) {
    }
    return hits_.emplace(depth, std::move(found)).first->second;
}

bool ActionCache::on_reference_site(const chem::RetroReaction& reaction, const chem::Molecule& molecule, int depth) {
    const auto& ref = blueprint_->steps.at(depth - 1).reference;
    if (molecule == ref.product) return chem::site_matches(reaction, ref.site);
    const auto key = molecule.smiles + '\t' + std::to_string(depth);
    auto it = reference_sites_.find(key);
    if (it == reference_sites_.end()) {
        std::vector<std::set<int>> sites;
        if (const auto* rec = index_->find(ref.template_id)) {
            for (const auto& r : chem::apply_template(rec->tmpl, molecule)) sites.push_back(r.site);
        }
        it = reference_sites_.emplace(key, std::move(sites)).first;
    }
    if (it->second.empty()) return true;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](const std::set<int>& site) { return chem::site_matches(reaction, site); });
}

const std::vector<ScoredAction>& ActionCache::actions(const chem::Molecule& molecule, int depth) {
    const auto key = std::make_pair(molecule.smiles, depth);
    if (auto it = actions_.find(key); it != actions_.end()) return it->second;

    std::vector<ScoredAction> out;
    std::map<std::string, std::size_t> seen;
    if (depth >= 1 && static_cast<std::size_t>(depth) <= blueprint_->depth()) {
        for (const auto& hit : hits(depth)) {
            const auto* rec = index_->find(hit.template_id);
            if (!rec) continue;
            const double z = action_logit(hit.similarity, rec->count, params_);
            for (auto& r : chem::apply_template(rec->tmpl, molecule)) {
                if (on_reference_site(r, molecule, depth)) merge_action(out, seen, std::move(r), z);
            }
        }
    } else {
        for (const auto* rec : index_->most_popular(params_.top_k)) {
            const double z = index::popularity_prior(rec->count, params_.c);
            for (auto& r : chem::apply_template(rec->tmpl, molecule)) merge_action(out, seen, std::move(r), z);
        }
    }
    assign_priors(out);
    sort_actions(out);
    return actions_.emplace(key, std::move(out)).first->second;
}

std::vector<ScoredAction> candidate_actions(const chem::Molecule& molecule, int depth, ActionCache& cache) {
    return cache.actions(molecule, depth);
}

json to_json(const RouteCandidate& c) {
    return {{"route", routes::to_json(c.route)},
            {"alignment", c.alignment},
            {"attempt_index", c.attempt_index},
            {"solved", c.solved}};
}

RouteCandidate route_candidate_from_json(const json& j) {
    try {
        RouteCandidate c;
        c.route = routes::route_from_json(j.at("route"));
        c.alignment = j.at("alignment").get<double>();
        c.attempt_index = j.at("attempt_index").get<int>();
        c.solved = j.at("solved").get<bool>();
        if (c.alignment < 0.0 || c.alignment > 1.0) throw SchemaError("alignment outside [0, 1]");
        return c;
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("bad route candidate: ") + e.what());
    }
}

double alignment_score(const routes::Route& route, const planner::Blueprint& blueprint) {
    if (blueprint.steps.empty()) return 0.0;
    std::set<std::pair<std::string, std::string>> present;
    for (const auto& r : routes::route_reactions(route)) present.emplace(r.template_id, r.product.smiles);
    std::size_t hits = 0;
    for (const auto& s : blueprint.steps) {
        hits += present.count({s.reference.template_id, s.reference.product.smiles});
    }
    return static_cast<double>(hits) / static_cast<double>(blueprint.steps.size());
}

int expansion_slot(const std::vector<routes::FrontierEntry>& frontier, const planner::Blueprint& blueprint, int depth) {
    if (depth >= 1 && static_cast<std::size_t>(depth) <= blueprint.depth()) {
        const auto& product = blueprint.steps[depth - 1].reference.product;
        for (std::size_t i = 0; i < frontier.size(); ++i) {
            if (!frontier[i].in_stock && frontier[i].molecule == product) return static_cast<int>(i);
        }
    }
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        if (!frontier[i].in_stock) return static_cast<int>(i);
    }
    return -1;
}

bool closes_cycle(const chem::RetroReaction& reaction, const std::vector<chem::RetroReaction>& applied) {
    for (const auto& m : reaction.reactants) {
        if (m == reaction.product) return true;
        for (const auto& a : applied) {
            if (m == a.product) return true;
        }
    }
    return false;
}

namespace {

struct Node {
    Node(routes::RouteBuilder s, int d) : state(std::move(s)), depth(d) {}

    routes::RouteBuilder state;
    int depth = 0;
    double value = 0.0;
    bool solved = false;
    bool terminal = false;
    bool expanded = false;
    bool exhausted = false;
    int visits = 0;
    double value_sum = 0.0;
    int slot = -1;
    std::vector<ScoredAction> actions;
    std::vector<int> children; ///< node index per action, -1 until visited
};

double stock_fraction(const routes::RouteBuilder& state) {
    const auto& f = state.frontier();
    if (f.empty()) return 1.0;
    const auto n = std::count_if(f.begin(), f.end(), [](const routes::FrontierEntry& e) { return e.in_stock; });
    return static_cast<double>(n) / static_cast<double>(f.size());
}

class Tree {
public:
    Tree(const planner::Blueprint& blueprint, const chem::Molecule& target, const chem::Stock& stock,
         const index::TemplateIndex& index, const ScoringParams& params)
        : blueprint_(blueprint), params_(params), cache_(blueprint, index, params),
          max_depth_(static_cast<int>(blueprint.depth()) + params.depth_slack) {
        add_node(routes::RouteBuilder(target, stock), 0);
    }

    // One select / expand / evaluate / backpropagate pass. False once the
    // tree is fully enumerated.
    bool iterate() {
        if (nodes_[0].exhausted && nodes_[0].visits > 0) return false;
        std::vector<int> path{0};
        int n = 0;
        for (;;) {
            if (nodes_[n].terminal) break;
            if (!nodes_[n].expanded) {
                expand(n);
                if (nodes_[n].terminal) break;
            }
            const int pick = select(n);
            if (pick < 0) break;
            if (nodes_[n].children[pick] < 0) {
                auto state = nodes_[n].state;
                state.expand(static_cast<std::size_t>(nodes_[n].slot), nodes_[n].actions[pick].reaction);
                const int child = add_node(std::move(state), nodes_[n].depth + 1);
                nodes_[n].children[pick] = child;
                path.push_back(child);
                break;
            }
            n = nodes_[n].children[pick];
            path.push_back(n);
        }
        const double value = nodes_[path.back()].value;
        for (int i : path) {
            nodes_[i].visits += 1;
            nodes_[i].value_sum += value;
        }
        for (auto it = path.rbegin(); it != path.rend(); ++it) update_exhausted(*it);
        return true;
    }

    std::vector<RouteCandidate> results(int attempt_index) const {
        std::vector<RouteCandidate> out;
        for (int i : solved_) out.push_back(candidate(i, attempt_index));
        if (out.empty()) out.push_back(candidate(best_unsolved_, attempt_index));
        return out;
    }

    std::size_t size() const { return nodes_.size(); }
    std::size_t queries() const { return cache_.queries(); }
    bool exhausted() const { return nodes_[0].exhausted; }

private:
    int add_node(routes::RouteBuilder state, int depth) {
        Node node(std::move(state), depth);
        node.solved = node.state.all_in_stock();
        node.value = node.solved ? 1.0 : stock_fraction(node.state);
        node.terminal = node.solved || depth >= max_depth_;
        node.exhausted = node.terminal;
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(std::move(node));
        const auto& added = nodes_.back();
        if (added.solved) {
            if (seen_.insert(routes::reaction_multiset(added.state.route())).second) solved_.push_back(id);
        } else if (best_unsolved_ < 0 || added.value > nodes_[best_unsolved_].value) {
            best_unsolved_ = id;
        }
        return id;
    }

    void expand(int n) {
        auto& node = nodes_[n];
        node.expanded = true;
        node.slot = expansion_slot(node.state.frontier(), blueprint_, node.depth + 1);
        if (node.slot >= 0) {
            const auto& molecule = node.state.frontier()[node.slot].molecule;
            for (const auto& a : cache_.actions(molecule, node.depth + 1)) {
                if (!closes_cycle(a.reaction, node.state.reactions())) node.actions.push_back(a);
            }
        }
        assign_priors(node.actions);
        node.children.assign(node.actions.size(), -1);
        if (node.actions.empty()) node.terminal = node.exhausted = true;
    }

    int select(int n) const {
        const auto& node = nodes_[n];
        const double scale = params_.exploration_c * std::sqrt(std::max(1, node.visits));
        int best = -1;
        double best_score = 0.0;
        for (std::size_t i = 0; i < node.actions.size(); ++i) {
            const int c = node.children[i];
            double q = 0.0;
            int visits = 0;
            if (c >= 0) {
                if (nodes_[c].exhausted) continue;
                visits = nodes_[c].visits;
                q = visits ? nodes_[c].value_sum / visits : 0.0;
            }
            const double score = q + scale * node.actions[i].prior / (1.0 + visits);
            if (best < 0 || score > best_score) {
                best = static_cast<int>(i);
                best_score = score;
            }
        }
        return best;
    }

    void update_exhausted(int n) {
        auto& node = nodes_[n];
        if (node.exhausted || !node.expanded) return;
        node.exhausted = std::all_of(node.children.begin(), node.children.end(),
                                     [&](int c) { return c >= 0 && nodes_[c].exhausted; });
    }

    RouteCandidate candidate(int n, int attempt_index) const {
        RouteCandidate c;
        c.route = nodes_[n].state.route();
        c.solved = nodes_[n].solved;
        c.alignment = alignment_score(c.route, blueprint_);
        c.attempt_index = attempt_index;
        return c;
    }

    const planner::Blueprint& blueprint_;
    ScoringParams params_;
    ActionCache cache_;
    int max_depth_;
    std::vector<Node> nodes_;
    std::vector<int> solved_;
    std::set<std::vector<std::string>> seen_;
    int best_unsolved_ = -1;
};

} // namespace

std::vector<RouteCandidate> run_search(const planner::Blueprint& blueprint, const chem::Molecule& target,
                                       const chem::Stock& stock, const index::TemplateIndex& index,
                                       const ScoringParams& params, int attempt_index, SearchStats* stats) {
    params.validate();
    Tree tree(blueprint, target, stock, index, params);
    int done = 0;
    while (done < params.iterations && tree.iterate()) ++done;
    if (stats) {
        stats->iterations = done;
        stats->nodes = tree.size();
        stats->queries = tree.queries();
        stats->exhausted = tree.exhausted();
    }
    return tree.results(attempt_index);
}

std::vector<RouteCandidate> rank_routes(std::vector<RouteCandidate> candidates, int total_attempts) {
    if (total_attempts < 1) throw ValidationError("total_attempts must be positive");
    struct Keyed {
        RouteCandidate c;
        double weight;
        std::size_t reactions;
        std::string hash;
    };
    std::vector<Keyed> keyed;
    keyed.reserve(candidates.size());
    for (auto& c : candidates) {
        const double weight = c.alignment * (static_cast<double>(c.attempt_index) / total_attempts);
        const auto n = routes::reaction_count(c.route);
        auto hash = routes::route_hash(c.route);
        keyed.push_back({std::move(c), weight, n, std::move(hash)});
    }
    std::stable_sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
        if (a.c.solved != b.c.solved) return a.c.solved;
        if (a.weight != b.weight) return a.weight > b.weight;
        if (a.reactions != b.reactions) return a.reactions < b.reactions;
        return a.hash < b.hash;
    });
    std::vector<RouteCandidate> out;
    std::set<std::vector<std::string>> seen;
    for (auto& k : keyed) {
        if (seen.insert(routes::reaction_multiset(k.c.route)).second) out.push_back(std::move(k.c));
    }
    return out;
}

std::vector<RouteCandidate> refine_attempts(const std::vector<planner::AttemptResult>& attempts,
                                            const chem::Molecule& target, const chem::Stock& stock,
                                            const index::TemplateIndex& index, const ScoringParams& params,
                                            int total_attempts) {
    std::vector<std::future<std::vector<RouteCandidate>>> jobs;
    for (const auto& a : attempts) {
        jobs.push_back(std::async(std::launch::async, [&, attempt = &a] {
            return run_search(attempt->blueprint, target, stock, index, params, attempt->index);
        }));
    }
    std::vector<RouteCandidate> all;
    for (auto& j : jobs) {
        auto found = j.get();
        all.insert(all.end(), std::make_move_iterator(found.begin()), std::make_move_iterator(found.end()));
    }
    return rank_routes(std::move(all), total_attempts);
}

std::string format_routes_jsonl(const std::vector<RouteCandidate>& ranked) {
    std::string out;
    for (const auto& c : ranked) out += to_json(c).dump() + "\n";
    return out;
}

std::vector<RouteCandidate> parse_routes_jsonl(std::string_view text) {
    std::vector<RouteCandidate> out;
    for (const auto& line : util::split(text, '\n')) {
        if (util::trim(line).empty()) continue;
        try {
            out.push_back(route_candidate_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            throw SchemaError(std::string("bad routes line: ") + e.what());
        }
    }
    return out;
}

} // namespace synthelite::search
