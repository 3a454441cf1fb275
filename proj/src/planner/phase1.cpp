#include "synthelite/planner/phase1.hpp"

#include <algorithm>
#include <set>

#include "synthelite/error.hpp"
#include "synthelite/llm/prompt.hpp"
#include "synthelite/util/io.hpp"
#include "synthelite/util/log.hpp"

namespace synthelite::planner {

using nlohmann::json;

namespace {

struct PlanPrompts {
    llm::PromptTemplate role = llm::load_prompt("plan_role");
    llm::PromptTemplate input = llm::load_prompt("plan_input");
    llm::PromptTemplate previous = llm::load_prompt("plan_previous_attempts");
    llm::PromptTemplate state = llm::load_prompt("plan_state");
    llm::PromptTemplate task0 = llm::load_prompt("plan_task0");
    llm::PromptTemplate task1 = llm::load_prompt("plan_task1");
    llm::PromptTemplate task2 = llm::load_prompt("plan_task2");
    llm::PromptTemplate select = llm::load_prompt("plan_select");
};

const PlanPrompts& plan_prompts() {
    static const PlanPrompts p;
    return p;
}

struct EvalPrompts {
    llm::PromptTemplate role = llm::load_prompt("evaluate_role");
    llm::PromptTemplate input = llm::load_prompt("evaluate_input");
    llm::PromptTemplate instruction = llm::load_prompt("evaluate_instruction");
};

const EvalPrompts& eval_prompts() {
    static const EvalPrompts p;
    return p;
}

// Tag named in a parser error message, e.g. "missing <score>".
std::string tag_in(const std::string& message, const std::string& fallback) {
    const auto open = message.find('<');
    const auto close = message.find('>', open == std::string::npos ? 0 : open);
    if (open == std::string::npos || close == std::string::npos) return fallback;
    return message.substr(open + 1, close - open - 1);
}

std::string availability(bool in_stock) { return in_stock ? "in stock" : "not in stock"; }

std::string frontier_text(const PlannerState& state, bool mapped) {
    std::string out;
    const auto& frontier = state.builder.frontier();
    for (std::size_t i = 0; i < frontier.size(); ++i) {
        const auto smiles = mapped ? chem::map_atoms(frontier[i].molecule).smiles : frontier[i].molecule.smiles;
        out += std::to_string(i) + ": " + smiles + " (" + availability(frontier[i].in_stock) + ")\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

std::string previous_reactions_text(const PlannerState& state) {
    json list = json::array();
    for (const auto& r : state.builder.reactions()) list.push_back(r.retro_smiles());
    return list.dump();
}

std::string step_prompt(const PlannerState& state, const std::vector<AttemptResult>& history,
                        const PlannerContext& ctx) {
    const auto& p = plan_prompts();
    std::string out = p.input.render({{"TARGET_MOLECULE", state.target.smiles}, {"USER_PROMPT", ctx.user_prompt}});
    if (ctx.config.chain_feedback && !history.empty()) {
        out += "\n\n" + p.previous.render({{"PREVIOUS_ATTEMPTS", format_previous_attempts(history)}});
    }
    out += "\n\n" + p.state.render({{"PREVIOUS_REACTIONS", previous_reactions_text(state)},
                                    {"CURRENT_MOLECULE_SMILES", frontier_text(state, false)},
                                    {"CURRENT_MOLECULE_SMILES_MAPPED", frontier_text(state, true)}});
    out += "\n\n" + p.task0.body() + "\n\n" + p.task1.body() + "\n\n" + p.task2.body();
    return out;
}

// Site-filtered reactions of the retrieved templates on one molecule, in hit order.
std::vector<chem::RetroReaction> retrieve_candidates(const chem::Molecule& molecule, const llm::NextStep& next,
                                                     const PlannerContext& ctx) {
    const std::set<int> requested(next.atom_indices.begin(), next.atom_indices.end());
    std::vector<chem::RetroReaction> out;
    std::set<std::string> seen;
    for (const auto& hit : ctx.index->search(next.forward_reaction, ctx.config.search_k)) {
        const auto* record = ctx.index->find(hit.template_id);
        if (!record) continue;
        for (auto& reaction : chem::apply_template(record->tmpl, molecule)) {
            if (!chem::site_matches(reaction, requested)) continue;
            if (!seen.insert(reaction.retro_smiles()).second) continue;
            out.push_back(std::move(reaction));
            if (out.size() >= static_cast<std::size_t>(ctx.config.max_candidates)) return out;
        }
    }
    return out;
}

std::string search_result_text(const std::vector<chem::RetroReaction>& candidates) {
    std::string out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        out += std::to_string(i) + ": " + forward_smiles(candidates[i]) + "\n";
    }
    if (!out.empty()) out.pop_back();
    return out;
}

json reaction_json(const chem::RetroReaction& r) {
    return {{"template_id", r.template_id}, {"retro_smiles", r.retro_smiles()}, {"site", r.site}};
}

chem::RetroReaction reaction_from_json(const json& j) {
    auto r = chem::parse_retro_smiles(j.at("retro_smiles").get<std::string>());
    r.template_id = j.at("template_id").get<std::string>();
    r.site = j.value("site", std::set<int>{});
    return r;
}

} // namespace

void PlannerConfig::validate() const {
    if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
    if (attempts < 1) throw ValidationError("attempts must be positive");
    if (select_count < 1) throw ValidationError("select_count must be positive");
    if (max_candidates < select_count) throw ValidationError("max_candidates must be at least select_count");
    if (step_retry < 0) throw ValidationError("step_retry must be non-negative");
    if (search_k < 1) throw ValidationError("search_k must be positive");
}

json to_json(const PlannerConfig& c) {
    return {{"max_steps", c.max_steps},       {"attempts", c.attempts},     {"max_candidates", c.max_candidates},
            {"select_count", c.select_count}, {"step_retry", c.step_retry}, {"search_k", c.search_k},
            {"chain_feedback", c.chain_feedback}};
}

PlannerConfig planner_config_from_json(const json& j) {
    PlannerConfig c;
    if (j.is_null()) return c;
    if (!j.is_object()) throw ValidationError("planner config must be an object");
    try {
        c.max_steps = j.value("max_steps", c.max_steps);
        c.attempts = j.value("attempts", c.attempts);
        c.max_candidates = j.value("max_candidates", c.max_candidates);
        c.select_count = j.value("select_count", c.select_count);
        c.step_retry = j.value("step_retry", c.step_retry);
        c.search_k = j.value("search_k", c.search_k);
        c.chain_feedback = j.value("chain_feedback", c.chain_feedback);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bad planner config: ") + e.what());
    }
    c.validate();
    return c;
}

std::string to_string(StopReason reason) {
    switch (reason) {
    case StopReason::StopSignal: return "stop_signal";
    case StopReason::MaxSteps: return "max_steps";
    case StopReason::DeadEnd: return "dead_end";
    case StopReason::StepFailure: return "step_failure";
    case StopReason::BackendFailure: return "backend_failure";
    }
    return "unknown";
}

StopReason stop_reason_from_string(const std::string& text) {
    for (auto r : {StopReason::StopSignal, StopReason::MaxSteps, StopReason::DeadEnd, StopReason::StepFailure,
                   StopReason::BackendFailure}) {
        if (to_string(r) == text) return r;
    }
    throw SchemaError("unknown stop reason: " + text);
}

PlannerState::PlannerState(chem::Molecule target_, const chem::Stock& stock)
    : target(target_), builder(std::move(target_), stock) {}

void PlannerState::apply(std::size_t frontier_index, const chem::RetroReaction& reaction) {
    builder.expand(frontier_index, reaction);
    frontier_indices.push_back(frontier_index);
}

std::string forward_smiles(const chem::RetroReaction& reaction) {
    std::string out;
    for (const auto& m : reaction.reactants) {
        if (!out.empty()) out += '.';
        out += m.smiles;
    }
    return out + ">>" + reaction.product.smiles;
}

std::string format_previous_attempts(const std::vector<AttemptResult>& history) {
    std::string out;
    for (const auto& a : history) {
        if (!out.empty()) out += "\n\n";
        out += "Attempt " + std::to_string(a.index) + " (" + (a.solved ? "solved" : "not solved") +
               ", ended by " + to_string(a.stop_reason) + "):\n";
        if (a.reactions.empty()) out += "No reactions.\n";
        for (std::size_t i = 0; i < a.reactions.size(); ++i) {
            out += "Step " + std::to_string(i + 1) + ": " + a.reactions[i].retro_smiles() + "\n";
        }
        if (a.feedback && !a.feedback->empty()) out += "Feedback:\n" + llm::to_json(*a.feedback).dump(2) + "\n";
        out.pop_back();
    }
    return out;
}

StepOutcome plan_step(PlannerState& state, Blueprint& blueprint, const std::vector<AttemptResult>& history,
                      const PlannerContext& ctx) {
    const auto& p = plan_prompts();
    const auto& cfg = ctx.config;
    std::vector<llm::Message> conv{{"system", p.role.body()}, {"user", step_prompt(state, history, ctx)}};
    auto ask = [&](const char* purpose) {
        return ctx.llm->complete(llm::LlmRequest{conv, 0.0, std::nullopt, purpose});
    };
    auto reask = [&](const std::string& reply, const std::string& message) {
        conv.push_back({"assistant", reply});
        conv.push_back({"user", message});
    };

    int parse_budget = cfg.step_retry;
    bool index_reask = true;
    bool empty_reask = true;
    llm::NextStep next;
    std::vector<chem::RetroReaction> candidates;
    std::string reply;
    for (;;) {
        reply = ask("plan");
        if (llm::parse_stop(reply)) return {StepOutcome::Kind::Stop, {}};
        try {
            llm::parse_plan(reply);
            next = llm::parse_next_step(reply);
            if (util::trim(next.forward_reaction).empty()) throw FormatError("empty <next_forward_reaction>");
        } catch (const Error& e) {
            if (parse_budget-- > 0) {
                reask(reply, llm::correction_message(tag_in(e.what(), "synthesis_plan"), e.what()));
                continue;
            }
            return {StepOutcome::Kind::StepFailure, e.what()};
        }

        const auto& frontier = state.builder.frontier();
        if (next.molecule_index < 0 || static_cast<std::size_t>(next.molecule_index) >= frontier.size()) {
            const std::string why = "expandable molecule index " + std::to_string(next.molecule_index) +
                                    " is out of range";
            if (index_reask) {
                index_reask = false;
                reask(reply, "The " + why + "; valid indices are 0 to " + std::to_string(frontier.size() - 1) +
                                 ". Revise your answer to TASK 2.");
                continue;
            }
            return {StepOutcome::Kind::DeadEnd, why};
        }

        candidates = retrieve_candidates(frontier[next.molecule_index].molecule, next, ctx);
        if (candidates.empty()) {
            if (empty_reask) {
                empty_reask = false;
                reask(reply, "The search engine found no reaction matching your description at atoms " +
                                 llm::format_int_list(next.atom_indices) + " of molecule " +
                                 std::to_string(next.molecule_index) +
                                 ". Revise your answer to TASK 2, describing the disconnection differently or "
                                 "choosing another site.");
                continue;
            }
            return {StepOutcome::Kind::DeadEnd, "no template matched the requested site"};
        }
        break;
    }

    conv.push_back({"assistant", reply});
    conv.push_back({"user", p.select.render({{"SEARCH_RESULT", search_result_text(candidates)},
                                             {"MAX_SELECTS_REACTIONS", std::to_string(cfg.select_count)}})});
    std::vector<std::size_t> ranked;
    for (int tries = 0;; ++tries) {
        const auto answer = ask("select");
        std::string error;
        try {
            for (int i : llm::parse_int_list(answer, "selected_reaction_indices")) {
                if (i < 0 || static_cast<std::size_t>(i) >= candidates.size()) continue;
                if (std::find(ranked.begin(), ranked.end(), i) == ranked.end()) ranked.push_back(i);
            }
            if (ranked.empty()) error = "no selected index is within 0.." + std::to_string(candidates.size() - 1);
        } catch (const Error& e) {
            error = e.what();
        }
        if (error.empty()) break;
        if (tries >= 1) return {StepOutcome::Kind::StepFailure, error};
        reask(answer, llm::correction_message("selected_reaction_indices", error));
    }

    std::string failure;
    for (auto i : ranked) {
        try {
            state.apply(static_cast<std::size_t>(next.molecule_index), candidates[i]);
            blueprint.steps.push_back({static_cast<int>(blueprint.steps.size()) + 1, candidates[i],
                                       next.forward_reaction});
            return {StepOutcome::Kind::Applied, {}};
        } catch (const Error& e) {
            failure = e.what();
        }
    }
    return {StepOutcome::Kind::StepFailure, failure};
}

AttemptResult run_attempt(const chem::Molecule& target, const std::vector<AttemptResult>& history, int index,
                          const PlannerContext& ctx) {
    ctx.config.validate();
    const auto ledger_start = ctx.llm->ledger().size();
    PlannerState state(target, *ctx.stock);
    AttemptResult result;
    result.index = index;
    result.target = target;
    result.stop_reason = StopReason::MaxSteps;
    try {
        while (state.step() < ctx.config.max_steps) {
            const auto outcome = plan_step(state, result.blueprint, history, ctx);
            if (outcome.kind == StepOutcome::Kind::Applied) continue;
            result.detail = outcome.detail;
            if (outcome.kind == StepOutcome::Kind::Stop) result.stop_reason = StopReason::StopSignal;
            if (outcome.kind == StepOutcome::Kind::DeadEnd) result.stop_reason = StopReason::DeadEnd;
            if (outcome.kind == StepOutcome::Kind::StepFailure) result.stop_reason = StopReason::StepFailure;
            break;
        }
    } catch (const BackendError& e) {
        result.stop_reason = StopReason::BackendFailure;
        result.detail = e.what();
    }
    if (result.stop_reason != StopReason::StopSignal && !result.detail.empty()) {
        util::log_info("attempt " + std::to_string(index) + " ended by " + to_string(result.stop_reason) + ": " +
                       result.detail);
    }
    result.reactions = state.builder.reactions();
    result.frontier_indices = state.frontier_indices;
    result.frontier = state.builder.frontier();
    result.route = state.builder.route();
    result.solved = state.builder.all_in_stock();
    const auto entries = ctx.llm->ledger().entries();
    for (std::size_t i = ledger_start; i < entries.size(); ++i) result.llm_ledger_refs.push_back(entries[i].prompt_sha256);
    return result;
}

llm::Feedback self_evaluate(const AttemptResult& attempt, const std::string& user_prompt, const llm::LlmClient& llm,
                            int retries) {
    if (attempt.reactions.empty()) return {};
    const auto& p = eval_prompts();
    std::string plan;
    for (std::size_t i = 0; i < attempt.reactions.size(); ++i) {
        if (i) plan += '\n';
        plan += "Step " + std::to_string(i + 1) + ": " + attempt.reactions[i].retro_smiles();
    }
    std::vector<llm::Message> conv{
        {"system", p.role.body()},
        {"user", p.input.render({{"TARGET_MOLECULE", attempt.target.smiles},
                                 {"USER_PROMPT", user_prompt},
                                 {"PROPOSED_SYNTHESIS_PLAN", plan}}) +
                     "\n\n" + p.instruction.body()}};
    try {
        for (int tries = 0;; ++tries) {
            const auto reply = llm.complete(llm::LlmRequest{conv, 0.0, std::nullopt, "evaluate"});
            try {
                return llm::parse_feedback(reply);
            } catch (const Error& e) {
                if (tries >= retries) {
                    util::log_warn("attempt " + std::to_string(attempt.index) + ": evaluation unreadable: " + e.what());
                    return {};
                }
                conv.push_back({"assistant", reply});
                conv.push_back({"user", llm::correction_message("feedback", e.what())});
            }
        }
    } catch (const BackendError& e) {
        util::log_warn("attempt " + std::to_string(attempt.index) + ": evaluation failed: " + e.what());
        return {};
    }
}

AttemptResult run_evaluated_attempt(const chem::Molecule& target, const std::vector<AttemptResult>& history,
                                    int index, const PlannerContext& ctx) {
    auto attempt = run_attempt(target, history, index, ctx);
    const auto before = ctx.llm->ledger().size();
    attempt.feedback = self_evaluate(attempt, ctx.user_prompt, *ctx.llm);
    const auto entries = ctx.llm->ledger().entries();
    for (std::size_t i = before; i < entries.size(); ++i) attempt.llm_ledger_refs.push_back(entries[i].prompt_sha256);
    return attempt;
}

std::vector<AttemptResult> run_phase1(const chem::Molecule& target, const PlannerContext& ctx) {
    ctx.config.validate();
    std::vector<AttemptResult> results;
    for (int k = 1; k <= ctx.config.attempts; ++k) results.push_back(run_evaluated_attempt(target, results, k, ctx));
    return results;
}

json to_json(const Blueprint& blueprint) {
    json out = json::array();
    for (const auto& s : blueprint.steps) {
        auto entry = reaction_json(s.reference);
        entry["depth"] = s.depth;
        entry["query"] = s.query;
        out.push_back(std::move(entry));
    }
    return out;
}

Blueprint blueprint_from_json(const json& j) {
    if (j.is_object() && j.contains("blueprint")) return blueprint_from_json(j.at("blueprint"));
    if (!j.is_array()) throw SchemaError("blueprint must be a list");
    Blueprint bp;
    try {
        for (const auto& s : j) {
            bp.steps.push_back({s.at("depth").get<int>(), reaction_from_json(s), s.at("query").get<std::string>()});
        }
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("bad blueprint: ") + e.what());
    }
    for (std::size_t i = 0; i < bp.steps.size(); ++i) {
        if (bp.steps[i].depth != static_cast<int>(i) + 1) throw SchemaError("blueprint depths not contiguous");
        if (util::trim(bp.steps[i].query).empty()) throw SchemaError("blueprint query is empty");
    }
    return bp;
}

json to_json(const AttemptResult& a) {
    json reactions = json::array();
    for (std::size_t i = 0; i < a.reactions.size(); ++i) {
        auto entry = reaction_json(a.reactions[i]);
        entry["frontier_index"] = i < a.frontier_indices.size() ? a.frontier_indices[i] : 0;
        reactions.push_back(std::move(entry));
    }
    json frontier = json::array();
    for (const auto& f : a.frontier) frontier.push_back({{"smiles", f.molecule.smiles}, {"in_stock", f.in_stock}});
    json j{{"index", a.index},
           {"target", a.target.smiles},
           {"blueprint", to_json(a.blueprint)},
           {"reactions", std::move(reactions)},
           {"frontier", std::move(frontier)},
           {"route", routes::to_json(a.route)},
           {"solved", a.solved},
           {"stop_reason", to_string(a.stop_reason)},
           {"feedback", a.feedback ? llm::to_json(*a.feedback) : json(nullptr)},
           {"llm_ledger_refs", a.llm_ledger_refs}};
    if (!a.detail.empty()) j["detail"] = a.detail;
    return j;
}

AttemptResult attempt_from_json(const json& j) {
    try {
        AttemptResult a;
        a.index = j.at("index").get<int>();
        a.target = chem::canonicalize(j.at("target").get<std::string>());
        a.blueprint = blueprint_from_json(j.at("blueprint"));
        for (const auto& r : j.at("reactions")) {
            a.reactions.push_back(reaction_from_json(r));
            a.frontier_indices.push_back(r.value("frontier_index", std::size_t{0}));
        }
        for (const auto& f : j.at("frontier")) {
            a.frontier.push_back({chem::canonicalize(f.at("smiles").get<std::string>()), f.at("in_stock").get<bool>()});
        }
        a.route = routes::route_from_json(j.at("route"));
        a.solved = j.at("solved").get<bool>();
        a.stop_reason = stop_reason_from_string(j.at("stop_reason").get<std::string>());
        a.detail = j.value("detail", std::string{});
        if (const auto& f = j.at("feedback"); !f.is_null()) {
            a.feedback = llm::parse_feedback(llm::format_tag("feedback", f.dump()));
        }
        a.llm_ledger_refs = j.value("llm_ledger_refs", std::vector<std::string>{});
        return a;
    } catch (const SchemaError&) {
        throw;
    } catch (const std::exception& e) {
        throw SchemaError(std::string("bad attempt record: ") + e.what());
    }
}

} // namespace synthelite::planner
