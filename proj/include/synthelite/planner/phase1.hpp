#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "synthelite/chem/molecule.hpp"
#include "synthelite/chem/reaction.hpp"
#include "synthelite/index/template_index.hpp"
#include "synthelite/llm/backend.hpp"
#include "synthelite/llm/protocol.hpp"
#include "synthelite/routes/route.hpp"

namespace synthelite::planner {

struct PlannerConfig {
    int max_steps = 25;
    int attempts = 3;
    int max_candidates = 20;
    int select_count = 3;
    int step_retry = 1;
    std::size_t search_k = 50;  ///< hits retrieved per Task 2 query
    bool chain_feedback = true; ///< feed earlier attempts into later prompts

    /// Throws ValidationError.
    void validate() const;
};

nlohmann::json to_json(const PlannerConfig& config);
/// Missing keys keep their defaults. Throws ValidationError.
PlannerConfig planner_config_from_json(const nlohmann::json& j);

struct BlueprintStep {
    int depth = 0;
    chem::RetroReaction reference;
    std::string query; ///< the forward-reaction text used for retrieval
};

struct Blueprint {
    std::vector<BlueprintStep> steps;

    std::size_t depth() const { return steps.size(); }
};

nlohmann::json to_json(const Blueprint& blueprint);
/// Accepts the list form or an attempt record holding one. Throws SchemaError.
Blueprint blueprint_from_json(const nlohmann::json& j);

enum class StopReason { StopSignal, MaxSteps, DeadEnd, StepFailure, BackendFailure };

std::string to_string(StopReason reason);
/// Throws SchemaError.
StopReason stop_reason_from_string(const std::string& text);

/// Target plus the reactions applied so far; the frontier lives in the builder.
struct PlannerState {
    PlannerState(chem::Molecule target, const chem::Stock& stock);

    chem::Molecule target;
    routes::RouteBuilder builder;
    std::vector<std::size_t> frontier_indices; ///< frontier slot expanded by each reaction

    int step() const { return static_cast<int>(builder.reactions().size()); }
    void apply(std::size_t frontier_index, const chem::RetroReaction& reaction);
};

struct AttemptResult {
    int index = 1; ///< 1-based
    chem::Molecule target;
    Blueprint blueprint;
    std::vector<chem::RetroReaction> reactions;
    std::vector<std::size_t> frontier_indices;
    std::vector<routes::FrontierEntry> frontier;
    routes::Route route;
    bool solved = false;
    StopReason stop_reason = StopReason::MaxSteps;
    std::string detail; ///< why the attempt ended, for failures
    std::optional<llm::Feedback> feedback;
    std::vector<std::string> llm_ledger_refs; ///< prompt hashes of the attempt's calls
};

nlohmann::json to_json(const AttemptResult& attempt);
/// Throws SchemaError.
AttemptResult attempt_from_json(const nlohmann::json& j);

/// Shared, read-only inputs of a planning run.
struct PlannerContext {
    std::string user_prompt;
    const index::TemplateIndex* index = nullptr;
    const chem::Stock* stock = nullptr;
    const llm::LlmClient* llm = nullptr;
    PlannerConfig config;
};

struct StepOutcome {
    enum class Kind { Applied, Stop, DeadEnd, StepFailure } kind = Kind::Applied;
    std::string detail;
};

/// One Task 0/1/2 call plus the selection call. On Applied the state and
/// blueprint have grown by one reaction. Throws BackendError.
StepOutcome plan_step(PlannerState& state, Blueprint& blueprint, const std::vector<AttemptResult>& history,
                      const PlannerContext& ctx);

/// Steps until a stop signal, the step limit or a failure. Backend
/// failures end the attempt instead of propagating.
AttemptResult run_attempt(const chem::Molecule& target, const std::vector<AttemptResult>& history, int index,
                          const PlannerContext& ctx);

/// Best effort: an empty Feedback when the attempt has no reactions or the
/// reply cannot be parsed.
llm::Feedback self_evaluate(const AttemptResult& attempt, const std::string& user_prompt,
                            const llm::LlmClient& llm, int retries = 1);

/// run_attempt followed by self_evaluate; the evaluation calls join the ledger refs.
AttemptResult run_evaluated_attempt(const chem::Molecule& target, const std::vector<AttemptResult>& history,
                                    int index, const PlannerContext& ctx);

/// config.attempts attempts, each evaluated and fed into the next.
std::vector<AttemptResult> run_phase1(const chem::Molecule& target, const PlannerContext& ctx);

/// Text of the previous-attempts block.
std::string format_previous_attempts(const std::vector<AttemptResult>& history);

/// "reactants>>product".
std::string forward_smiles(const chem::RetroReaction& reaction);

} // namespace synthelite::planner
