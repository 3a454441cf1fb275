#pragma once

#include <functional>
#include <string>
#include <vector>

#include "synthelite/llm/backend.hpp"
#include "synthelite/routes/route.hpp"

namespace synthelite::routes {

/// Per-case verdicts for a ranked route list.
struct CaseOutcome {
    std::string case_id;
    std::vector<bool> passes; ///< one per route, in rank order
};

/// Fraction of cases with a passing route among the first k.
/// Throws EmptyBenchmarkError.
double recall_at_k(const std::vector<CaseOutcome>& cases, std::size_t k);

/// Passing routes over all routes, pooled across cases; with macro=true the
/// mean of per-case ratios over cases that produced routes.
/// Throws EmptyBenchmarkError when no route exists.
double precision(const std::vector<CaseOutcome>& cases, bool macro = false);

/// Fraction of cases where any route passes. Throws EmptyBenchmarkError.
double solve_rate(const std::vector<CaseOutcome>& cases);

/// solve_rate over raw route lists with a caller-chosen predicate.
double solve_rate(const std::vector<std::vector<Route>>& cases, const std::function<bool(const Route&)>& predicate);

struct JudgeOptions {
    int runs = 3;
    int parse_retries = 1;
};

/// Scores a route 1..10 with the judge prompt; the maximum over `runs`
/// calls (seeds 1..runs). Throws ScoreParseError.
int judge_feasibility(const Route& route, const llm::LlmClient& llm, const JudgeOptions& options = {});

/// Retro reactions one per line, pre-order.
std::string format_route_reactions(const Route& route);

} // namespace synthelite::routes
