#include "synthelite/routes/metrics.hpp"

#include <algorithm>

#include "synthelite/error.hpp"
#include "synthelite/llm/prompt.hpp"
#include "synthelite/llm/protocol.hpp"

namespace synthelite::routes {

double recall_at_k(const std::vector<CaseOutcome>& cases, std::size_t k) {
    if (cases.empty()) throw EmptyBenchmarkError("no benchmark cases");
    if (k == 0) throw Error("k must be positive");
    std::size_t hit = 0;
    for (const auto& c : cases) {
        const auto end = c.passes.begin() + static_cast<std::ptrdiff_t>(std::min(k, c.passes.size()));
        if (std::find(c.passes.begin(), end, true) != end) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(cases.size());
}

double precision(const std::vector<CaseOutcome>& cases, bool macro) {
    std::size_t pass = 0, total = 0, with_routes = 0;
    double ratio_sum = 0.0;
    for (const auto& c : cases) {
        if (c.passes.empty()) continue;
        const auto p = static_cast<std::size_t>(std::count(c.passes.begin(), c.passes.end(), true));
        pass += p;
        total += c.passes.size();
        ratio_sum += static_cast<double>(p) / static_cast<double>(c.passes.size());
        ++with_routes;
    }
    if (total == 0) throw EmptyBenchmarkError("no routes to score");
    return macro ? ratio_sum / static_cast<double>(with_routes) : static_cast<double>(pass) / static_cast<double>(total);
}

double solve_rate(const std::vector<CaseOutcome>& cases) {
    if (cases.empty()) throw EmptyBenchmarkError("no benchmark cases");
    const auto solved = std::count_if(cases.begin(), cases.end(), [](const CaseOutcome& c) {
        return std::find(c.passes.begin(), c.passes.end(), true) != c.passes.end();
    });
    return static_cast<double>(solved) / static_cast<double>(cases.size());
}

double solve_rate(const std::vector<std::vector<Route>>& cases, const std::function<bool(const Route&)>& predicate) {
    std::vector<CaseOutcome> outcomes;
    for (const auto& routes : cases) {
        CaseOutcome o;
        for (const auto& r : routes) o.passes.push_back(predicate(r));
        outcomes.push_back(std::move(o));
    }
    return solve_rate(outcomes);
}

std::string format_route_reactions(const Route& route) {
    std::string out;
    for (const auto& r : route_reactions(route)) out += r.retro_smiles() + "\n";
    if (!out.empty()) out.pop_back();
    return out;
}

int judge_feasibility(const Route& route, const llm::LlmClient& llm, const JudgeOptions& options) {
    if (reaction_count(route) == 0) throw Error("cannot judge a route without reactions");
    const auto prompt = llm::load_prompt("judge").render(
        {{"TARGET_MOLECULE", route.root.smiles}, {"ROUTE", format_route_reactions(route)}});
    int best = 0;
    for (int run = 1; run <= options.runs; ++run) {
        llm::LlmRequest request;
        request.messages = {{"user", prompt}};
        request.seed = static_cast<std::uint64_t>(run);
        request.temperature = 1.0;
        request.purpose = "judge";
        std::string last;
        int score = 0;
        for (int attempt = 0; attempt <= options.parse_retries && score == 0; ++attempt) {
            last = llm.complete(request);
            try {
                const int s = llm::parse_score(last);
                if (s >= 1 && s <= 10) score = s;
            } catch (const TagMissingError&) {
            } catch (const FormatError&) {
            }
        }
        if (score == 0) throw ScoreParseError("judge run " + std::to_string(run) + " gave no score in 1..10");
        best = std::max(best, score);
    }
    return best;
}

} // namespace synthelite::routes
