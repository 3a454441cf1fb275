#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace synthelite::llm {

struct PlanStep {
    int step_number = 0;
    std::string step_reaction; ///< empty for next_steps
    std::string step_description;

    friend bool operator==(const PlanStep&, const PlanStep&) = default;
};

struct SynthesisPlan {
    std::string target_smiles;
    std::vector<std::string> expandable_molecules;
    std::string user_constraint;
    std::vector<PlanStep> previous_steps;
    std::string strategy_overview;
    std::string step_estimate;
    std::vector<PlanStep> next_steps;
    std::string additional_notes;

    friend bool operator==(const SynthesisPlan&, const SynthesisPlan&) = default;
};

struct StepFeedback {
    int step_id = 0;
    std::string feedback;

    friend bool operator==(const StepFeedback&, const StepFeedback&) = default;
};

struct Feedback {
    std::string overall_feedback;
    std::vector<StepFeedback> problematic_steps;

    bool empty() const { return overall_feedback.empty() && problematic_steps.empty(); }
    friend bool operator==(const Feedback&, const Feedback&) = default;
};

/// The Task 2 block of a planning response.
struct NextStep {
    std::string retro_transformation;
    std::string forward_reaction;
    int molecule_index = 0;
    std::vector<int> atom_indices;

    friend bool operator==(const NextStep&, const NextStep&) = default;
};

/// Trimmed content of the first <tag>...</tag>. Throws TagMissingError.
std::string extract_tag(std::string_view text, std::string_view tag);

/// True only for a stop_signal block reading TRUE (any case).
bool parse_stop(std::string_view text);

/// "[3, 7]" or a bare integer. Throws TagMissingError, FormatError.
std::vector<int> parse_int_list(std::string_view text, std::string_view tag);

/// Throws TagMissingError, PlanParseError.
SynthesisPlan parse_plan(std::string_view text);

/// Throws TagMissingError, PlanParseError.
Feedback parse_feedback(std::string_view text);

/// Throws TagMissingError, FormatError.
NextStep parse_next_step(std::string_view text);

/// Description block with surrounding quotes removed.
std::string parse_description(std::string_view text);

/// Integer inside <score>. Throws TagMissingError, FormatError.
int parse_score(std::string_view text);

/// Parses JSON that may carry // or # comments, "..." placeholders and
/// trailing commas. Throws nlohmann::json::parse_error.
nlohmann::json parse_lenient_json(std::string_view text);

// Writers producing text the parsers above accept.
std::string format_tag(std::string_view tag, std::string_view content);
std::string format_int_list(const std::vector<int>& values);
nlohmann::json to_json(const SynthesisPlan& plan);
nlohmann::json to_json(const Feedback& feedback);
std::string format_next_step(const NextStep& step);

/// Appended to a conversation when a structured block failed to parse.
std::string correction_message(std::string_view tag, std::string_view error);

} // namespace synthelite::llm
