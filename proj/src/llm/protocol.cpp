#include "synthelite/llm/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::llm {

using nlohmann::json;

std::string extract_tag(std::string_view text, std::string_view tag) {
    const std::string open = "<" + std::string(tag) + ">";
    const std::string close = "</" + std::string(tag) + ">";
    const auto start = text.find(open);
    if (start == std::string_view::npos) throw TagMissingError("missing <" + std::string(tag) + ">");
    const auto body = start + open.size();
    const auto end = text.find(close, body);
    if (end == std::string_view::npos) throw TagMissingError("unclosed <" + std::string(tag) + ">");
    return util::trim(text.substr(body, end - body));
}

bool parse_stop(std::string_view text) {
    std::string content;
    try {
        content = extract_tag(text, "stop_signal");
    } catch (const TagMissingError&) {
        return false;
    }
    std::transform(content.begin(), content.end(), content.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return content == "TRUE";
}

namespace {

int parse_int(std::string_view token, std::string_view context) {
    const auto s = util::trim(token);
    int value = 0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), value);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
        throw FormatError("expected integer in <" + std::string(context) + ">, got '" + s + "'");
    }
    return value;
}

} // namespace

std::vector<int> parse_int_list(std::string_view text, std::string_view tag) {
    const auto content = extract_tag(text, tag);
    if (content.empty()) throw FormatError("empty <" + std::string(tag) + ">");
    const char open = content.front();
    if (open != '[' && open != '(') return {parse_int(content, tag)};
    const char close = open == '[' ? ']' : ')';
    if (content.back() != close) throw FormatError("unterminated list in <" + std::string(tag) + ">");
    const auto inner = util::trim(std::string_view(content).substr(1, content.size() - 2));
    std::vector<int> out;
    if (inner.empty()) return out;
    for (const auto& part : util::split(inner, ',')) out.push_back(parse_int(part, tag));
    return out;
}

json parse_lenient_json(std::string_view text) {
    // Pass 1: drop comments and "..." placeholders outside strings.
    std::string cleaned;
    cleaned.reserve(text.size());
    bool in_string = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            cleaned += c;
            if (c == '\\' && i + 1 < text.size()) {
                cleaned += text[++i];
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
            cleaned += c;
        } else if (c == '#' || (c == '/' && i + 1 < text.size() && text[i + 1] == '/')) {
            while (i < text.size() && text[i] != '\n') ++i;
            cleaned += '\n';
        } else if (text.substr(i, 3) == "...") {
            while (i + 1 < text.size() && text[i + 1] == '.') ++i;
            // a placeholder standing in for an element: swallow its comma
            std::size_t j = i + 1;
            while (j < text.size() && std::isspace(static_cast<unsigned char>(text[j]))) ++j;
            if (j < text.size() && text[j] == ',') i = j;
        } else {
            cleaned += c;
        }
    }
    // Pass 2: drop commas that directly precede a closing bracket.
    std::string out;
    out.reserve(cleaned.size());
    in_string = false;
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
        const char c = cleaned[i];
        if (in_string) {
            out += c;
            if (c == '\\' && i + 1 < cleaned.size()) {
                out += cleaned[++i];
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') in_string = true;
        if (c == ',') {
            std::size_t j = i + 1;
            while (j < cleaned.size() && std::isspace(static_cast<unsigned char>(cleaned[j]))) ++j;
            if (j < cleaned.size() && (cleaned[j] == '}' || cleaned[j] == ']')) continue;
        }
        out += c;
    }
    return json::parse(out);
}

namespace {

std::string as_text(const json& j) {
    if (j.is_null()) return {};
    if (j.is_string()) return j.get<std::string>();
    return j.dump();
}

int as_int(const json& j, const char* field) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
        try {
            return parse_int(j.get<std::string>(), field);
        } catch (const FormatError&) {
        }
    }
    throw PlanParseError(std::string("field ") + field + " is not an integer");
}

std::string text_field(const json& obj, const char* field) {
    const auto it = obj.find(field);
    return it == obj.end() ? std::string() : as_text(*it);
}

std::vector<PlanStep> steps_field(const json& obj, const char* field, bool required) {
    std::vector<PlanStep> out;
    const auto it = obj.find(field);
    if (it == obj.end() || it->is_null()) {
        if (required) throw PlanParseError(std::string("missing ") + field);
        return out;
    }
    if (!it->is_array()) throw PlanParseError(std::string(field) + " is not a list");
    for (const auto& item : *it) {
        if (!item.is_object()) throw PlanParseError(std::string(field) + " entry is not an object");
        PlanStep step;
        step.step_number = as_int(item.value("step_number", json()), "step_number");
        step.step_reaction = text_field(item, "step_reaction");
        step.step_description = text_field(item, "step_description");
        if (!out.empty() && step.step_number <= out.back().step_number) {
            throw PlanParseError(std::string(field) + " step numbers are not increasing");
        }
        out.push_back(std::move(step));
    }
    return out;
}

json parse_block(std::string_view text, std::string_view tag) {
    const auto content = extract_tag(text, tag);
    json j;
    try {
        j = parse_lenient_json(content);
    } catch (const json::exception& e) {
        throw PlanParseError("invalid JSON in <" + std::string(tag) + ">: " + e.what());
    }
    if (!j.is_object()) throw PlanParseError("<" + std::string(tag) + "> is not a JSON object");
    return j;
}

} // namespace

SynthesisPlan parse_plan(std::string_view text) {
    const json j = parse_block(text, "synthesis_plan");
    SynthesisPlan plan;
    plan.target_smiles = text_field(j, "target_smiles");
    if (const auto it = j.find("expandable_molecules"); it != j.end()) {
        if (it->is_array()) {
            for (const auto& m : *it) plan.expandable_molecules.push_back(as_text(m));
        } else if (!it->is_null()) {
            plan.expandable_molecules.push_back(as_text(*it));
        }
    }
    plan.user_constraint = text_field(j, "user_constraint");
    plan.previous_steps = steps_field(j, "previous_steps", false);
    plan.strategy_overview = text_field(j, "strategy_overview");
    plan.step_estimate = text_field(j, "step_estimate");
    plan.next_steps = steps_field(j, "next_steps", true);
    plan.additional_notes = text_field(j, "additional_notes");
    return plan;
}

Feedback parse_feedback(std::string_view text) {
    const json j = parse_block(text, "feedback");
    const auto overall = j.find("overall_feedback");
    if (overall == j.end() || overall->is_null()) throw PlanParseError("missing overall_feedback");
    Feedback fb;
    fb.overall_feedback = as_text(*overall);
    if (const auto it = j.find("problematic_steps"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw PlanParseError("problematic_steps is not a list");
        for (const auto& item : *it) {
            if (!item.is_object()) throw PlanParseError("problematic_steps entry is not an object");
            fb.problematic_steps.push_back(
                {as_int(item.value("step_id", json()), "step_id"), text_field(item, "feedback")});
        }
    }
    return fb;
}

NextStep parse_next_step(std::string_view text) {
    NextStep step;
    step.retro_transformation = extract_tag(text, "next_retro_transformation");
    step.forward_reaction = extract_tag(text, "next_forward_reaction");
    const auto index = parse_int_list(text, "expandable_molecule_index");
    if (index.size() != 1) throw FormatError("<expandable_molecule_index> must hold one integer");
    step.molecule_index = index.front();
    step.atom_indices = parse_int_list(text, "reaction_atom_indices");
    return step;
}

std::string parse_description(std::string_view text) {
    auto content = extract_tag(text, "description");
    while (content.size() >= 2 && content.front() == '"' && content.back() == '"') {
        content = util::trim(std::string_view(content).substr(1, content.size() - 2));
    }
    return content;
}

int parse_score(std::string_view text) {
    return parse_int(extract_tag(text, "score"), "score");
}

std::string format_tag(std::string_view tag, std::string_view content) {
    std::string out = "<";
    out.append(tag).append(">\n").append(content).append("\n</").append(tag).append(">");
    return out;
}

std::string format_int_list(const std::vector<int>& values) {
    std::string out = "[";
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ", ";
        out += std::to_string(values[i]);
    }
    return out + "]";
}

namespace {

json steps_json(const std::vector<PlanStep>& steps, bool with_reaction) {
    json arr = json::array();
    for (const auto& s : steps) {
        json item{{"step_number", s.step_number}};
        if (with_reaction) item["step_reaction"] = s.step_reaction;
        item["step_description"] = s.step_description;
        arr.push_back(std::move(item));
    }
    return arr;
}

} // namespace

json to_json(const SynthesisPlan& plan) {
    json j = json::object();
    j["target_smiles"] = plan.target_smiles;
    j["expandable_molecules"] = plan.expandable_molecules;
    j["user_constraint"] = plan.user_constraint;
    j["previous_steps"] = steps_json(plan.previous_steps, true);
    j["strategy_overview"] = plan.strategy_overview;
    j["step_estimate"] = plan.step_estimate;
    j["next_steps"] = steps_json(plan.next_steps, false);
    j["additional_notes"] = plan.additional_notes;
    return j;
}

json to_json(const Feedback& feedback) {
    json steps = json::array();
    for (const auto& s : feedback.problematic_steps) steps.push_back({{"step_id", s.step_id}, {"feedback", s.feedback}});
    return {{"overall_feedback", feedback.overall_feedback}, {"problematic_steps", steps}};
}

std::string format_next_step(const NextStep& step) {
    return format_tag("next_retro_transformation", step.retro_transformation) + "\n\n" +
           format_tag("next_forward_reaction", step.forward_reaction) + "\n\n" +
           format_tag("expandable_molecule_index", std::to_string(step.molecule_index)) + "\n\n" +
           format_tag("reaction_atom_indices", format_int_list(step.atom_indices));
}

std::string correction_message(std::string_view tag, std::string_view error) {
    return "Your previous answer could not be read (" + std::string(error) + "). Repeat your answer, making sure the <" +
           std::string(tag) + "> block is present and follows the requested format exactly.";
}

} // namespace synthelite::llm
