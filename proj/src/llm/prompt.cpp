#include "synthelite/llm/prompt.hpp"

#include <cctype>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::llm {
namespace {

// Length of the placeholder name starting at body[pos] (just after "{{"),
// or 0 when the text there is not a placeholder.
std::size_t placeholder_length(const std::string& body, std::size_t pos) {
    std::size_t end = pos;
    while (end < body.size() &&
           (std::isupper(static_cast<unsigned char>(body[end])) ||
            std::isdigit(static_cast<unsigned char>(body[end])) || body[end] == '_')) {
        ++end;
    }
    if (end == pos || body.compare(end, 2, "}}") != 0) return 0;
    return end - pos;
}

} // namespace

PromptTemplate::PromptTemplate(std::string name, std::string body)
    : name_(std::move(name)), body_(std::move(body)) {
    for (std::size_t pos = body_.find("{{"); pos != std::string::npos; pos = body_.find("{{", pos + 2)) {
        if (const auto len = placeholder_length(body_, pos + 2)) required_.insert(body_.substr(pos + 2, len));
    }
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& vars) const {
    for (const auto& var : required_) {
        if (!vars.count(var)) throw MissingVarError(var);
    }
    std::string out;
    out.reserve(body_.size());
    std::size_t pos = 0;
    while (pos < body_.size()) {
        const auto open = body_.find("{{", pos);
        if (open == std::string::npos) break;
        const auto len = placeholder_length(body_, open + 2);
        if (len == 0) {
            out.append(body_, pos, open + 2 - pos);
            pos = open + 2;
            continue;
        }
        out.append(body_, pos, open - pos);
        out += vars.at(body_.substr(open + 2, len));
        pos = open + 2 + len + 2;
    }
    out.append(body_, pos, std::string::npos);
    return out;
}

PromptTemplate load_prompt(const std::string& name) {
    const auto path = util::asset_dir() / "prompts" / (name + ".txt");
    return PromptTemplate(name, util::read_file(path));
}

} // namespace synthelite::llm
