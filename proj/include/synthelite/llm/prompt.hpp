#pragma once

#include <map>
#include <set>
#include <string>

namespace synthelite::llm {

/// Text with {{NAME}} placeholders.
class PromptTemplate {
public:
    PromptTemplate(std::string name, std::string body);

    const std::string& name() const { return name_; }
    const std::string& body() const { return body_; }
    const std::set<std::string>& required_vars() const { return required_; }

    /// Substitutes every placeholder in one pass; inserted values are never
    /// re-expanded. Throws MissingVarError.
    std::string render(const std::map<std::string, std::string>& vars) const;

private:
    std::string name_;
    std::string body_;
    std::set<std::string> required_;
};

/// Loads <asset_dir>/prompts/<name>.txt.
PromptTemplate load_prompt(const std::string& name);

} // namespace synthelite::llm
