#include "synthelite/llm/scripted.hpp"

#include <thread>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::llm {

ScriptedBackend::ScriptedBackend(std::vector<ScriptRule> rules)
    : rules_(std::move(rules)), failures_(rules_.size(), 0), uses_(rules_.size(), 0) {}

ScriptedBackend::ScriptedBackend(const ScriptedBackend& other) : ScriptedBackend(other.rules_) {}

ScriptedBackend ScriptedBackend::load(const std::filesystem::path& path) {
    std::vector<ScriptRule> rules;
    int line_no = 0;
    for (const auto& line : util::read_lines(path)) {
        ++line_no;
        const auto text = util::trim(line);
        if (text.empty() || text[0] == '#') continue;
        try {
            const auto j = nlohmann::json::parse(text);
            ScriptRule rule;
            if (j.at("match").is_array()) {
                rule.match = j.at("match").get<std::vector<std::string>>();
            } else {
                rule.match.push_back(j.at("match").get<std::string>());
            }
            rule.response = j.at("response").get<std::string>();
            if (j.contains("seed")) rule.seed = j["seed"].get<std::uint64_t>();
            rule.delay_ms = j.value("delay_ms", 0);
            rule.fail = j.value("fail", 0);
            if (j.contains("times")) rule.times = j["times"].get<int>();
            rules.push_back(std::move(rule));
        } catch (const nlohmann::json::exception& e) {
            throw Error(path.string() + ":" + std::to_string(line_no) + ": bad script rule: " + e.what());
        }
    }
    return ScriptedBackend(std::move(rules));
}

LlmResponse ScriptedBackend::complete(const LlmRequest& request) {
    const std::string& text = request.messages.empty() ? std::string{} : request.messages.back().content;
    std::string hash;
    int delay = 0;
    LlmResponse out;
    {
        std::lock_guard lock(mutex_);
        ++calls_;
        std::size_t chosen = rules_.size();
        for (std::size_t i = 0; i < rules_.size(); ++i) {
            const auto& rule = rules_[i];
            if (rule.times && uses_[i] >= *rule.times) continue;
            if (rule.seed && (!request.seed || *request.seed != *rule.seed)) continue;
            bool ok = true;
            for (const auto& m : rule.match) {
                if (m.rfind("sha256:", 0) == 0) {
                    if (hash.empty()) hash = prompt_hash(request);
                    ok = m.substr(7) == hash;
                } else {
                    ok = text.find(m) != std::string::npos;
                }
                if (!ok) break;
            }
            if (ok) {
                chosen = i;
                break;
            }
        }
        if (chosen == rules_.size()) throw BackendError("scripted backend has no rule for this prompt");
        if (failures_[chosen] < rules_[chosen].fail) {
            ++failures_[chosen];
            throw BackendError("scripted transport failure");
        }
        ++uses_[chosen];
        delay = rules_[chosen].delay_ms;
        out.text = rules_[chosen].response;
    }
    if (delay > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    return out;
}

std::size_t ScriptedBackend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

} // namespace synthelite::llm
