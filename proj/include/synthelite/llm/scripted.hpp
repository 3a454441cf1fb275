#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "synthelite/llm/backend.hpp"

namespace synthelite::llm {

/// One canned answer. A rule applies when every `match` entry occurs in
/// the last message ("sha256:HEX" entries compare against prompt_hash
/// instead) and, if given, the request seed equals `seed`.
struct ScriptRule {
    std::vector<std::string> match;
    std::string response;
    std::optional<std::uint64_t> seed;
    int delay_ms = 0;
    int fail = 0;               ///< transport failures to raise before answering
    std::optional<int> times;   ///< uses before the rule retires
};

/// Deterministic backend answering from an ordered rule list, first match wins.
class ScriptedBackend : public LlmBackend {
public:
    explicit ScriptedBackend(std::vector<ScriptRule> rules);
    ScriptedBackend(const ScriptedBackend& other);

    /// JSONL file: {"match": str | [str], "response": str, "seed"?, "delay_ms"?, "fail"?, "times"?}.
    static ScriptedBackend load(const std::filesystem::path& path);

    std::string name() const override { return "scripted"; }
    LlmResponse complete(const LlmRequest& request) override;

    std::size_t calls() const;

private:
    std::vector<ScriptRule> rules_;
    mutable std::mutex mutex_;
    std::vector<int> failures_;
    std::vector<int> uses_;
    std::size_t calls_ = 0;
};

} // namespace synthelite::llm
