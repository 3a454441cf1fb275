#pragma once

#include <string>

#include "synthelite/llm/backend.hpp"

namespace synthelite::llm {

/// OpenAI-compatible chat completions. Reads OPENAI_API_KEY and, optionally,
/// OPENAI_BASE_URL (default https://api.openai.com).
class OpenAiBackend : public LlmBackend {
public:
    explicit OpenAiBackend(std::string model);
    std::string name() const override { return "openai:" + model_; }
    LlmResponse complete(const LlmRequest& request) override;

private:
    std::string model_;
    std::string base_url_;
    std::string key_;
};

/// Anthropic messages API. Reads ANTHROPIC_API_KEY and, optionally,
/// ANTHROPIC_BASE_URL (default https://api.anthropic.com).
class AnthropicBackend : public LlmBackend {
public:
    explicit AnthropicBackend(std::string model);
    std::string name() const override { return "anthropic:" + model_; }
    LlmResponse complete(const LlmRequest& request) override;

private:
    std::string model_;
    std::string base_url_;
    std::string key_;
};

} // namespace synthelite::llm
