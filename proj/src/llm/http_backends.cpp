#include "synthelite/llm/http_backends.hpp"

#include <cstdlib>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/util/http.hpp"

namespace synthelite::llm {
namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::string required_env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) throw Error(std::string(name) + " is not set");
    return v;
}

} // namespace

OpenAiBackend::OpenAiBackend(std::string model)
    : model_(std::move(model)),
      base_url_(env_or("OPENAI_BASE_URL", "https://api.openai.com")),
      key_(required_env("OPENAI_API_KEY")) {}

LlmResponse OpenAiBackend::complete(const LlmRequest& request) {
    nlohmann::json body{{"model", model_}, {"messages", nlohmann::json::array()}};
    for (const auto& m : request.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    if (request.temperature > 0.0) body["temperature"] = request.temperature;
    if (request.seed) body["seed"] = *request.seed;
    const auto res = util::http_post_json(base_url_ + "/v1/chat/completions",
                                          {{"Authorization", "Bearer " + key_}}, body.dump());
    if (res.status != 200) throw BackendError("openai returned HTTP " + std::to_string(res.status));
    try {
        const auto j = nlohmann::json::parse(res.body);
        LlmResponse out;
        out.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) out.tokens = j["usage"].value("total_tokens", 0);
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected openai response: ") + e.what());
    }
}

AnthropicBackend::AnthropicBackend(std::string model)
    : model_(std::move(model)),
      base_url_(env_or("ANTHROPIC_BASE_URL", "https://api.anthropic.com")),
      key_(required_env("ANTHROPIC_API_KEY")) {}

LlmResponse AnthropicBackend::complete(const LlmRequest& request) {
    nlohmann::json body{{"model", model_}, {"max_tokens", 8192}, {"messages", nlohmann::json::array()}};
    std::string system;
    for (const auto& m : request.messages) {
        if (m.role == "system") {
            system += (system.empty() ? "" : "\n\n") + m.content;
        } else {
            body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        }
    }
    if (!system.empty()) body["system"] = system;
    if (request.temperature > 0.0) body["temperature"] = request.temperature;
    const auto res = util::http_post_json(base_url_ + "/v1/messages",
                                          {{"x-api-key", key_}, {"anthropic-version", "2023-06-01"}}, body.dump());
    if (res.status != 200) throw BackendError("anthropic returned HTTP " + std::to_string(res.status));
    try {
        const auto j = nlohmann::json::parse(res.body);
        LlmResponse out;
        for (const auto& block : j.at("content")) {
            if (block.value("type", "") == "text") out.text += block.at("text").get<std::string>();
        }
        if (j.contains("usage")) {
            out.tokens = j["usage"].value("input_tokens", 0) + j["usage"].value("output_tokens", 0);
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected anthropic response: ") + e.what());
    }
}

} // namespace synthelite::llm
