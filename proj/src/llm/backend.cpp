#include "synthelite/llm/backend.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/llm/http_backends.hpp"
#include "synthelite/llm/scripted.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::llm {

std::string prompt_hash(const LlmRequest& request) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& m : request.messages) j.push_back({{"role", m.role}, {"content", m.content}});
    return util::sha256_hex(j.dump());
}

void CallLedger::record(LedgerEntry entry) {
    std::lock_guard lock(mutex_);
    if (file_) {
        nlohmann::json j{{"ts", entry.ts},
                         {"backend", entry.backend},
                         {"prompt_sha256", entry.prompt_sha256},
                         {"response_sha256", entry.response_sha256},
                         {"latency_ms", entry.latency_ms}};
        if (!entry.purpose.empty()) j["purpose"] = entry.purpose;
        if (entry.tokens) j["tokens"] = *entry.tokens;
        util::append_line(*file_, j.dump());
    }
    entries_.push_back(std::move(entry));
}

std::vector<LedgerEntry> CallLedger::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t CallLedger::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

RateLimiter::RateLimiter(double requests_per_minute)
    : rate_per_ms_(requests_per_minute / 60000.0),
      capacity_(std::max(1.0, requests_per_minute / 60.0)),
      tokens_(capacity_),
      last_(std::chrono::steady_clock::now()) {}

void RateLimiter::acquire() {
    if (rate_per_ms_ <= 0.0) return;
    while (true) {
        std::chrono::milliseconds wait{0};
        {
            std::lock_guard lock(mutex_);
            const auto now = std::chrono::steady_clock::now();
            const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
            tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            wait = std::chrono::milliseconds(static_cast<long>((1.0 - tokens_) / rate_per_ms_) + 1);
        }
        std::this_thread::sleep_for(wait);
    }
}

std::string complete(LlmBackend& backend, const LlmRequest& request, const RetryPolicy& policy,
                     CallLedger* ledger, RateLimiter* limiter) {
    const std::string hash = prompt_hash(request);
    std::string last_error;
    for (int attempt = 0; attempt <= policy.budget; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(policy.base_delay * (1L << std::min(attempt - 1, 10)));
        if (limiter) limiter->acquire();
        const auto start = std::chrono::steady_clock::now();
        try {
            auto response = backend.complete(request);
            if (ledger) {
                LedgerEntry e;
                e.ts = util::utc_timestamp();
                e.backend = backend.name();
                e.purpose = request.purpose;
                e.prompt_sha256 = hash;
                e.response_sha256 = util::sha256_hex(response.text);
                e.tokens = response.tokens;
                e.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                   std::chrono::steady_clock::now() - start)
                                   .count();
                ledger->record(std::move(e));
            }
            return std::move(response.text);
        } catch (const BackendError& e) {
            last_error = e.what();
        }
    }
    throw BackendError("backend " + backend.name() + " failed after " + std::to_string(policy.budget + 1) +
                       " attempts: " + last_error);
}

LlmClient::LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy, std::shared_ptr<CallLedger> ledger,
                     std::shared_ptr<RateLimiter> limiter)
    : backend_(std::move(backend)), policy_(policy), ledger_(std::move(ledger)), limiter_(std::move(limiter)) {
    if (!backend_) throw Error("LlmClient needs a backend");
    if (!ledger_) ledger_ = std::make_shared<CallLedger>();
}

std::string LlmClient::complete(const LlmRequest& request) const {
    return llm::complete(*backend_, request, policy_, ledger_.get(), limiter_.get());
}

std::string LlmClient::complete(std::vector<Message> messages, std::string purpose) const {
    LlmRequest request;
    request.messages = std::move(messages);
    request.purpose = std::move(purpose);
    return complete(request);
}

std::shared_ptr<LlmBackend> make_backend(const std::string& selector_in) {
    std::string selector = selector_in;
    if (selector.empty()) {
        const char* env = std::getenv("SYNTHELITE_LLM");
        if (!env || !*env) throw Error("no LLM backend configured; set SYNTHELITE_LLM or pass --llm");
        selector = env;
    }
    const auto colon = selector.find(':');
    const std::string kind = selector.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string{} : selector.substr(colon + 1);
    if (kind == "scripted") return std::make_shared<ScriptedBackend>(ScriptedBackend::load(arg));
    if ((kind == "openai" || kind == "anthropic") && arg.empty()) {
        throw Error("backend '" + kind + "' needs a model name, e.g. " + kind + ":MODEL");
    }
    if (kind == "openai") return std::make_shared<OpenAiBackend>(arg);
    if (kind == "anthropic") return std::make_shared<AnthropicBackend>(arg);
    throw Error("unknown LLM backend '" + selector + "'");
}

} // namespace synthelite::llm
