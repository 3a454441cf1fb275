#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace synthelite::llm {

struct Message {
    std::string role; ///< "system", "user" or "assistant"
    std::string content;
};

struct LlmRequest {
    std::vector<Message> messages;
    double temperature = 0.0;
    std::optional<std::uint64_t> seed;
    std::string purpose; ///< free-form tag recorded in the ledger
};

struct LlmResponse {
    std::string text;
    std::optional<int> tokens;
};

/// A chat-completion provider. Implementations must tolerate concurrent
/// calls. Transport failures are reported as BackendError.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;
    virtual std::string name() const = 0;
    virtual LlmResponse complete(const LlmRequest& request) = 0;
};

/// Stable digest of the request messages.
std::string prompt_hash(const LlmRequest& request);

struct LedgerEntry {
    std::string ts;
    std::string backend;
    std::string purpose;
    std::string prompt_sha256;
    std::string response_sha256;
    std::optional<int> tokens;
    long latency_ms = 0;
};

/// Record of every completed call, optionally mirrored to a JSONL file.
class CallLedger {
public:
    CallLedger() = default;
    explicit CallLedger(std::filesystem::path file) : file_(std::move(file)) {}

    void record(LedgerEntry entry);
    std::vector<LedgerEntry> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::optional<std::filesystem::path> file_;
    std::vector<LedgerEntry> entries_;
};

/// Token bucket with a requests-per-minute budget; zero disables limiting.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_minute = 0.0);
    void acquire();

private:
    std::mutex mutex_;
    double rate_per_ms_;
    double capacity_;
    double tokens_;
    std::chrono::steady_clock::time_point last_;
};

struct RetryPolicy {
    int budget = 2;
    std::chrono::milliseconds base_delay{200};
};

/// Calls the backend, retrying transport failures with exponential backoff.
/// Throws BackendError once the retry budget is spent.
std::string complete(LlmBackend& backend, const LlmRequest& request, const RetryPolicy& policy,
                     CallLedger* ledger = nullptr, RateLimiter* limiter = nullptr);

/// Backend plus the shared call policy of a run.
class LlmClient {
public:
    LlmClient(std::shared_ptr<LlmBackend> backend, RetryPolicy policy = {},
              std::shared_ptr<CallLedger> ledger = std::make_shared<CallLedger>(),
              std::shared_ptr<RateLimiter> limiter = nullptr);

    std::string complete(const LlmRequest& request) const;
    std::string complete(std::vector<Message> messages, std::string purpose = {}) const;

    LlmBackend& backend() const { return *backend_; }
    CallLedger& ledger() const { return *ledger_; }
    const RetryPolicy& policy() const { return policy_; }

private:
    std::shared_ptr<LlmBackend> backend_;
    RetryPolicy policy_;
    std::shared_ptr<CallLedger> ledger_;
    std::shared_ptr<RateLimiter> limiter_;
};

/// Builds a backend from a selector: "scripted:FILE", "openai:MODEL",
/// "anthropic:MODEL". An empty selector reads $SYNTHELITE_LLM.
std::shared_ptr<LlmBackend> make_backend(const std::string& selector);

} // namespace synthelite::llm
