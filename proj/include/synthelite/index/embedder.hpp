#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace synthelite::index {

using Vector = std::vector<float>;

/// Text to unit-length vector. Implementations are deterministic and
/// safe for concurrent use.
class Embedder {
public:
    virtual ~Embedder() = default;
    virtual std::string id() const = 0;
    virtual std::size_t dim() const = 0;
    /// Throws EmptyTextError.
    virtual Vector embed(std::string_view text) const = 0;
};

/// Signed feature hashing of lowercase word tokens (FNV-1a 64), L2-normalized.
class HashedEmbedder : public Embedder {
public:
    explicit HashedEmbedder(std::size_t dim = 512);
    std::string id() const override { return "hashed-" + std::to_string(dim_); }
    std::size_t dim() const override { return dim_; }
    Vector embed(std::string_view text) const override;

    /// Lowercase alphanumeric runs with common filler words removed; the
    /// filler words are kept when nothing else remains.
    static std::vector<std::string> tokenize(std::string_view text);

private:
    std::size_t dim_;
};

/// OpenAI-compatible /v1/embeddings endpoint (OPENAI_API_KEY, OPENAI_BASE_URL).
class OpenAiEmbedder : public Embedder {
public:
    explicit OpenAiEmbedder(std::string model);
    std::string id() const override { return "openai:" + model_; }
    std::size_t dim() const override;
    Vector embed(std::string_view text) const override;

private:
    std::string model_;
    std::string base_url_;
    std::string key_;
    mutable std::size_t dim_ = 0;
};

/// "hashed", "hashed-N" or "openai:MODEL".
std::shared_ptr<const Embedder> make_embedder(const std::string& id);

/// Cosine similarity accumulated in double.
double cosine(const Vector& a, const Vector& b);

} // namespace synthelite::index
