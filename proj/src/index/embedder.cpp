#include "synthelite/index/embedder.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <set>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/util/http.hpp"

namespace synthelite::index {
namespace {

const std::set<std::string, std::less<>>& filler_words() {
    static const std::set<std::string, std::less<>> words{
        "a",    "an",     "and",     "as",        "at",  "by",   "for",        "from",     "in",
        "into", "is",     "it",      "its",       "of",  "on",   "or",         "that",     "the",
        "this", "to",     "with",    "which",     "be",  "are",  "reaction",   "involves", "form",
        "forms", "focusing", "classified", "corresponding", "yield", "yields", "next", "step",
    };
    return words;
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (const unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

Vector normalized(const std::vector<double>& v) {
    double norm = 0.0;
    for (const double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw EmptyTextError("text embeds to the zero vector");
    Vector out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
    return out;
}

} // namespace

HashedEmbedder::HashedEmbedder(std::size_t dim) : dim_(dim) {
    if (dim_ == 0) throw Error("embedding dimension must be positive");
}

std::vector<std::string> HashedEmbedder::tokenize(std::string_view text) {
    std::vector<std::string> all;
    std::string cur;
    for (const char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur += static_cast<char>(std::tolower(c));
        } else if (!cur.empty()) {
            all.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) all.push_back(std::move(cur));
    std::vector<std::string> kept;
    for (const auto& t : all) {
        if (!filler_words().count(t)) kept.push_back(t);
    }
    return kept.empty() ? all : kept;
}

Vector HashedEmbedder::embed(std::string_view text) const {
    const auto tokens = tokenize(text);
    if (tokens.empty()) throw EmptyTextError("no tokens to embed");
    std::vector<double> v(dim_, 0.0);
    for (const auto& t : tokens) {
        const auto h = fnv1a(t);
        v[h % dim_] += ((h >> 32) & 1U) ? -1.0 : 1.0;
    }
    return normalized(v);
}

OpenAiEmbedder::OpenAiEmbedder(std::string model) : model_(std::move(model)) {
    const char* base = std::getenv("OPENAI_BASE_URL");
    base_url_ = base && *base ? base : "https://api.openai.com";
    const char* key = std::getenv("OPENAI_API_KEY");
    if (!key || !*key) throw Error("OPENAI_API_KEY is not set");
    key_ = key;
}

std::size_t OpenAiEmbedder::dim() const {
    if (dim_ == 0) dim_ = embed("dimension probe").size();
    return dim_;
}

Vector OpenAiEmbedder::embed(std::string_view text) const {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) throw EmptyTextError("empty text");
    const nlohmann::json body{{"model", model_}, {"input", std::string(text)}};
    const auto res = util::http_post_json(base_url_ + "/v1/embeddings", {{"Authorization", "Bearer " + key_}},
                                          body.dump());
    if (res.status != 200) throw BackendError("embeddings returned HTTP " + std::to_string(res.status));
    std::vector<double> v;
    try {
        v = nlohmann::json::parse(res.body).at("data").at(0).at("embedding").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("unexpected embeddings response: ") + e.what());
    }
    return normalized(v);
}

std::shared_ptr<const Embedder> make_embedder(const std::string& id) {
    if (id.empty() || id == "hashed") return std::make_shared<HashedEmbedder>(512);
    if (id.rfind("hashed-", 0) == 0) {
        std::size_t dim = 0;
        const auto digits = id.substr(7);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), dim);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) throw Error("bad embedder id '" + id + "'");
        return std::make_shared<HashedEmbedder>(dim);
    }
    if (id.rfind("openai:", 0) == 0 && id.size() > 7) return std::make_shared<OpenAiEmbedder>(id.substr(7));
    throw Error("unknown embedder '" + id + "'");
}

double cosine(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw DimensionMismatchError("vectors of different length");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

} // namespace synthelite::index
