#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "synthelite/index/embedder.hpp"
#include "synthelite/index/library.hpp"

namespace synthelite::index {

struct SearchHit {
    std::string template_id;
    double similarity = 0.0;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// N / (N + C).
double popularity_prior(std::int64_t count, double c);

/// Immutable cosine-similarity index over plausible template descriptions.
class TemplateIndex {
public:
    /// Embeds every plausible record. Throws DimensionMismatchError.
    static TemplateIndex build(std::vector<TemplateRecord> records, std::shared_ptr<const Embedder> embedder);

    /// Reads records.jsonl, vectors.bin and meta.json. The embedder named in
    /// meta.json is constructed unless one is supplied.
    static TemplateIndex load(const std::filesystem::path& dir, std::shared_ptr<const Embedder> embedder = nullptr);
    void save(const std::filesystem::path& dir) const;

    /// At most k hits, best first; ties by higher count then id.
    /// Throws EmptyIndexError. Each call counts as one query.
    std::vector<SearchHit> search(std::string_view query, std::size_t k) const;

    /// Templates by descending count, ties by id.
    std::vector<const TemplateRecord*> most_popular(std::size_t k) const;

    const TemplateRecord* find(std::string_view id) const;
    const std::vector<TemplateRecord>& records() const { return records_; }
    const std::vector<Vector>& vectors() const { return vectors_; }
    std::size_t size() const { return records_.size(); }
    const Embedder& embedder() const { return *embedder_; }

    std::size_t query_count() const { return queries_->load(); }
    void reset_query_count() const { queries_->store(0); }

private:
    TemplateIndex() = default;
    void rebuild_lookup();

    std::vector<TemplateRecord> records_;
    std::vector<Vector> vectors_;
    std::shared_ptr<const Embedder> embedder_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::shared_ptr<std::atomic<std::size_t>> queries_ = std::make_shared<std::atomic<std::size_t>>(0);
};

} // namespace synthelite::index
