#include "synthelite/index/template_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "synthelite/error.hpp"
#include "synthelite/util/io.hpp"

namespace synthelite::index {

using nlohmann::json;

double popularity_prior(std::int64_t count, double c) {
    if (c <= 0.0) throw Error("popularity scale must be positive");
    const auto n = static_cast<double>(std::max<std::int64_t>(count, 0));
    return n / (n + c);
}

void TemplateIndex::rebuild_lookup() {
    by_id_.clear();
    for (std::size_t i = 0; i < records_.size(); ++i) by_id_.emplace(records_[i].id(), i);
}

TemplateIndex TemplateIndex::build(std::vector<TemplateRecord> records, std::shared_ptr<const Embedder> embedder) {
    if (!embedder) throw Error("index needs an embedder");
    TemplateIndex index;
    index.embedder_ = std::move(embedder);
    const std::size_t dim = index.embedder_->dim();
    for (auto& r : records) {
        if (r.implausible) continue;
        auto v = index.embedder_->embed(r.description);
        if (v.size() != dim) {
            throw DimensionMismatchError("embedder returned " + std::to_string(v.size()) + " values, expected " +
                                         std::to_string(dim));
        }
        for (const float x : v) {
            if (!std::isfinite(x)) throw Error("non-finite embedding for template " + r.id());
        }
        index.vectors_.push_back(std::move(v));
        index.records_.push_back(std::move(r));
    }
    index.rebuild_lookup();
    return index;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint32_t get_u32(const std::string& in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
    return v;
}

} // namespace

void TemplateIndex::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);
    std::string records;
    for (const auto& r : records_) records += record_to_json_line(r) + "\n";
    util::atomic_write(dir / "records.jsonl", records);

    const auto dim = static_cast<std::uint32_t>(embedder_->dim());
    std::string bin;
    bin.reserve(8 + vectors_.size() * dim * 4);
    put_u32(bin, dim);
    put_u32(bin, static_cast<std::uint32_t>(vectors_.size()));
    for (const auto& v : vectors_) {
        for (const float x : v) put_u32(bin, std::bit_cast<std::uint32_t>(x));
    }
    util::atomic_write(dir / "vectors.bin", bin);

    util::atomic_write(dir / "meta.json",
                       json{{"embedder_id", embedder_->id()}, {"dim", dim}, {"count", vectors_.size()}}.dump(2) + "\n");
}

TemplateIndex TemplateIndex::load(const std::filesystem::path& dir, std::shared_ptr<const Embedder> embedder) {
    const auto meta = json::parse(util::read_file(dir / "meta.json"));
    const std::string embedder_id = meta.at("embedder_id").get<std::string>();
    TemplateIndex index;
    index.embedder_ = embedder ? std::move(embedder) : make_embedder(embedder_id);
    index.records_ = load_library(dir / "records.jsonl");

    const std::string bin = util::read_file(dir / "vectors.bin");
    if (bin.size() < 8) throw ParseError("vectors.bin is truncated");
    const std::uint32_t dim = get_u32(bin, 0), n = get_u32(bin, 4);
    if (bin.size() != 8 + static_cast<std::size_t>(dim) * n * 4) throw ParseError("vectors.bin size does not match header");
    if (n != index.records_.size()) throw ParseError("vectors.bin and records.jsonl disagree on record count");
    if (dim != index.embedder_->dim()) {
        throw DimensionMismatchError("index dimension " + std::to_string(dim) + " differs from embedder " +
                                     index.embedder_->id());
    }
    index.vectors_.assign(n, Vector(dim));
    std::size_t at = 8;
    for (auto& v : index.vectors_) {
        for (auto& x : v) {
            x = std::bit_cast<float>(get_u32(bin, at));
            at += 4;
        }
    }
    index.rebuild_lookup();
    return index;
}

std::vector<SearchHit> TemplateIndex::search(std::string_view query, std::size_t k) const {
    if (records_.empty()) throw EmptyIndexError("template index has no plausible records");
    if (k == 0) throw Error("k must be positive");
    queries_->fetch_add(1);
    const Vector q = embedder_->embed(query);
    if (q.size() != embedder_->dim()) throw DimensionMismatchError("query embedding has the wrong dimension");
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(records_.size());
    for (std::size_t i = 0; i < records_.size(); ++i) scored.emplace_back(cosine(q, vectors_[i]), i);
    const auto better = [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        if (records_[a.second].count != records_[b.second].count) {
            return records_[a.second].count > records_[b.second].count;
        }
        return records_[a.second].id() < records_[b.second].id();
    };
    const auto take = std::min(k, scored.size());
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);
    std::vector<SearchHit> hits;
    hits.reserve(take);
    for (std::size_t i = 0; i < take; ++i) hits.push_back({records_[scored[i].second].id(), scored[i].first});
    return hits;
}

std::vector<const TemplateRecord*> TemplateIndex::most_popular(std::size_t k) const {
    std::vector<const TemplateRecord*> all;
    for (const auto& r : records_) all.push_back(&r);
    std::stable_sort(all.begin(), all.end(), [](const TemplateRecord* a, const TemplateRecord* b) {
        if (a->count != b->count) return a->count > b->count;
        return a->id() < b->id();
    });
    if (all.size() > k) all.resize(k);
    return all;
}

const TemplateRecord* TemplateIndex::find(std::string_view id) const {
    const auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &records_[it->second];
}

} // namespace synthelite::index
