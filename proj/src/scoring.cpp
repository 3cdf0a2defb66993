#include "revprompt/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

namespace revprompt::scoring {

double cosine(const EmbeddingVector& u, const EmbeddingVector& v) {
    if (u.dimension() != v.dimension())
        fail(ErrorCode::dimension_mismatch, "cosine of vectors with dimensions " + std::to_string(u.dimension()) +
                                                " and " + std::to_string(v.dimension()));
    double dot = 0.0;
    double uu = 0.0;
    double vv = 0.0;
    const auto& a = u.values();
    const auto& b = v.values();
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        uu += a[i] * a[i];
        vv += b[i] * b[i];
    }
    if (uu == 0.0 || vv == 0.0) fail(ErrorCode::zero_vector, "cosine of a zero vector");
    return std::clamp(dot / (std::sqrt(uu) * std::sqrt(vv)), -1.0, 1.0);
}

std::size_t estimate_tokens(std::string_view text) {
    std::size_t tokens = 0;
    bool in_word = false;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            if (!in_word) ++tokens;
            in_word = true;
        } else {
            in_word = false;
            if (!std::isspace(c)) ++tokens;
        }
    }
    return tokens;
}

// ----------------------------------------------------------- EmbeddingCache

EmbeddingCache::EmbeddingCache(std::size_t capacity) : capacity_(capacity) {
    require(capacity > 0, "embedding cache capacity must be positive");
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& role, const std::string& hash) {
    std::lock_guard lock(mutex_);
    auto it = index_.find(role + '\n' + hash);
    if (it == index_.end()) {
        ++misses_;
        return std::nullopt;
    }
    ++hits_;
    order_.splice(order_.begin(), order_, it->second);
    return it->second->value;
}

void EmbeddingCache::put(const std::string& role, const std::string& hash, EmbeddingVector value) {
    std::lock_guard lock(mutex_);
    const auto key = role + '\n' + hash;
    if (auto it = index_.find(key); it != index_.end()) {
        it->second->value = std::move(value);
        order_.splice(order_.begin(), order_, it->second);
        return;
    }
    order_.push_front({role, hash, std::move(value)});
    index_.emplace(key, order_.begin());
    if (order_.size() > capacity_) {
        const auto& victim = order_.back();
        index_.erase(victim.role + '\n' + victim.hash);
        order_.pop_back();
    }
}

void EmbeddingCache::clear() {
    std::lock_guard lock(mutex_);
    order_.clear();
    index_.clear();
}

std::size_t EmbeddingCache::size() const {
    std::lock_guard lock(mutex_);
    return order_.size();
}

std::uint64_t EmbeddingCache::hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
}

std::uint64_t EmbeddingCache::misses() const {
    std::lock_guard lock(mutex_);
    return misses_;
}

void EmbeddingCache::save(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write embedding cache '" + path + "'");
    std::lock_guard lock(mutex_);
    for (auto it = order_.rbegin(); it != order_.rend(); ++it)
        out << nlohmann::json{{"role", it->role}, {"hash", it->hash}, {"vector", it->value.values()}}.dump() << '\n';
}

std::size_t EmbeddingCache::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io_error, "cannot read embedding cache '" + path + "'");
    std::size_t count = 0;
    std::string line;
    for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
        if (line.empty()) continue;
        try {
            const auto record = nlohmann::json::parse(line);
            auto values = record.at("vector").get<std::vector<double>>();
            EmbeddingVector v(values, false);
            put(record.at("role").get<std::string>(), record.at("hash").get<std::string>(),
                EmbeddingVector(std::move(values), std::abs(v.norm() - 1.0) <= 1e-6));
            ++count;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::parse_failure, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return count;
}

// ------------------------------------------------------------------- Scorer

Scorer::Scorer(std::shared_ptr<providers::TextEmbedder> text, std::shared_ptr<providers::ImageEmbedder> image,
               std::shared_ptr<EmbeddingCache> cache)
    : text_(std::move(text)), image_(std::move(image)), cache_(std::move(cache)) {
    require(text_ && image_ && cache_, "scorer needs text and image embedders and a cache");
    if (text_->dimension() != image_->dimension())
        fail(ErrorCode::dimension_mismatch, "text embedding dimension " + std::to_string(text_->dimension()) +
                                                " differs from image embedding dimension " +
                                                std::to_string(image_->dimension()));
}

EmbeddingVector Scorer::text_embedding(std::string_view text) {
    const auto hash = sha256_hex(text);
    if (auto hit = cache_->get("text_embedding", hash)) return *std::move(hit);
    auto v = text_->embed_text(text);
    cache_->put("text_embedding", hash, v);
    return v;
}

EmbeddingVector Scorer::image_embedding(const ImageRef& image) {
    if (auto hit = cache_->get("image_embedding", image.id())) return *std::move(hit);
    auto v = image_->embed_image(image);
    cache_->put("image_embedding", image.id(), v);
    return v;
}

ScoreValue Scorer::clip_sim(const ImageRef& image, const TagPrompt& prompt) {
    const auto text = render(prompt);
    require(!text.empty(), "clip_sim needs a non-empty prompt");
    return ScoreValue(cosine(image_embedding(image), text_embedding(text)));
}

ScoreValue image_similarity(providers::ImageEmbedder& extractor, EmbeddingCache& cache, const std::string& role,
                            const ImageRef& a, const ImageRef& b) {
    const auto embed = [&](const ImageRef& image) {
        if (auto hit = cache.get(role, image.id())) return *std::move(hit);
        auto v = extractor.embed_image(image);
        cache.put(role, image.id(), v);
        return v;
    };
    return ScoreValue(cosine(embed(a), embed(b)));
}

}  // namespace revprompt::scoring
