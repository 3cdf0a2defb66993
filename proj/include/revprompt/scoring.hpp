#pragma once

#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "revprompt/core.hpp"
#include "revprompt/providers.hpp"

namespace revprompt::scoring {

/// dot(u, v) / (|u| |v|), clamped to [-1, 1].
double cosine(const EmbeddingVector& u, const EmbeddingVector& v);

/// Rough CLIP-style token count of rendered prompt text (words plus
/// punctuation marks).
std::size_t estimate_tokens(std::string_view text);

inline constexpr std::size_t kTextWindowTokens = 77;

/// LRU map from (role, content hash) to embedding. Thread-safe.
class EmbeddingCache {
public:
    explicit EmbeddingCache(std::size_t capacity = 100'000);

    std::optional<EmbeddingVector> get(const std::string& role, const std::string& hash);
    void put(const std::string& role, const std::string& hash, EmbeddingVector value);
    void clear();

    std::size_t size() const;
    std::size_t capacity() const noexcept { return capacity_; }
    std::uint64_t hits() const;
    std::uint64_t misses() const;

    /// One JSON object per line: {"role", "hash", "vector"}. Lines are
    /// written least- to most-recently used, so load() restores LRU order.
    void save(const std::string& path) const;
    /// Returns the number of records read; malformed lines throw parse_failure.
    std::size_t load(const std::string& path);

private:
    using Key = std::string;  // role + '\n' + hash
    struct Entry {
        std::string role;
        std::string hash;
        EmbeddingVector value;
    };

    std::size_t capacity_;
    mutable std::mutex mutex_;
    std::list<Entry> order_;  // front = most recently used
    std::unordered_map<Key, std::list<Entry>::iterator> index_;
    std::uint64_t hits_ = 0;
    std::uint64_t misses_ = 0;
};

/// Embeds texts and images through a shared cache and scores prompt/image
/// pairs (ClipSim).
class Scorer {
public:
    /// Throws dimension_mismatch if the embedders disagree.
    Scorer(std::shared_ptr<providers::TextEmbedder> text, std::shared_ptr<providers::ImageEmbedder> image,
           std::shared_ptr<EmbeddingCache> cache = std::make_shared<EmbeddingCache>());

    EmbeddingVector text_embedding(std::string_view text);
    EmbeddingVector image_embedding(const ImageRef& image);

    /// Cosine between the image and the rendered prompt. The prompt must
    /// render to non-empty text.
    ScoreValue clip_sim(const ImageRef& image, const TagPrompt& prompt);

    EmbeddingCache& cache() noexcept { return *cache_; }
    const std::shared_ptr<providers::TextEmbedder>& text_embedder() const noexcept { return text_; }

private:
    std::shared_ptr<providers::TextEmbedder> text_;
    std::shared_ptr<providers::ImageEmbedder> image_;
    std::shared_ptr<EmbeddingCache> cache_;
};

/// Cosine between two images under one extractor, cached by image id.
ScoreValue image_similarity(providers::ImageEmbedder& extractor, EmbeddingCache& cache, const std::string& role,
                            const ImageRef& a, const ImageRef& b);

}  // namespace revprompt::scoring
