#pragma once

// Deterministic offline backend. Every image carries a "planted" word set in
// its PNG metadata; every embedding is the L2-normalized indicator vector of
// the vocabulary words present. Similarities are therefore hand-computable:
// cosine(A, B) = |A ∩ B| / sqrt(|A| |B|) for non-empty word sets.

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revprompt/providers.hpp"

namespace revprompt::mock {

inline constexpr std::size_t kVocabularySize = 64;
/// Vocabulary slots plus one bucket used only by inputs with no vocabulary word.
inline constexpr std::size_t kDimension = kVocabularySize + 1;

enum class WordClass { content, style };

struct VocabularyWord {
    std::string_view word;
    WordClass word_class;
};

const std::array<VocabularyWord, kVocabularySize>& vocabulary();

/// Index into vocabulary(), or nullopt for out-of-vocabulary words.
std::optional<std::size_t> vocabulary_index(std::string_view word);

/// Vocabulary words in order of first appearance; tokens are lower-cased
/// runs of letters and digits.
std::vector<std::string> vocabulary_words(std::string_view text);

/// Embedding of a word set; unknown words are ignored.
EmbeddingVector indicator_embedding(std::span<const std::string> words);

/// PNG whose metadata plants `words` (deduped, order kept). Pixels are a
/// block pattern hashed from the words, seed and prompt.
ImageRef make_planted_image(std::span<const std::string> words, std::int64_t seed = 0, int width = 64,
                            int height = 64, std::string_view prompt = {});
ImageRef make_planted_image(std::initializer_list<std::string> words, std::int64_t seed = 0);

/// Planted words of a mock image. Throws BackendError for bytes that are not
/// a well-formed PNG.
std::vector<std::string> planted_words(const ImageRef& image);

inline constexpr std::string_view kStyleSentence = "A plain synthetic rendering with uniform treatment.";
inline constexpr std::string_view kNoDifferences = "no differences";

class Captioner final : public providers::Captioner {
public:
    std::string caption(const ImageRef& image) override;
};

class ImageGenerator final : public providers::ImageGenerator {
public:
    ImageRef generate(const providers::GenerationRequest& request) override;
};

/// Recognises the shipped templates by their wording and answers them from
/// the planted word sets; anything else gets the canned reply.
class ChatModel final : public providers::ChatModel {
public:
    explicit ChatModel(bool multi_image = true, providers::MockOptions options = {});

    std::string chat(std::span<const providers::ChatTurn> turns) override;
    bool supports_multi_image() const override { return multi_image_; }

    std::size_t calls() const noexcept { return calls_.load(); }

private:
    bool multi_image_;
    providers::MockOptions options_;
    std::atomic<std::size_t> calls_{0};
};

class TextEmbedder final : public providers::TextEmbedder {
public:
    explicit TextEmbedder(std::size_t max_tokens = 77) : max_tokens_(max_tokens) {}

    /// Words past max_tokens are dropped and a truncation warning recorded.
    EmbeddingVector embed_text(std::string_view text) override;
    std::size_t dimension() const override { return kDimension; }

private:
    std::size_t max_tokens_;
};

class ImageEmbedder final : public providers::ImageEmbedder {
public:
    EmbeddingVector embed_image(const ImageRef& image) override;
    std::size_t dimension() const override { return kDimension; }
};

/// Word-set difference sentence used by the mock VLM/LLM. Image 1 is the
/// reference side.
std::string describe_word_difference(std::span<const std::string> image1, std::span<const std::string> image2);

/// Mock class of a fragment: content if it holds any content word, style if
/// it holds only style words, content otherwise.
WordClass classify_fragment(std::string_view fragment);

}  // namespace revprompt::mock
