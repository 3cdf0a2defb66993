#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revprompt/error.hpp"

namespace revprompt {

enum class Provenance { init, candidate, user_edit };
enum class Aspect { content, style };

std::string_view to_string(Provenance p);
std::string_view to_string(Aspect a);
Provenance provenance_from_string(std::string_view s);
Aspect aspect_from_string(std::string_view s);

/// One keyword or short phrase of a reverse prompt.
struct Fragment {
    std::string text;
    Provenance provenance = Provenance::candidate;
    /// Set when the enhanced framework produced the fragment from a
    /// content- or style-specific difference.
    std::optional<Aspect> aspect;

    bool operator==(const Fragment&) const = default;
};

/// Lower-cases, trims and collapses inner whitespace. Two fragments are
/// duplicates iff their keys are equal.
std::string dedupe_key(std::string_view text);

std::string trim(std::string_view text);

/// Ordered, duplicate-free list of non-empty fragments. Fragments may not
/// contain commas so that render/parse_tags stay inverse to each other.
class TagPrompt {
public:
    TagPrompt() = default;

    /// Builds a prompt from raw strings, trimming and dropping empties and
    /// duplicates. Throws precondition if any fragment contains a comma.
    static TagPrompt from_texts(std::span<const std::string> texts,
                                Provenance provenance = Provenance::candidate);
    static TagPrompt from_texts(std::initializer_list<std::string> texts,
                                Provenance provenance = Provenance::candidate);

    /// Appends after normalization. Returns false if the fragment was empty
    /// or a duplicate of an existing one.
    bool push_back(Fragment fragment);

    bool contains(std::string_view text) const;

    const std::vector<Fragment>& fragments() const noexcept { return fragments_; }
    std::vector<std::string> texts() const;
    std::size_t size() const noexcept { return fragments_.size(); }
    bool empty() const noexcept { return fragments_.empty(); }
    const Fragment& operator[](std::size_t i) const { return fragments_[i]; }

    /// Same fragment texts in the same order; provenance is ignored.
    bool same_texts(const TagPrompt& other) const;

    bool operator==(const TagPrompt&) const = default;

private:
    std::vector<Fragment> fragments_;
};

/// Fragments joined by ", ".
std::string render(const TagPrompt& prompt);

/// Splits on commas, trims, drops empties and case-insensitive duplicates.
TagPrompt parse_tags(std::string_view text, Provenance provenance = Provenance::candidate);

/// Cosine similarity as stored (raw) and as reported (x100).
class ScoreValue {
public:
    constexpr ScoreValue() = default;
    constexpr explicit ScoreValue(double raw_cosine) : raw_(raw_cosine) {}

    constexpr double raw_cosine() const noexcept { return raw_; }
    constexpr double reported() const noexcept { return raw_ * 100.0; }

    constexpr auto operator<=>(const ScoreValue&) const = default;

private:
    double raw_ = 0.0;
};

class EmbeddingVector {
public:
    EmbeddingVector() = default;
    explicit EmbeddingVector(std::vector<double> values, bool normalized = false);

    /// L2-normalizes; throws zero_vector for an all-zero input.
    static EmbeddingVector normalized_from(std::vector<double> values);

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t dimension() const noexcept { return values_.size(); }
    bool normalized() const noexcept { return normalized_; }
    double norm() const;

    bool operator==(const EmbeddingVector&) const = default;

private:
    std::vector<double> values_;
    bool normalized_ = false;
};

using Bytes = std::vector<std::uint8_t>;

/// An image payload identified by the SHA-256 of its bytes. Payloads are
/// shared and never mutated.
class ImageRef {
public:
    ImageRef() = default;
    ImageRef(Bytes bytes, std::optional<std::int64_t> seed = std::nullopt,
             std::string path = {});

    /// Reads the file; throws io_error naming the path if it cannot be read.
    static ImageRef from_path(const std::string& path);

    const std::string& id() const noexcept { return id_; }
    const Bytes& bytes() const;
    const std::string& path() const noexcept { return path_; }
    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::optional<std::int64_t> seed() const noexcept { return seed_; }
    bool empty() const noexcept { return !bytes_; }

    /// True when the payload parsed as a PNG header (width/height known).
    bool decodable() const noexcept { return width_ > 0 && height_ > 0; }

private:
    std::shared_ptr<const Bytes> bytes_;
    std::string id_;
    std::string path_;
    int width_ = 0;
    int height_ = 0;
    std::optional<std::int64_t> seed_;
};

/// Template text with `{name}` placeholders.
class PromptTemplate {
public:
    PromptTemplate() = default;
    PromptTemplate(std::string name, std::string text);

    const std::string& name() const noexcept { return name_; }
    const std::string& text() const noexcept { return text_; }
    const std::vector<std::string>& placeholders() const noexcept { return placeholders_; }

    /// Substitutes every placeholder. Throws precondition when a value is
    /// missing or when the result still contains placeholder syntax.
    std::string instantiate(const std::map<std::string, std::string>& values) const;

private:
    std::string name_;
    std::string text_;
    std::vector<std::string> placeholders_;
};

/// Names of `{identifier}` placeholders in order of first appearance.
std::vector<std::string> find_placeholders(std::string_view text);

std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

}  // namespace revprompt
