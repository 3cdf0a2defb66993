#include "revprompt/core.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <regex>

#include "revprompt/png.hpp"

namespace revprompt {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::precondition: return "precondition";
        case ErrorCode::backend_unreachable: return "backend_unreachable";
        case ErrorCode::backend_error: return "backend_error";
        case ErrorCode::timeout: return "timeout";
        case ErrorCode::invalid_size: return "invalid_size";
        case ErrorCode::unsupported_multi_image: return "unsupported_multi_image";
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::zero_vector: return "zero_vector";
        case ErrorCode::parse_failure: return "parse_failure";
        case ErrorCode::config_invalid: return "config_invalid";
        case ErrorCode::empty_manifest: return "empty_manifest";
        case ErrorCode::empty_result: return "empty_result";
        case ErrorCode::not_found: return "not_found";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

std::string_view to_string(Provenance p) {
    switch (p) {
        case Provenance::init: return "init";
        case Provenance::candidate: return "candidate";
        case Provenance::user_edit: return "user-edit";
    }
    return "candidate";
}

std::string_view to_string(Aspect a) { return a == Aspect::style ? "style" : "content"; }

Provenance provenance_from_string(std::string_view s) {
    if (s == "init") return Provenance::init;
    if (s == "candidate") return Provenance::candidate;
    if (s == "user-edit") return Provenance::user_edit;
    fail(ErrorCode::parse_failure, "unknown provenance '" + std::string(s) + "'");
}

Aspect aspect_from_string(std::string_view s) {
    if (s == "content") return Aspect::content;
    if (s == "style") return Aspect::style;
    fail(ErrorCode::parse_failure, "unknown aspect '" + std::string(s) + "'");
}

std::string trim(std::string_view text) {
    const auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
    auto begin = std::find_if_not(text.begin(), text.end(), is_space);
    auto end = std::find_if_not(text.rbegin(), std::make_reverse_iterator(begin), is_space).base();
    return std::string(begin, end);
}

namespace {

std::string collapse_whitespace(std::string_view text) {
    std::string out;
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(static_cast<char>(c));
    }
    return out;
}

}  // namespace

std::string dedupe_key(std::string_view text) {
    auto key = collapse_whitespace(text);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return key;
}

// ---------------------------------------------------------------- TagPrompt

TagPrompt TagPrompt::from_texts(std::span<const std::string> texts, Provenance provenance) {
    TagPrompt prompt;
    for (const auto& text : texts) prompt.push_back({text, provenance, std::nullopt});
    return prompt;
}

TagPrompt TagPrompt::from_texts(std::initializer_list<std::string> texts, Provenance provenance) {
    return from_texts(std::span<const std::string>(texts.begin(), texts.size()), provenance);
}

bool TagPrompt::push_back(Fragment fragment) {
    fragment.text = trim(fragment.text);
    if (fragment.text.empty()) return false;
    require(fragment.text.find(',') == std::string::npos,
            "prompt fragment may not contain a comma: '" + fragment.text + "'");
    if (contains(fragment.text)) return false;
    fragments_.push_back(std::move(fragment));
    return true;
}

bool TagPrompt::contains(std::string_view text) const {
    const auto key = dedupe_key(text);
    return std::any_of(fragments_.begin(), fragments_.end(),
                       [&](const Fragment& f) { return dedupe_key(f.text) == key; });
}

std::vector<std::string> TagPrompt::texts() const {
    std::vector<std::string> out;
    out.reserve(fragments_.size());
    for (const auto& f : fragments_) out.push_back(f.text);
    return out;
}

bool TagPrompt::same_texts(const TagPrompt& other) const { return texts() == other.texts(); }

std::string render(const TagPrompt& prompt) {
    std::string out;
    for (const auto& f : prompt.fragments()) {
        if (!out.empty()) out += ", ";
        out += f.text;
    }
    return out;
}

TagPrompt parse_tags(std::string_view text, Provenance provenance) {
    TagPrompt prompt;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto comma = text.find(',', start);
        if (comma == std::string_view::npos) comma = text.size();
        prompt.push_back({std::string(text.substr(start, comma - start)), provenance, std::nullopt});
        start = comma + 1;
    }
    return prompt;
}

// ---------------------------------------------------------- EmbeddingVector

EmbeddingVector::EmbeddingVector(std::vector<double> values, bool normalized)
    : values_(std::move(values)), normalized_(normalized) {
    if (normalized_ && std::abs(norm() - 1.0) > 1e-6)
        fail(ErrorCode::precondition, "embedding flagged normalized but norm is " + std::to_string(norm()));
}

EmbeddingVector EmbeddingVector::normalized_from(std::vector<double> values) {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    if (sq == 0.0) fail(ErrorCode::zero_vector, "cannot normalize a zero vector");
    const double n = std::sqrt(sq);
    for (double& v : values) v /= n;
    return EmbeddingVector(std::move(values), true);
}

double EmbeddingVector::norm() const {
    double sq = 0.0;
    for (double v : values_) sq += v * v;
    return std::sqrt(sq);
}

// ----------------------------------------------------------------- ImageRef

ImageRef::ImageRef(Bytes bytes, std::optional<std::int64_t> seed, std::string path)
    : bytes_(std::make_shared<const Bytes>(std::move(bytes))),
      id_(sha256_hex(*bytes_)),
      path_(std::move(path)),
      seed_(seed) {
    if (auto info = png::inspect(*bytes_)) {
        width_ = info->width;
        height_ = info->height;
    }
}

ImageRef ImageRef::from_path(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io_error, "cannot read image '" + path + "'");
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ImageRef(std::move(bytes), std::nullopt, path);
}

const Bytes& ImageRef::bytes() const {
    static const Bytes kEmpty;
    return bytes_ ? *bytes_ : kEmpty;
}

// ----------------------------------------------------------- PromptTemplate

std::vector<std::string> find_placeholders(std::string_view text) {
    static const std::regex kPlaceholder(R"(\{([A-Za-z_][A-Za-z0-9_]*)\})");
    std::vector<std::string> names;
    const std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kPlaceholder); it != std::sregex_iterator(); ++it) {
        auto name = (*it)[1].str();
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(std::move(name));
    }
    return names;
}

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)), placeholders_(find_placeholders(text_)) {}

std::string PromptTemplate::instantiate(const std::map<std::string, std::string>& values) const {
    std::string out = text_;
    for (const auto& name : placeholders_) {
        auto it = values.find(name);
        require(it != values.end(), "template '" + name_ + "' needs a value for {" + name + "}");
        const std::string token = "{" + name + "}";
        // Substituted values are not rescanned, so braces in them are inert.
        std::string next;
        std::size_t pos = 0;
        for (auto hit = out.find(token); hit != std::string::npos; hit = out.find(token, pos)) {
            next.append(out, pos, hit - pos);
            next += it->second;
            pos = hit + token.size();
        }
        next.append(out, pos);
        out = std::move(next);
    }
    return out;
}

// ------------------------------------------------------------------ hashing

std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1)
        fail(ErrorCode::io_error, "sha256 failed");
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(length * 2);
    for (unsigned int i = 0; i < length; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(std::string_view text) {
    return sha256_hex(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> data) {
    std::string out(4 * ((data.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), data.data(),
                                  static_cast<int>(data.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(std::string_view text) {
    std::string clean;
    clean.reserve(text.size());
    for (char c : text)
        if (!std::isspace(static_cast<unsigned char>(c))) clean.push_back(c);
    if (clean.size() % 4 != 0) fail(ErrorCode::parse_failure, "base64 length is not a multiple of 4");
    Bytes out(3 * clean.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()),
                                  static_cast<int>(clean.size()));
    if (n < 0) fail(ErrorCode::parse_failure, "invalid base64 payload");
    std::size_t padding = 0;
    if (!clean.empty() && clean.back() == '=') ++padding;
    if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

}  // namespace revprompt
