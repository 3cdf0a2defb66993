#include "revprompt/mock.hpp"

#include <algorithm>
#include <cctype>
#include <nlohmann/json.hpp>
#include <regex>
#include <unordered_map>

#include "revprompt/png.hpp"

namespace revprompt::mock {

namespace {

constexpr std::string_view kPlantedKey = "revprompt.planted";
constexpr std::string_view kSeedKey = "revprompt.seed";
constexpr std::string_view kPromptKey = "revprompt.prompt";

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            current.push_back(static_cast<char>(std::tolower(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

std::vector<std::string> known_words(std::span<const std::string> tokens) {
    std::vector<std::string> words;
    for (const auto& t : tokens)
        if (vocabulary_index(t) && std::find(words.begin(), words.end(), t) == words.end()) words.push_back(t);
    return words;
}

std::string join(std::span<const std::string> words, std::string_view sep) {
    std::string out;
    for (const auto& w : words) {
        if (!out.empty()) out += sep;
        out += w;
    }
    return out;
}

bool contains(std::string_view haystack, std::string_view needle) {
    return haystack.find(needle) != std::string_view::npos;
}

std::string between(std::string_view text, std::string_view open, std::string_view close) {
    auto start = text.find(open);
    if (start == std::string_view::npos) return {};
    start += open.size();
    auto end = close.empty() ? std::string_view::npos : text.find(close, start);
    return std::string(text.substr(start, end == std::string_view::npos ? text.size() - start : end - start));
}

std::string python_list(std::span<const std::string> items) {
    std::string out = "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += "'" + items[i] + "'";
    }
    return out + "]";
}

std::string candidates_reply(std::string_view text, const providers::MockOptions& options) {
    static const std::regex kMissing(R"(Image 1 contains ([^.]*) which Image 2 lacks)");
    const std::string s(text);
    std::vector<std::string> candidates;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kMissing); it != std::sregex_iterator(); ++it) {
        for (auto& w : known_words(tokenize((*it)[1].str())))
            if (std::find(candidates.begin(), candidates.end(), w) == candidates.end()) candidates.push_back(w);
    }
    const bool has_difference = !candidates.empty() || contains(text, "which Image 1 lacks");
    if (!has_difference) return "[]";

    if (options.distractors > 0) {
        const auto mentioned = known_words(tokenize(text));
        const auto digest = sha256_hex(text);
        int added = 0;
        for (std::size_t i = 0; i + 1 < digest.size() && added < options.distractors; i += 2) {
            const auto byte = std::stoi(digest.substr(i, 2), nullptr, 16);
            const std::string word(vocabulary()[static_cast<std::size_t>(byte) % kVocabularySize].word);
            if (std::find(mentioned.begin(), mentioned.end(), word) != mentioned.end()) continue;
            if (std::find(candidates.begin(), candidates.end(), word) != candidates.end()) continue;
            candidates.push_back(word);
            ++added;
        }
    }
    return python_list(candidates);
}

std::string classify_reply(std::string_view text) {
    nlohmann::json tags;
    try {
        tags = nlohmann::json::parse(between(text, "Tags:", ""));
    } catch (const nlohmann::json::exception&) {
        return "I could not read the tags.";
    }
    nlohmann::json reply = {{"content", nlohmann::json::array()}, {"style", nlohmann::json::array()}};
    for (const auto& tag : tags) {
        if (!tag.is_string()) continue;
        const auto fragment = tag.get<std::string>();
        reply[classify_fragment(fragment) == WordClass::style ? "style" : "content"].push_back(fragment);
    }
    return reply.dump();
}

}  // namespace

const std::array<VocabularyWord, kVocabularySize>& vocabulary() {
    using W = WordClass;
    static const std::array<VocabularyWord, kVocabularySize> kWords{{
        {"cat", W::content},       {"dog", W::content},       {"fox", W::content},
        {"bird", W::content},      {"horse", W::content},     {"fish", W::content},
        {"tree", W::content},      {"forest", W::content},    {"mountain", W::content},
        {"river", W::content},     {"lake", W::content},      {"ocean", W::content},
        {"boat", W::content},      {"tent", W::content},      {"house", W::content},
        {"castle", W::content},    {"city", W::content},      {"cityscape", W::content},
        {"landscape", W::content}, {"sky", W::content},       {"cloud", W::content},
        {"moon", W::content},      {"flower", W::content},    {"garden", W::content},
        {"road", W::content},      {"bridge", W::content},    {"figures", W::content},
        {"woman", W::content},     {"man", W::content},       {"bow", W::content},
        {"tie", W::content},       {"eyes", W::content},      {"blue", W::style},
        {"red", W::style},         {"green", W::style},       {"yellow", W::style},
        {"black", W::style},       {"white", W::style},       {"gray", W::style},
        {"golden", W::style},      {"ink", W::style},         {"painting", W::style},
        {"watercolor", W::style},  {"oil", W::style},         {"digital", W::style},
        {"sketch", W::style},      {"photograph", W::style},  {"realistic", W::style},
        {"surreal", W::style},     {"abstract", W::style},    {"cinematic", W::style},
        {"minimalist", W::style},  {"vibrant", W::style},     {"dramatic", W::style},
        {"soft", W::style},        {"dark", W::style},        {"bright", W::style},
        {"moody", W::style},       {"whimsical", W::style},   {"detailed", W::style},
        {"pastel", W::style},      {"neon", W::style},        {"vintage", W::style},
        {"anime", W::style},
    }};
    return kWords;
}

std::optional<std::size_t> vocabulary_index(std::string_view word) {
    static const auto kIndex = [] {
        std::unordered_map<std::string_view, std::size_t> index;
        for (std::size_t i = 0; i < kVocabularySize; ++i) index.emplace(vocabulary()[i].word, i);
        return index;
    }();
    auto it = kIndex.find(word);
    if (it == kIndex.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> vocabulary_words(std::string_view text) { return known_words(tokenize(text)); }

EmbeddingVector indicator_embedding(std::span<const std::string> words) {
    std::vector<double> values(kDimension, 0.0);
    bool any = false;
    for (const auto& w : words) {
        if (auto i = vocabulary_index(w)) {
            values[*i] = 1.0;
            any = true;
        }
    }
    if (!any) values[kVocabularySize] = 1.0;
    return EmbeddingVector::normalized_from(std::move(values));
}

ImageRef make_planted_image(std::span<const std::string> words, std::int64_t seed, int width, int height,
                            std::string_view prompt) {
    if (width <= 0 || height <= 0 || width > 4096 || height > 4096)
        fail(ErrorCode::invalid_size,
             "invalid image size " + std::to_string(width) + "x" + std::to_string(height));
    std::vector<std::string> planted;
    for (const auto& w : words)
        if (std::find(planted.begin(), planted.end(), w) == planted.end()) planted.push_back(w);
    const auto joined = join(planted, " ");

    const auto digest = sha256_hex(joined + "|" + std::to_string(seed) + "|" + std::string(prompt));
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            // 8x8 grid of blocks; each block colour comes from the digest.
            const auto block = static_cast<std::size_t>((y * 8 / height) * 8 + (x * 8 / width));
            const auto base = (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x)) * 3;
            for (std::size_t c = 0; c < 3; ++c)
                rgb[base + c] = static_cast<std::uint8_t>(digest[(block * 3 + c) % digest.size()] * 37);
        }
    }
    std::map<std::string, std::string> text{{std::string(kPlantedKey), joined},
                                            {std::string(kSeedKey), std::to_string(seed)}};
    if (!prompt.empty()) text.emplace(std::string(kPromptKey), std::string(prompt));
    return ImageRef(png::encode_rgb(width, height, rgb, text), seed);
}

ImageRef make_planted_image(std::initializer_list<std::string> words, std::int64_t seed) {
    return make_planted_image(std::span<const std::string>(words.begin(), words.size()), seed);
}

std::vector<std::string> planted_words(const ImageRef& image) {
    auto info = png::inspect(image.bytes());
    if (!info) throw BackendError(400, "corrupt image", "mock backend could not decode image " + image.id());
    auto it = info->text.find(std::string(kPlantedKey));
    if (it == info->text.end()) return {};
    return known_words(tokenize(it->second));
}

std::string describe_word_difference(std::span<const std::string> image1, std::span<const std::string> image2) {
    const auto missing_from = [](std::span<const std::string> a, std::span<const std::string> b) {
        std::vector<std::string> out;
        for (const auto& w : a)
            if (std::find(b.begin(), b.end(), w) == b.end()) out.push_back(w);
        return out;
    };
    const auto missing = missing_from(image1, image2);
    const auto extra = missing_from(image2, image1);
    if (missing.empty() && extra.empty()) return std::string(kNoDifferences);
    std::string out;
    if (!missing.empty()) out += "Image 1 contains " + join(missing, ", ") + " which Image 2 lacks.";
    if (!extra.empty()) {
        if (!out.empty()) out += " ";
        out += "Image 2 contains " + join(extra, ", ") + " which Image 1 lacks.";
    }
    return out;
}

WordClass classify_fragment(std::string_view fragment) {
    bool style = false;
    for (const auto& w : vocabulary_words(fragment)) {
        if (vocabulary()[*vocabulary_index(w)].word_class == WordClass::content) return WordClass::content;
        style = true;
    }
    return style ? WordClass::style : WordClass::content;
}

// ---------------------------------------------------------------- backends

std::string Captioner::caption(const ImageRef& image) {
    const auto words = planted_words(image);
    return words.empty() ? "an untitled image" : join(words, " ");
}

ImageRef ImageGenerator::generate(const providers::GenerationRequest& request) {
    require(!trim(request.prompt_text).empty(), "image generation needs a non-empty prompt");
    const auto words = vocabulary_words(request.prompt_text);
    return make_planted_image(words, request.seed, request.width, request.height, request.prompt_text);
}

ChatModel::ChatModel(bool multi_image, providers::MockOptions options)
    : multi_image_(multi_image), options_(std::move(options)) {}

std::string ChatModel::chat(std::span<const providers::ChatTurn> turns) {
    providers::check_turns(turns, multi_image_, "mock chat model");
    ++calls_;
    std::string text;
    std::vector<ImageRef> images;
    for (const auto& turn : turns) {
        if (turn.speaker != providers::ChatTurn::Speaker::user) continue;
        if (!text.empty()) text += "\n";
        text += turn.text;
        images.insert(images.end(), turn.images.begin(), turn.images.end());
    }

    if (contains(text, "describe the difference between Image 1 and Image 2") && images.size() >= 2) {
        const auto first = planted_words(images[0]);
        const auto second = planted_words(images[1]);
        return describe_word_difference(first, second);
    }
    if (contains(text, "describe the content of the image") && !images.empty()) {
        const auto words = planted_words(images[0]);
        return words.empty() ? std::string("an untitled image") : join(words, " ");
    }
    if (contains(text, "describe the style of the image") && !images.empty()) {
        planted_words(images[0]);  // rejects unreadable images
        return std::string(kStyleSentence);
    }
    if (contains(text, "based on their descriptions")) {
        const auto first = vocabulary_words(between(text, "The descriptions of Image 1:", "The descriptions of Image 2:"));
        const auto second = vocabulary_words(between(text, "The descriptions of Image 2:", "Please identify"));
        return describe_word_difference(first, second);
    }
    if (contains(text, "in a python list format")) return candidates_reply(text, options_);
    if (contains(text, "Classify each tag")) return classify_reply(text);
    return options_.canned_reply;
}

EmbeddingVector TextEmbedder::embed_text(std::string_view text) {
    require(!trim(text).empty(), "cannot embed empty text");
    auto tokens = tokenize(text);
    if (tokens.size() > max_tokens_) {
        record_truncation("text of " + std::to_string(tokens.size()) + " tokens truncated to " +
                          std::to_string(max_tokens_));
        tokens.resize(max_tokens_);
    }
    return indicator_embedding(known_words(tokens));
}

EmbeddingVector ImageEmbedder::embed_image(const ImageRef& image) {
    return indicator_embedding(planted_words(image));
}

}  // namespace revprompt::mock
