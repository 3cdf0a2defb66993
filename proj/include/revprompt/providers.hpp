#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "revprompt/core.hpp"

namespace revprompt::providers {

enum class Role { caption, text_to_image, vlm, llm, text_embedding, image_embedding };

std::string_view to_string(Role role);
Role role_from_string(std::string_view s);

/// Knobs for the offline mock backend.
struct MockOptions {
    /// Extra off-target vocabulary words the mock LLM appends to every
    /// non-empty candidate list.
    int distractors = 0;
    std::string canned_reply = "ok";
};

struct ProviderProfile {
    Role role = Role::llm;
    std::string kind = "mock";  // "mock" or "http"
    std::string endpoint;       // full URL of the call, e.g. http://host:8000/v1/chat/completions
    std::string model_name;
    std::optional<std::string> auth_env;  // name of the env var holding a bearer token
    double timeout = 60.0;                // seconds, per attempt
    int max_retries = 3;
    double retry_backoff = 1.0;  // first backoff in seconds, doubled per retry
    std::optional<double> temperature;
    bool multi_image = true;           // vlm only
    std::optional<std::size_t> dimension;  // embedding roles
    std::size_t max_tokens = 77;       // text encoder window for embedding roles
    MockOptions mock;
    std::string key;  // config path for diagnostics; defaults to providers.<role>

    /// Throws config_invalid on out-of-range fields.
    void validate() const;
};

struct ChatTurn {
    enum class Speaker { system, user, assistant };
    Speaker speaker = Speaker::user;
    std::string text;
    std::vector<ImageRef> images;
};

std::string_view to_string(ChatTurn::Speaker s);

struct GenerationRequest {
    std::string prompt_text;
    std::int64_t seed = 0;
    int width = 512;
    int height = 512;
    std::optional<int> steps;
};

class Captioner {
public:
    virtual ~Captioner() = default;
    virtual std::string caption(const ImageRef& image) = 0;
};

class ImageGenerator {
public:
    virtual ~ImageGenerator() = default;
    virtual ImageRef generate(const GenerationRequest& request) = 0;
};

class ChatModel {
public:
    virtual ~ChatModel() = default;
    virtual std::string chat(std::span<const ChatTurn> turns) = 0;
    virtual bool supports_multi_image() const = 0;
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual EmbeddingVector embed_text(std::string_view text) = 0;
    virtual std::size_t dimension() const = 0;

    std::size_t truncation_warnings() const noexcept { return truncations_.load(); }

protected:
    void record_truncation(std::string_view detail);

private:
    std::atomic<std::size_t> truncations_{0};
};

class ImageEmbedder {
public:
    virtual ~ImageEmbedder() = default;
    virtual EmbeddingVector embed_image(const ImageRef& image) = 0;
    virtual std::size_t dimension() const = 0;
};

/// Throws unsupported_multi_image when the turns carry more images than the
/// model accepts, and precondition when no turn has content.
void check_turns(std::span<const ChatTurn> turns, bool multi_image, std::string_view who);

/// Backends for every role of one configuration.
struct ProviderSet {
    std::shared_ptr<Captioner> caption;
    std::shared_ptr<ImageGenerator> text_to_image;
    std::shared_ptr<ChatModel> vlm;
    std::shared_ptr<ChatModel> llm;
    std::shared_ptr<TextEmbedder> text_embedding;
    std::shared_ptr<ImageEmbedder> image_embedding;
};

std::shared_ptr<Captioner> make_captioner(const ProviderProfile& profile);
std::shared_ptr<ImageGenerator> make_image_generator(const ProviderProfile& profile);
std::shared_ptr<ChatModel> make_chat_model(const ProviderProfile& profile);
std::shared_ptr<TextEmbedder> make_text_embedder(const ProviderProfile& profile);
std::shared_ptr<ImageEmbedder> make_image_embedder(const ProviderProfile& profile);

/// Builds every role; the text and image embedding profiles must agree on
/// dimension (dimension_mismatch otherwise). Missing roles throw
/// config_invalid naming the role.
ProviderSet make_provider_set(const std::map<Role, ProviderProfile>& profiles);

}  // namespace revprompt::providers
