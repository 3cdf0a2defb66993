#pragma once

// Clients for HTTP model services.
//
//   chat (vlm, llm)   OpenAI-compatible chat completions; images are sent as
//                     data:image/png;base64 URLs inside content parts.
//   caption           {"model", "image": <b64 png>} -> {"caption": text}
//   text_to_image     {"model", "prompt", "seed", "width", "height", "steps"?}
//                     -> {"image": <b64 png>} | {"images": [..]} | {"data": [{"b64_json"}]}
//   embeddings        {"model", "input": text | <b64 png>, "input_type": "text"|"image"}
//                     -> {"embedding": [float], "truncated"?: bool}

#include <functional>
#include <memory>

#include <nlohmann/json.hpp>

#include "revprompt/providers.hpp"

namespace revprompt::providers::http {

/// POSTs JSON with per-attempt timeout and exponential backoff. Connection
/// failures, 429 and 5xx are retried up to max_retries times.
class JsonClient {
public:
    explicit JsonClient(ProviderProfile profile);

    nlohmann::json post(const nlohmann::json& body) const;

    const ProviderProfile& profile() const noexcept { return profile_; }

    /// Replaces the sleep between retries (tests).
    void set_sleeper(std::function<void(double seconds)> sleeper) { sleeper_ = std::move(sleeper); }

private:
    ProviderProfile profile_;
    std::string origin_;  // scheme://host:port
    std::string path_;
    std::function<void(double)> sleeper_;
};

class ChatModel final : public providers::ChatModel {
public:
    explicit ChatModel(ProviderProfile profile) : client_(std::move(profile)) {}
    std::string chat(std::span<const ChatTurn> turns) override;
    bool supports_multi_image() const override { return client_.profile().multi_image; }
    JsonClient& client() { return client_; }

private:
    JsonClient client_;
};

class Captioner final : public providers::Captioner {
public:
    explicit Captioner(ProviderProfile profile) : client_(std::move(profile)) {}
    std::string caption(const ImageRef& image) override;

private:
    JsonClient client_;
};

class ImageGenerator final : public providers::ImageGenerator {
public:
    explicit ImageGenerator(ProviderProfile profile) : client_(std::move(profile)) {}
    ImageRef generate(const GenerationRequest& request) override;

private:
    JsonClient client_;
};

class TextEmbedder final : public providers::TextEmbedder {
public:
    explicit TextEmbedder(ProviderProfile profile);
    EmbeddingVector embed_text(std::string_view text) override;
    std::size_t dimension() const override { return dimension_; }

private:
    JsonClient client_;
    std::size_t dimension_;
};

class ImageEmbedder final : public providers::ImageEmbedder {
public:
    explicit ImageEmbedder(ProviderProfile profile);
    EmbeddingVector embed_image(const ImageRef& image) override;
    std::size_t dimension() const override { return dimension_; }

private:
    JsonClient client_;
    std::size_t dimension_;
};

/// Request body for a chat completion (exposed for wire-format tests).
nlohmann::json chat_request_body(const ProviderProfile& profile, std::span<const ChatTurn> turns);

}  // namespace revprompt::providers::http
