#include "revprompt/providers.hpp"

#include <spdlog/spdlog.h>

#include "revprompt/http_providers.hpp"
#include "revprompt/mock.hpp"

namespace revprompt::providers {

std::string_view to_string(Role role) {
    switch (role) {
        case Role::caption: return "caption";
        case Role::text_to_image: return "text_to_image";
        case Role::vlm: return "vlm";
        case Role::llm: return "llm";
        case Role::text_embedding: return "text_embedding";
        case Role::image_embedding: return "image_embedding";
    }
    return "unknown";
}

Role role_from_string(std::string_view s) {
    for (auto role : {Role::caption, Role::text_to_image, Role::vlm, Role::llm, Role::text_embedding,
                      Role::image_embedding})
        if (to_string(role) == s) return role;
    fail(ErrorCode::config_invalid, "unknown provider role '" + std::string(s) + "'");
}

std::string_view to_string(ChatTurn::Speaker s) {
    switch (s) {
        case ChatTurn::Speaker::system: return "system";
        case ChatTurn::Speaker::user: return "user";
        case ChatTurn::Speaker::assistant: return "assistant";
    }
    return "user";
}

void ProviderProfile::validate() const {
    const std::string where = key.empty() ? "providers." + std::string(to_string(role)) : key;
    if (kind != "mock" && kind != "http")
        fail(ErrorCode::config_invalid, where + ".kind must be 'mock' or 'http', got '" + kind + "'");
    if (kind == "http" && endpoint.empty()) fail(ErrorCode::config_invalid, where + ".endpoint is required for http");
    if (!(timeout > 0)) fail(ErrorCode::config_invalid, where + ".timeout must be > 0");
    if (max_retries < 0) fail(ErrorCode::config_invalid, where + ".max_retries must be >= 0");
    if (retry_backoff < 0) fail(ErrorCode::config_invalid, where + ".retry_backoff must be >= 0");
    if (dimension && *dimension == 0) fail(ErrorCode::config_invalid, where + ".dimension must be positive");
    if (max_tokens == 0) fail(ErrorCode::config_invalid, where + ".max_tokens must be positive");
    if (mock.distractors < 0) fail(ErrorCode::config_invalid, where + ".mock.distractors must be >= 0");
}

void TextEmbedder::record_truncation(std::string_view detail) {
    ++truncations_;
    spdlog::warn("text embedding input truncated: {}", detail);
}

void check_turns(std::span<const ChatTurn> turns, bool multi_image, std::string_view who) {
    require(!turns.empty(), std::string(who) + ": chat needs at least one turn");
    std::size_t images = 0;
    for (const auto& turn : turns) {
        require(!turn.text.empty() || !turn.images.empty(), std::string(who) + ": empty chat turn");
        images += turn.images.size();
    }
    if (images > 1 && !multi_image)
        fail(ErrorCode::unsupported_multi_image,
             std::string(who) + " accepts one image per request, got " + std::to_string(images));
}

std::shared_ptr<Captioner> make_captioner(const ProviderProfile& profile) {
    profile.validate();
    if (profile.kind == "mock") return std::make_shared<mock::Captioner>();
    return std::make_shared<http::Captioner>(profile);
}

std::shared_ptr<ImageGenerator> make_image_generator(const ProviderProfile& profile) {
    profile.validate();
    if (profile.kind == "mock") return std::make_shared<mock::ImageGenerator>();
    return std::make_shared<http::ImageGenerator>(profile);
}

std::shared_ptr<ChatModel> make_chat_model(const ProviderProfile& profile) {
    profile.validate();
    if (profile.kind == "mock") return std::make_shared<mock::ChatModel>(profile.multi_image, profile.mock);
    return std::make_shared<http::ChatModel>(profile);
}

std::shared_ptr<TextEmbedder> make_text_embedder(const ProviderProfile& profile) {
    profile.validate();
    if (profile.kind == "mock") {
        if (profile.dimension && *profile.dimension != mock::kDimension)
            fail(ErrorCode::dimension_mismatch, "mock text embedder has dimension " + std::to_string(mock::kDimension));
        return std::make_shared<mock::TextEmbedder>(profile.max_tokens);
    }
    return std::make_shared<http::TextEmbedder>(profile);
}

std::shared_ptr<ImageEmbedder> make_image_embedder(const ProviderProfile& profile) {
    profile.validate();
    if (profile.kind == "mock") {
        if (profile.dimension && *profile.dimension != mock::kDimension)
            fail(ErrorCode::dimension_mismatch, "mock image embedder has dimension " + std::to_string(mock::kDimension));
        return std::make_shared<mock::ImageEmbedder>();
    }
    return std::make_shared<http::ImageEmbedder>(profile);
}

ProviderSet make_provider_set(const std::map<Role, ProviderProfile>& profiles) {
    const auto get = [&](Role role) -> const ProviderProfile& {
        auto it = profiles.find(role);
        if (it == profiles.end())
            fail(ErrorCode::config_invalid, "providers." + std::string(to_string(role)) + " is not configured");
        return it->second;
    };
    ProviderSet set;
    set.caption = make_captioner(get(Role::caption));
    set.text_to_image = make_image_generator(get(Role::text_to_image));
    set.vlm = make_chat_model(get(Role::vlm));
    set.llm = make_chat_model(get(Role::llm));
    set.text_embedding = make_text_embedder(get(Role::text_embedding));
    set.image_embedding = make_image_embedder(get(Role::image_embedding));
    if (set.text_embedding->dimension() != set.image_embedding->dimension())
        fail(ErrorCode::dimension_mismatch,
             "providers.text_embedding dimension " + std::to_string(set.text_embedding->dimension()) +
                 " differs from providers.image_embedding dimension " +
                 std::to_string(set.image_embedding->dimension()));
    return set;
}

}  // namespace revprompt::providers
