#include "revprompt/http_providers.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <regex>
#include <thread>

namespace revprompt::providers::http {

namespace {

std::string role_context(const ProviderProfile& p) {
    return std::string(to_string(p.role)) + " backend " + p.endpoint;
}

std::string data_url(const ImageRef& image) { return "data:image/png;base64," + base64_encode(image.bytes()); }

ImageRef decode_image(std::string b64, std::int64_t seed, const ProviderProfile& profile) {
    if (auto comma = b64.find(','); b64.rfind("data:", 0) == 0 && comma != std::string::npos) b64.erase(0, comma + 1);
    try {
        return ImageRef(base64_decode(b64), seed);
    } catch (const Error& e) {
        throw BackendError(200, "", role_context(profile) + " returned an undecodable image: " + e.what());
    }
}

EmbeddingVector read_embedding(const nlohmann::json& reply, std::size_t expected, const ProviderProfile& profile) {
    const nlohmann::json* values = nullptr;
    if (reply.contains("embedding")) {
        values = &reply["embedding"];
    } else if (reply.contains("data") && reply["data"].is_array() && !reply["data"].empty() &&
               reply["data"][0].contains("embedding")) {
        values = &reply["data"][0]["embedding"];
    }
    if (values == nullptr || !values->is_array())
        throw BackendError(200, reply.dump(), role_context(profile) + " reply has no embedding");
    std::vector<double> v;
    v.reserve(values->size());
    for (const auto& x : *values) {
        if (!x.is_number()) throw BackendError(200, reply.dump(), role_context(profile) + " embedding is not numeric");
        v.push_back(x.get<double>());
    }
    if (v.size() != expected)
        fail(ErrorCode::dimension_mismatch, role_context(profile) + " returned dimension " + std::to_string(v.size()) +
                                                ", expected " + std::to_string(expected));
    return EmbeddingVector::normalized_from(std::move(v));
}

std::size_t declared_dimension(const ProviderProfile& profile) {
    if (!profile.dimension)
        fail(ErrorCode::config_invalid,
             "providers." + std::string(to_string(profile.role)) + ".dimension is required for http embeddings");
    return *profile.dimension;
}

}  // namespace

JsonClient::JsonClient(ProviderProfile profile) : profile_(std::move(profile)) {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(profile_.endpoint, m, kUrl))
        fail(ErrorCode::config_invalid, "providers." + std::string(to_string(profile_.role)) +
                                            ".endpoint is not an http(s) URL: '" + profile_.endpoint + "'");
    origin_ = m[1].str();
    path_ = m[2].matched ? m[2].str() : "/";
    sleeper_ = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
}

nlohmann::json JsonClient::post(const nlohmann::json& body) const {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(profile_.timeout);
    const auto usecs = static_cast<time_t>((profile_.timeout - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    httplib::Headers headers;
    if (profile_.auth_env) {
        const char* token = std::getenv(profile_.auth_env->c_str());
        if (token == nullptr)
            fail(ErrorCode::config_invalid, "environment variable " + *profile_.auth_env + " for " +
                                                role_context(profile_) + " is not set");
        headers.emplace("Authorization", std::string("Bearer ") + token);
    }
    const auto payload = body.dump();

    for (int attempt = 0;; ++attempt) {
        auto res = client.Post(path_, headers, payload, "application/json");
        const bool last = attempt >= profile_.max_retries;
        if (!res) {
            const auto err = res.error();
            if (last) {
                const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                                       err == httplib::Error::ConnectionTimeout;
                fail(timed_out ? ErrorCode::timeout : ErrorCode::backend_unreachable,
                     role_context(profile_) + ": " + httplib::to_string(err));
            }
        } else if (res->status >= 200 && res->status < 300) {
            try {
                return nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception&) {
                throw BackendError(res->status, res->body, role_context(profile_) + " returned invalid JSON");
            }
        } else {
            const bool transient = res->status == 429 || res->status >= 500;
            if (!transient || last)
                throw BackendError(res->status, res->body,
                                   role_context(profile_) + " answered HTTP " + std::to_string(res->status));
        }
        const double wait = profile_.retry_backoff * std::pow(2.0, attempt);
        spdlog::debug("{}: retry {} after {}s", role_context(profile_), attempt + 1, wait);
        sleeper_(wait);
    }
}

nlohmann::json chat_request_body(const ProviderProfile& profile, std::span<const ChatTurn> turns) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& turn : turns) {
        nlohmann::json message{{"role", to_string(turn.speaker)}};
        if (turn.images.empty()) {
            message["content"] = turn.text;
        } else {
            nlohmann::json parts = nlohmann::json::array();
            if (!turn.text.empty()) parts.push_back({{"type", "text"}, {"text", turn.text}});
            for (const auto& image : turn.images)
                parts.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(image)}}}});
            message["content"] = std::move(parts);
        }
        messages.push_back(std::move(message));
    }
    nlohmann::json body{{"model", profile.model_name}, {"messages", std::move(messages)}};
    body["temperature"] = profile.temperature.value_or(0.0);
    return body;
}

std::string ChatModel::chat(std::span<const ChatTurn> turns) {
    const auto& profile = client_.profile();
    check_turns(turns, profile.multi_image, role_context(profile));
    const auto reply = client_.post(chat_request_body(profile, turns));
    try {
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        std::string text;
        for (const auto& part : content)
            if (part.value("type", "") == "text") text += part.value("text", "");
        return text;
    } catch (const nlohmann::json::exception&) {
        throw BackendError(200, reply.dump(), role_context(profile) + " reply has no choices[0].message.content");
    }
}

std::string Captioner::caption(const ImageRef& image) {
    const auto reply = client_.post({{"model", client_.profile().model_name}, {"image", base64_encode(image.bytes())}});
    if (!reply.contains("caption") || !reply["caption"].is_string())
        throw BackendError(200, reply.dump(), role_context(client_.profile()) + " reply has no caption");
    return reply["caption"].get<std::string>();
}

ImageRef ImageGenerator::generate(const GenerationRequest& request) {
    require(!trim(request.prompt_text).empty(), "image generation needs a non-empty prompt");
    if (request.width <= 0 || request.height <= 0)
        fail(ErrorCode::invalid_size,
             "invalid image size " + std::to_string(request.width) + "x" + std::to_string(request.height));
    nlohmann::json body{{"model", client_.profile().model_name},
                        {"prompt", request.prompt_text},
                        {"seed", request.seed},
                        {"width", request.width},
                        {"height", request.height}};
    if (request.steps) body["steps"] = *request.steps;
    const auto reply = client_.post(body);
    std::string b64;
    if (reply.contains("image") && reply["image"].is_string()) {
        b64 = reply["image"].get<std::string>();
    } else if (reply.contains("images") && reply["images"].is_array() && !reply["images"].empty()) {
        b64 = reply["images"][0].get<std::string>();
    } else if (reply.contains("data") && reply["data"].is_array() && !reply["data"].empty()) {
        b64 = reply["data"][0].value("b64_json", "");
    }
    if (b64.empty()) throw BackendError(200, reply.dump(), role_context(client_.profile()) + " reply has no image");
    return decode_image(std::move(b64), request.seed, client_.profile());
}

TextEmbedder::TextEmbedder(ProviderProfile profile)
    : client_(std::move(profile)), dimension_(declared_dimension(client_.profile())) {}

EmbeddingVector TextEmbedder::embed_text(std::string_view text) {
    require(!trim(text).empty(), "cannot embed empty text");
    const auto reply = client_.post(
        {{"model", client_.profile().model_name}, {"input", std::string(text)}, {"input_type", "text"}});
    if (reply.value("truncated", false)) record_truncation(role_context(client_.profile()));
    return read_embedding(reply, dimension_, client_.profile());
}

ImageEmbedder::ImageEmbedder(ProviderProfile profile)
    : client_(std::move(profile)), dimension_(declared_dimension(client_.profile())) {}

EmbeddingVector ImageEmbedder::embed_image(const ImageRef& image) {
    const auto reply = client_.post({{"model", client_.profile().model_name},
                                     {"input", base64_encode(image.bytes())},
                                     {"input_type", "image"}});
    return read_embedding(reply, dimension_, client_.profile());
}

}  // namespace revprompt::providers::http
