// HTTP clients against an in-process server.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "revprompt/http_providers.hpp"
#include "revprompt/mock.hpp"
#include "support.hpp"

using namespace revprompt;
using providers::ChatTurn;
using providers::ProviderProfile;
using providers::Role;
using nlohmann::json;

namespace {

class FakeBackend {
public:
    FakeBackend() {
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeBackend() {
        server_.stop();
        thread_.join();
    }

    httplib::Server& server() { return server_; }
    std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

ProviderProfile profile(Role role, std::string endpoint) {
    ProviderProfile p;
    p.role = role;
    p.kind = "http";
    p.endpoint = std::move(endpoint);
    p.model_name = "test-model";
    p.max_retries = 3;
    p.retry_backoff = 1.0;
    p.timeout = 5.0;
    return p;
}

json chat_reply(const std::string& text) {
    return {{"choices", json::array({{{"message", {{"role", "assistant"}, {"content", text}}}}})}};
}

}  // namespace

TEST_CASE("chat: transient 500 then 200 succeeds after one retry") {
    FakeBackend backend;
    std::atomic<int> hits{0};
    backend.server().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
        if (hits++ == 0) {
            res.status = 500;
            res.set_content("overloaded", "text/plain");
            return;
        }
        res.set_content(chat_reply("ok").dump(), "application/json");
    });

    providers::http::ChatModel model(profile(Role::llm, backend.url("/v1/chat/completions")));
    std::vector<double> sleeps;
    model.client().set_sleeper([&](double s) { sleeps.push_back(s); });
    const ChatTurn turn{ChatTurn::Speaker::user, "say ok", {}};
    CHECK(model.chat(std::span<const ChatTurn>(&turn, 1)) == "ok");
    CHECK(hits == 2);
    CHECK(sleeps == std::vector<double>{1.0});
}

TEST_CASE("chat: backoff doubles and the last failure surfaces with status and body") {
    FakeBackend backend;
    std::atomic<int> hits{0};
    backend.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 503;
        res.set_content("down", "text/plain");
    });
    providers::http::ChatModel model(profile(Role::vlm, backend.url("/chat")));
    std::vector<double> sleeps;
    model.client().set_sleeper([&](double s) { sleeps.push_back(s); });
    const ChatTurn turn{ChatTurn::Speaker::user, "hi", {}};
    try {
        model.chat(std::span<const ChatTurn>(&turn, 1));
        FAIL("expected backend_error");
    } catch (const BackendError& e) {
        CHECK(e.status() == 503);
        CHECK(e.body() == "down");
        CHECK(std::string(e.what()).find("vlm") != std::string::npos);
    }
    CHECK(hits == 4);
    CHECK(sleeps == std::vector<double>{1.0, 2.0, 4.0});
}

TEST_CASE("chat: 4xx is not retried") {
    FakeBackend backend;
    std::atomic<int> hits{0};
    backend.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.status = 400;
        res.set_content("{\"error\":\"bad\"}", "application/json");
    });
    providers::http::ChatModel model(profile(Role::llm, backend.url("/chat")));
    model.client().set_sleeper([](double) {});
    const ChatTurn turn{ChatTurn::Speaker::user, "hi", {}};
    CHECK_THROWS_AS(model.chat(std::span<const ChatTurn>(&turn, 1)), BackendError);
    CHECK(hits == 1);
}

TEST_CASE("unreachable endpoint is backend_unreachable with role context") {
    auto p = profile(Role::caption, "http://127.0.0.1:1/caption");
    p.max_retries = 1;
    providers::http::Captioner captioner(p);
    try {
        captioner.caption(mock::make_planted_image({"cat"}));
        FAIL("expected backend_unreachable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::backend_unreachable);
        CHECK(std::string(e.what()).find("caption backend") != std::string::npos);
    }
}

TEST_CASE("slow backend is a timeout") {
    FakeBackend backend;
    backend.server().Post("/slow", [](const httplib::Request&, httplib::Response& res) {
        std::this_thread::sleep_for(std::chrono::milliseconds(800));
        res.set_content(chat_reply("late").dump(), "application/json");
    });
    auto p = profile(Role::llm, backend.url("/slow"));
    p.timeout = 0.2;
    p.max_retries = 0;
    providers::http::ChatModel model(p);
    const ChatTurn turn{ChatTurn::Speaker::user, "hi", {}};
    try {
        model.chat(std::span<const ChatTurn>(&turn, 1));
        FAIL("expected timeout");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::timeout);
    }
}

TEST_CASE("single-image VLM profile rejects two images before any request") {
    FakeBackend backend;
    std::atomic<int> hits{0};
    backend.server().Post("/chat", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.set_content(chat_reply("x").dump(), "application/json");
    });
    auto p = profile(Role::vlm, backend.url("/chat"));
    p.multi_image = false;
    providers::http::ChatModel model(p);
    const auto img = mock::make_planted_image({"cat"});
    const ChatTurn turn{ChatTurn::Speaker::user, "compare", {img, img}};
    try {
        model.chat(std::span<const ChatTurn>(&turn, 1));
        FAIL("expected unsupported_multi_image");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unsupported_multi_image);
    }
    CHECK(hits == 0);
}

TEST_CASE("chat wire format: data-URL images, temperature 0 by default, bearer auth") {
    FakeBackend backend;
    json seen;
    std::string auth;
    backend.server().Post("/chat", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        auth = req.get_header_value("Authorization");
        res.set_content(chat_reply("fine").dump(), "application/json");
    });
    auto p = profile(Role::vlm, backend.url("/chat"));
    p.auth_env = "REVPROMPT_TEST_TOKEN";
    ::setenv("REVPROMPT_TEST_TOKEN", "s3cret", 1);
    providers::http::ChatModel model(p);
    const auto img = mock::make_planted_image({"cat"});
    const ChatTurn turn{ChatTurn::Speaker::user, "describe", {img}};
    CHECK(model.chat(std::span<const ChatTurn>(&turn, 1)) == "fine");

    CHECK(auth == "Bearer s3cret");
    CHECK(seen["model"] == "test-model");
    CHECK(seen["temperature"] == 0.0);
    const auto& parts = seen["messages"][0]["content"];
    CHECK(parts[0]["type"] == "text");
    CHECK(parts[1]["type"] == "image_url");
    const auto url = parts[1]["image_url"]["url"].get<std::string>();
    CHECK(url.rfind("data:image/png;base64,", 0) == 0);
    CHECK(base64_decode(url.substr(22)) == img.bytes());

    ::unsetenv("REVPROMPT_TEST_TOKEN");
    try {
        model.chat(std::span<const ChatTurn>(&turn, 1));
        FAIL("expected config_invalid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config_invalid);
        CHECK(std::string(e.what()).find("REVPROMPT_TEST_TOKEN") != std::string::npos);
    }
}

TEST_CASE("image generation request and base64 PNG reply") {
    FakeBackend backend;
    json seen;
    const auto png = mock::make_planted_image({"fox"}, 9);
    backend.server().Post("/generate", [&](const httplib::Request& req, httplib::Response& res) {
        seen = json::parse(req.body);
        res.set_content(json{{"data", json::array({{{"b64_json", base64_encode(png.bytes())}}})}}.dump(),
                        "application/json");
    });
    providers::http::ImageGenerator gen(profile(Role::text_to_image, backend.url("/generate")));
    const auto out = gen.generate({"a fox", 9, 256, 128, 30});
    CHECK(seen == json{{"model", "test-model"}, {"prompt", "a fox"}, {"seed", 9}, {"width", 256}, {"height", 128}, {"steps", 30}});
    CHECK(out.id() == png.id());
    CHECK(out.seed() == 9);
    CHECK_THROWS_AS(gen.generate({"", 1, 64, 64, std::nullopt}), Error);
}

TEST_CASE("embedding replies are normalized and dimension-checked") {
    FakeBackend backend;
    backend.server().Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
        const auto body = json::parse(req.body);
        json reply{{"embedding", {3.0, 4.0, 0.0}}};
        if (body["input_type"] == "text" && body["input"].get<std::string>().size() > 20) reply["truncated"] = true;
        res.set_content(reply.dump(), "application/json");
    });
    auto p = profile(Role::text_embedding, backend.url("/embed"));
    p.dimension = 3;
    providers::http::TextEmbedder te(p);
    const auto v = te.embed_text("cat");
    CHECK(v.normalized());
    CHECK(v.values()[0] == doctest::Approx(0.6));
    te.embed_text("a very long prompt that the server truncates");
    CHECK(te.truncation_warnings() == 1);

    auto q = profile(Role::image_embedding, backend.url("/embed"));
    q.dimension = 4;
    providers::http::ImageEmbedder ie(q);
    try {
        ie.embed_image(mock::make_planted_image({"cat"}));
        FAIL("expected dimension_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
    }

    auto missing = profile(Role::text_embedding, backend.url("/embed"));
    CHECK_THROWS_AS(providers::http::TextEmbedder{missing}, Error);
}

TEST_CASE("endpoint must be an http URL") {
    CHECK_THROWS_AS(providers::http::JsonClient(profile(Role::llm, "ftp://x/y")), Error);
}
