#include "revprompt/service.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "revprompt/editing.hpp"
#include "revprompt/serialization.hpp"

namespace revprompt::service {

using nlohmann::json;

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::queued: return "queued";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
        case RunStatus::failed: return "failed";
    }
    return "unknown";
}

struct Service::RunState {
    mutable std::mutex mutex;
    std::string run_id;
    RunStatus status = RunStatus::queued;
    int max_iterations = 0;
    std::vector<json> iterations;
    std::map<int, Bytes> images;
    std::optional<json> result;

    // Forward-only: queued -> running -> done | failed.
    void advance(RunStatus next) {
        std::lock_guard lock(mutex);
        if (static_cast<int>(next) > static_cast<int>(status) && status != RunStatus::done &&
            status != RunStatus::failed)
            status = next;
    }
};

class Service::Tracker final : public optimizer::RunObserver {
public:
    explicit Tracker(RunState& state) : state_(state) {}

    void on_iteration(const std::string&, const optimizer::IterationRecord& record) override {
        auto line = revprompt::json::to_json(record);
        std::lock_guard lock(state_.mutex);
        state_.iterations.push_back(std::move(line));
        if (!record.generated_image.empty()) state_.images[record.step] = record.generated_image.bytes();
    }

    void on_finish(const optimizer::RunResult& result) override {
        auto j = revprompt::json::to_json(result);
        std::lock_guard lock(state_.mutex);
        state_.result = std::move(j);
    }

private:
    RunState& state_;
};

namespace {

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::backend_unreachable:
        case ErrorCode::backend_error:
        case ErrorCode::timeout:
        case ErrorCode::unsupported_multi_image:
        case ErrorCode::dimension_mismatch:
        case ErrorCode::zero_vector:
        case ErrorCode::io_error: return 502;
        default: return 422;
    }
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, std::string_view error, const std::string& detail) {
    reply(res, status, {{"error", error}, {"detail", detail}});
}

template <class F>
void guarded(httplib::Response& res, F&& f) {
    try {
        f();
    } catch (const json::exception& e) {
        reply_error(res, 422, "invalid_body", e.what());
    } catch (const Error& e) {
        reply_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        reply_error(res, 500, "internal", e.what());
    }
}

json body_of(const httplib::Request& req) {
    auto j = json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail(ErrorCode::parse_failure, "request body must be a JSON object");
    return j;
}

const json& field(const json& body, const char* name) {
    if (!body.contains(name)) fail(ErrorCode::parse_failure, std::string("missing field '") + name + "'");
    return body[name];
}

json prompt_reply(const TagPrompt& p) { return {{"prompt", revprompt::json::to_json(p)}, {"text", render(p)}}; }

}  // namespace

Service::Service(config::AppConfig cfg)
    : cfg_(std::move(cfg)),
      runtime_(config::build_runtime(cfg_)),
      store_(cfg_.service.store),
      slots_(static_cast<std::ptrdiff_t>(cfg_.service.max_concurrent_runs)),
      server_(std::make_unique<httplib::Server>()) {
    routes();
}

Service::~Service() {
    stop();
    wait_all();
}

std::string Service::start_run(const ImageRef& reference, const optimizer::RunConfig& run) {
    if (!reference.decodable()) fail(ErrorCode::parse_failure, "reference is not a readable PNG image");
    run.validate();
    auto state = std::make_shared<RunState>();
    state->run_id = optimizer::new_run_id();
    state->max_iterations = run.max_iterations;
    {
        std::lock_guard lock(mutex_);
        while (runs_.count(state->run_id)) state->run_id = optimizer::new_run_id();
        runs_[state->run_id] = state;
        workers_.emplace_back([this, state, reference, run] {
            slots_.acquire();
            state->advance(RunStatus::running);
            bool ok = false;
            try {
                optimizer::Optimizer opt(runtime_.providers, cfg_.templates, runtime_.cache);
                Tracker tracker(*state);
                optimizer::ObserverList observers({&store_, &tracker});
                const auto result = opt.run(reference, run, &observers, state->run_id);
                ok = result.stop_reason != optimizer::StopReason::error;
            } catch (const std::exception& e) {
                spdlog::error("{}: {}", state->run_id, e.what());
            }
            state->advance(ok ? RunStatus::done : RunStatus::failed);
            slots_.release();
        });
    }
    return state->run_id;
}

std::shared_ptr<Service::RunState> Service::find(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(run_id);
    return it == runs_.end() ? nullptr : it->second;
}

std::optional<RunSnapshot> Service::snapshot(const std::string& run_id) const {
    auto state = find(run_id);
    if (!state) return std::nullopt;
    std::lock_guard lock(state->mutex);
    return RunSnapshot{state->run_id, state->status, static_cast<int>(state->iterations.size()),
                       state->max_iterations, state->result};
}

std::optional<std::vector<json>> Service::iterations(const std::string& run_id, std::size_t since) const {
    auto state = find(run_id);
    if (!state) return std::nullopt;
    std::lock_guard lock(state->mutex);
    if (since >= state->iterations.size()) return std::vector<json>{};
    return std::vector<json>(state->iterations.begin() + static_cast<std::ptrdiff_t>(since), state->iterations.end());
}

std::optional<Bytes> Service::image(const std::string& run_id, int step) const {
    auto state = find(run_id);
    if (!state) return std::nullopt;
    std::lock_guard lock(state->mutex);
    auto it = state->images.find(step);
    if (it == state->images.end()) return std::nullopt;
    return it->second;
}

void Service::wait_all() {
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mutex_);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

void Service::routes() {
    auto& srv = *server_;

    srv.Post("/runs", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = body_of(req);
            const auto& ref = field(body, "reference");
            if (!ref.is_string()) fail(ErrorCode::parse_failure, "reference must be a base64 PNG string");
            ImageRef reference(base64_decode(ref.get<std::string>()));
            auto run = cfg_.run;
            if (body.contains("run")) run = revprompt::json::run_config_from_json(body["run"], run);
            const auto id = start_run(reference, run);
            reply(res, 202, {{"run_id", id}, {"status", "queued"}});
        });
    });

    srv.Get(R"(/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto snap = snapshot(req.matches[1]);
            if (!snap) fail(ErrorCode::not_found, "unknown run '" + std::string(req.matches[1]) + "'");
            reply(res, 200,
                  {{"run_id", snap->run_id},
                   {"status", to_string(snap->status)},
                   {"progress", {{"completed", snap->completed}, {"max", snap->max_iterations}}},
                   {"result", snap->result ? *snap->result : json(nullptr)}});
        });
    });

    srv.Get(R"(/runs/([^/]+)/iterations)", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            std::size_t since = 0;
            if (req.has_param("since")) {
                const auto s = req.get_param_value("since");
                try {
                    std::size_t used = 0;
                    const long long v = std::stoll(s, &used);
                    if (used != s.size() || v < 0) throw std::invalid_argument(s);
                    since = static_cast<std::size_t>(v);
                } catch (const std::exception&) {
                    fail(ErrorCode::parse_failure, "since must be a non-negative integer");
                }
            }
            const std::string id = req.matches[1];
            const auto snap = snapshot(id);
            const auto page = iterations(id, since);
            if (!snap || !page) fail(ErrorCode::not_found, "unknown run '" + id + "'");
            reply(res, 200,
                  {{"run_id", id},
                   {"since", since},
                   {"next", since + page->size()},
                   {"status", to_string(snap->status)},
                   {"iterations", *page}});
        });
    });

    srv.Get(R"(/runs/([^/]+)/images/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const std::string id = req.matches[1];
            if (!find(id)) fail(ErrorCode::not_found, "unknown run '" + id + "'");
            const auto bytes = image(id, std::stoi(req.matches[2]));
            if (!bytes) fail(ErrorCode::not_found, "run '" + id + "' has no image for step " + std::string(req.matches[2]));
            res.status = 200;
            res.set_content(reinterpret_cast<const char*>(bytes->data()), bytes->size(), "image/png");
        });
    });

    srv.Post("/prompts/classify", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = body_of(req);
            const auto prompt = revprompt::json::prompt_from_json(field(body, "prompt"));
            const auto origin = body.value("origin", std::string("external"));
            reply(res, 200, editing::to_json(editing::classify(prompt, *runtime_.providers.llm, cfg_.templates, origin)));
        });
    });

    srv.Post("/prompts/modify", [](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = body_of(req);
            const auto prompt = revprompt::json::prompt_from_json(field(body, "prompt"));
            const auto& find = field(body, "find");
            const auto& replace = field(body, "replace");
            if (!find.is_string() || !replace.is_string())
                fail(ErrorCode::parse_failure, "find and replace must be strings");
            reply(res, 200,
                  prompt_reply(editing::modify(prompt, find.get<std::string>(), replace.get<std::string>())));
        });
    });

    srv.Post("/prompts/fuse", [](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = body_of(req);
            const auto style = editing::classified_from_json(field(body, "style_source"));
            const auto content = editing::classified_from_json(field(body, "content_source"));
            reply(res, 200, prompt_reply(editing::fuse(style, content)));
        });
    });

    srv.Post("/generate", [this](const httplib::Request& req, httplib::Response& res) {
        guarded(res, [&] {
            const auto body = body_of(req);
            const auto prompt = revprompt::json::prompt_from_json(field(body, "prompt"));
            require(!prompt.empty(), "prompt must not be empty");
            providers::GenerationRequest gen;
            gen.prompt_text = render(prompt);
            gen.seed = body.value("seed", std::int64_t{0});
            gen.width = body.value("width", cfg_.run.image_width);
            gen.height = body.value("height", cfg_.run.image_height);
            if (body.contains("steps") && !body["steps"].is_null()) gen.steps = body["steps"].get<int>();
            const auto image = runtime_.providers.text_to_image->generate(gen);
            json request{{"prompt", gen.prompt_text}, {"seed", gen.seed}, {"width", gen.width}, {"height", gen.height}};
            request["steps"] = gen.steps ? json(*gen.steps) : json(nullptr);
            reply(res, 200,
                  {{"image", base64_encode(image.bytes())},
                   {"id", image.id()},
                   {"width", image.width()},
                   {"height", image.height()},
                   {"request", std::move(request)}});
        });
    });
}

bool Service::listen(const std::string& host, int port) { return server_->listen(host, port); }

int Service::start_background(const std::string& host) {
    const int port = server_->bind_to_any_port(host);
    if (port <= 0) fail(ErrorCode::io_error, "cannot bind a port on " + host);
    listener_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port;
}

void Service::stop() {
    server_->stop();
    if (listener_.joinable()) listener_.join();
}

}  // namespace revprompt::service
