#include "revprompt/app.hpp"

#include <csignal>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "revprompt/editing.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/run_store.hpp"
#include "revprompt/serialization.hpp"
#include "revprompt/service.hpp"

namespace revprompt::app {

namespace fs = std::filesystem;

evaluation::PromptMethod make_method(const std::string& name, const config::AppConfig& cfg,
                                     const config::Runtime& runtime) {
    if (name == "identity") {
        return [](const evaluation::ManifestEntry& entry, const ImageRef&) {
            if (!entry.gold_prompt) fail(ErrorCode::precondition, "entry has no gold_prompt");
            return *entry.gold_prompt;
        };
    }
    if (name == "caption") {
        auto captioner = runtime.providers.caption;
        return [captioner](const evaluation::ManifestEntry&, const ImageRef& reference) {
            return parse_tags(captioner->caption(reference), Provenance::init);
        };
    }
    if (name == "arpo") {
        return [&cfg, &runtime](const evaluation::ManifestEntry&, const ImageRef& reference) {
            optimizer::Optimizer opt(runtime.providers, cfg.templates, runtime.cache);
            auto result = opt.run(reference, cfg.run);
            if (result.stop_reason == optimizer::StopReason::error) fail(ErrorCode::backend_error, *result.error);
            return result.final_prompt;
        };
    }
    fail(ErrorCode::config_invalid, "method must be identity, caption or arpo, got '" + name + "'");
}

evaluation::EvalReport evaluate(const config::AppConfig& cfg, const config::Runtime& runtime,
                                const evaluation::DatasetManifest& manifest, const std::string& method) {
    auto scorer = std::make_shared<scoring::Scorer>(runtime.providers.text_embedding,
                                                    runtime.providers.image_embedding, runtime.cache);
    evaluation::Evaluator evaluator(scorer, runtime.eval_generator, runtime.extractors, cfg.evaluation.eval);
    return evaluator.run(manifest, make_method(method, cfg, runtime), method);
}

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

config::AppConfig load_config(const std::string& path) {
    if (path.empty()) {
        spdlog::info("no --config given; every provider is the offline mock");
        return config::AppConfig::mock();
    }
    if (!fs::exists(path)) throw Usage("config file not found: " + path);
    return config::AppConfig::load(path);
}

void save_cache(const config::AppConfig& cfg, const config::Runtime& rt) {
    if (cfg.cache.path) rt.cache->save(cfg.cache.path->string());
}

std::pair<std::string, int> split_bind(const std::string& bind) {
    const auto colon = bind.rfind(':');
    if (colon == std::string::npos) throw Usage("--bind must be host:port, got '" + bind + "'");
    try {
        return {bind.substr(0, colon), std::stoi(bind.substr(colon + 1))};
    } catch (const std::exception&) {
        throw Usage("--bind must be host:port, got '" + bind + "'");
    }
}

service::Service* g_service = nullptr;

extern "C" void on_signal(int) {
    if (g_service) g_service->stop();
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Reverse-prompt engine: recover a text-to-image prompt from a reference image."};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string out;
    bool verbose = false;
    app.add_option("--config", config_path, "YAML or JSON configuration file");
    app.add_option("--out", out, "Output directory");
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* run = app.add_subcommand("run", "Optimize a prompt for one reference image");
    std::string reference_path;
    std::optional<int> max_iterations;
    std::optional<std::int64_t> seed;
    std::string framework, selection_mode, init_prompt;
    run->add_option("reference", reference_path, "Reference PNG")->required();
    run->add_option("--max-iterations", max_iterations);
    run->add_option("--seed", seed);
    run->add_option("--framework", framework, "auto, vanilla or enhanced");
    run->add_option("--selection", selection_mode, "full, no_combination or accept_all");
    run->add_option("--init", init_prompt, "Hand-crafted initial prompt (skips captioning)");

    auto* eval = app.add_subcommand("eval", "Evaluate a prompt method over a dataset manifest");
    std::string manifest_path, method = "arpo";
    eval->add_option("manifest", manifest_path, "Manifest JSON")->required();
    eval->add_option("--method", method, "identity, caption or arpo");

    auto* classify = app.add_subcommand("classify", "Split a prompt into content and style fragments");
    std::string classify_prompt;
    classify->add_option("prompt", classify_prompt, "Comma-separated prompt")->required();

    auto* fuse = app.add_subcommand("fuse", "Combine the style of one prompt with the content of another");
    std::string style_prompt, content_prompt;
    fuse->add_option("--style", style_prompt, "Prompt supplying the style")->required();
    fuse->add_option("--content", content_prompt, "Prompt supplying the content")->required();

    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string bind = "127.0.0.1:8080";
    serve->add_option("--bind", bind, "host:port");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

    try {
        auto cfg = load_config(config_path);

        if (run->parsed()) {
            if (!fs::exists(reference_path)) throw Usage("reference image not found: " + reference_path);
            auto reference = ImageRef::from_path(reference_path);
            if (!reference.decodable()) throw Usage("reference image is not a readable PNG: " + reference_path);

            nlohmann::json overrides = nlohmann::json::object();
            if (max_iterations) overrides["max_iterations"] = *max_iterations;
            if (seed) overrides["seed"] = *seed;
            if (!framework.empty()) overrides["framework"] = framework;
            if (!selection_mode.empty()) overrides["selection"] = selection_mode;
            if (!init_prompt.empty()) overrides["initial_prompt"] = init_prompt;
            const auto run_cfg = json::run_config_from_json(overrides, cfg.run);

            auto rt = config::build_runtime(cfg);
            optimizer::RunStore store(out.empty() ? fs::path("runs") : fs::path(out));
            optimizer::Optimizer opt(rt.providers, cfg.templates, rt.cache);
            const auto result = opt.run(reference, run_cfg, &store);
            save_cache(cfg, rt);

            std::printf("run: %s\n", store.run_dir(result.run_id).string().c_str());
            std::printf("prompt: %s\n", render(result.final_prompt).c_str());
            std::printf("score: %.2f (initial %.2f, %zu iterations, %s)\n", result.final_score.reported(),
                        result.initial_score.reported(), result.iterations.size(),
                        std::string(optimizer::to_string(result.stop_reason)).c_str());
            if (result.stop_reason == optimizer::StopReason::error) {
                std::fprintf(stderr, "error: %s\n", result.error->c_str());
                return 1;
            }
            return 0;
        }

        if (eval->parsed()) {
            if (!fs::exists(manifest_path)) throw Usage("manifest not found: " + manifest_path);
            const auto manifest = evaluation::DatasetManifest::load(manifest_path);
            auto rt = config::build_runtime(cfg);
            const auto report = evaluate(cfg, rt, manifest, method);
            const fs::path dir = out.empty() ? fs::path("eval") : fs::path(out);
            evaluation::write_report(report, dir);
            save_cache(cfg, rt);
            std::fputs(evaluation::render_table(report).c_str(), stdout);
            std::printf("\nreport: %s\n", (dir / "report.json").string().c_str());
            return 0;
        }

        if (classify->parsed()) {
            auto rt = config::build_runtime(cfg);
            const auto c = editing::classify(parse_tags(classify_prompt, Provenance::user_edit), *rt.providers.llm,
                                             cfg.templates);
            std::printf("%s\n", editing::to_json(c).dump(2).c_str());
            return 0;
        }

        if (fuse->parsed()) {
            auto rt = config::build_runtime(cfg);
            const auto style = editing::classify(parse_tags(style_prompt, Provenance::user_edit), *rt.providers.llm,
                                                 cfg.templates);
            const auto content = editing::classify(parse_tags(content_prompt, Provenance::user_edit),
                                                   *rt.providers.llm, cfg.templates);
            std::printf("%s\n", render(editing::fuse(style, content)).c_str());
            return 0;
        }

        if (serve->parsed()) {
            const auto [host, port] = split_bind(bind);
            if (!out.empty()) cfg.service.store = out;
            service::Service svc(cfg);
            g_service = &svc;
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            std::printf("listening on %s:%d (runs in %s)\n", host.c_str(), port, cfg.service.store.string().c_str());
            std::fflush(stdout);
            const bool ok = svc.listen(host, port);
            g_service = nullptr;
            if (!ok) {
                std::fprintf(stderr, "error: cannot bind %s\n", bind.c_str());
                return 1;
            }
            return 0;
        }
    } catch (const Usage& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.code() == ErrorCode::config_invalid || e.code() == ErrorCode::io_error ? 2 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace revprompt::app
