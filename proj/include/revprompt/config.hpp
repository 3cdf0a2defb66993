#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "revprompt/evaluation.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/scoring.hpp"
#include "revprompt/templates.hpp"

namespace revprompt::config {

struct EvaluationSection {
    evaluation::EvalConfig eval;
    /// Image-fidelity backbones in column order. Empty means "clip" only,
    /// sharing the image_embedding provider.
    std::vector<std::pair<std::string, providers::ProviderProfile>> extractors;
    /// Text-to-image profile used to recreate images; defaults to
    /// providers.text_to_image.
    std::optional<providers::ProviderProfile> generation;
};

struct CacheSection {
    std::size_t capacity = 100'000;
    std::optional<std::filesystem::path> path;  // persisted across invocations when set
};

struct ServiceSection {
    std::size_t max_concurrent_runs = 2;
    std::filesystem::path store = "runs";
};

/// One YAML or JSON document:
///
///   providers:  {<role>: profile, ..., default: profile}
///   run:        optimizer settings
///   evaluation: {seeds, parallelism, image_size, steps, extractors, generation,
///                optimization_profile, generation_profile}
///   templates:  {<name>: text} or {file: path}
///   cache:      {capacity, path}
///   service:    {max_concurrent_runs, store}
///
/// Every error is config_invalid and names the offending key.
struct AppConfig {
    std::map<providers::Role, providers::ProviderProfile> providers;
    optimizer::RunConfig run;
    EvaluationSection evaluation;
    TemplateSet templates = TemplateSet::defaults();
    CacheSection cache;
    ServiceSection service;

    static AppConfig load(const std::filesystem::path& path);
    static AppConfig from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
    /// Every role served by the deterministic mock.
    static AppConfig mock();
};

/// Scalars become bools, integers, floats or strings; quoted scalars stay strings.
nlohmann::json parse_document(const std::string& text, bool yaml);

providers::ProviderProfile profile_from_json(const nlohmann::json& j, providers::Role role, const std::string& key,
                                             const providers::ProviderProfile& base = {});

/// Instantiated backends for one configuration.
struct Runtime {
    providers::ProviderSet providers;
    std::shared_ptr<scoring::EmbeddingCache> cache;
    std::shared_ptr<providers::ImageGenerator> eval_generator;
    std::vector<evaluation::Extractor> extractors;
};

/// Loads the cache file if configured and present.
Runtime build_runtime(const AppConfig& cfg);

}  // namespace revprompt::config
