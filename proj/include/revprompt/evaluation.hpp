#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revprompt/core.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/scoring.hpp"

namespace revprompt::evaluation {

enum class Source { ai_generated, human_created };
std::string_view to_string(Source s);

struct ManifestEntry {
    std::string id;
    std::filesystem::path image;
    Source source = Source::ai_generated;
    std::optional<TagPrompt> gold_prompt;
};

/// {"entries": [{"id", "image", "source", "gold_prompt"?}]}; image paths are
/// relative to the manifest file.
struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    static DatasetManifest load(const std::filesystem::path& path);
    static DatasetManifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);

    /// Unique ids and existing image files; throws config_invalid otherwise.
    void validate() const;
};

/// Mean and population variance (n divisor).
struct MetricSummary {
    double mean = 0.0;
    double variance = 0.0;

    bool operator==(const MetricSummary&) const = default;
};

MetricSummary mean_variance(std::span<const double> values);

struct Extractor {
    std::string name;  // "clip", "dino", "vit", ...
    std::shared_ptr<providers::ImageEmbedder> embedder;
};

/// Column label for an extractor name (clip -> CLIP-I, dino -> DINO, vit -> ViT).
std::string metric_label(const std::string& extractor);

/// Prompt fidelity; the same computation as ClipSim.
ScoreValue clip_t(scoring::Scorer& scorer, const TagPrompt& prompt, const ImageRef& reference);

struct FidelityResult {
    MetricSummary summary;           // x100 scale
    std::vector<double> per_seed;    // x100 scale, in seed order
};

/// For each seed, regenerate an image from the prompt and compare it with
/// the reference under every extractor.
std::map<std::string, FidelityResult> image_fidelity(const TagPrompt& prompt, const ImageRef& reference,
                                                     std::span<const std::int64_t> seeds,
                                                     providers::ImageGenerator& generator,
                                                     std::span<const Extractor> extractors,
                                                     scoring::EmbeddingCache& cache, int width = 512,
                                                     int height = 512, std::optional<int> steps = std::nullopt);

struct EvalConfig {
    std::vector<std::int64_t> seeds{0, 1, 2};
    int image_width = 512;
    int image_height = 512;
    std::optional<int> steps;
    std::size_t parallelism = 1;
    std::string optimization_profile = "default";  // text-to-image model the prompts were optimized against
    std::string generation_profile = "default";    // text-to-image model used to recreate images
};

struct ImageEval {
    std::string id;
    Source source = Source::ai_generated;
    TagPrompt prompt;
    ScoreValue clip_t;
    std::map<std::string, FidelityResult> fidelity;
};

struct SkippedEntry {
    std::string id;
    std::string reason;
};

struct AggregateMetric {
    double mean = 0.0;           // mean over images of per-image means
    double variance = 0.0;       // mean over images of per-image variances
    double seed_variance = 0.0;  // variance over seeds of the dataset mean
};

struct EvalReport {
    std::string method;
    EvalConfig config;
    std::vector<std::string> extractors;
    std::vector<ImageEval> per_image;
    ScoreValue aggregate_clip_t;
    std::map<std::string, AggregateMetric> aggregate;
    std::vector<SkippedEntry> skipped;
};

/// Produces the prompt to evaluate for one entry.
using PromptMethod = std::function<TagPrompt(const ManifestEntry&, const ImageRef&)>;

class Evaluator {
public:
    Evaluator(std::shared_ptr<scoring::Scorer> scorer, std::shared_ptr<providers::ImageGenerator> generator,
              std::vector<Extractor> extractors, EvalConfig config = {});

    ImageEval evaluate(const ManifestEntry& entry, const ImageRef& reference, const TagPrompt& prompt);

    /// Runs the method per entry and aggregates in manifest order. Entries
    /// that fail are listed in `skipped` and left out of the aggregates.
    /// Throws empty_manifest for a manifest without entries.
    EvalReport run(const DatasetManifest& manifest, const PromptMethod& method, const std::string& method_name);

private:
    std::shared_ptr<scoring::Scorer> scorer_;
    std::shared_ptr<providers::ImageGenerator> generator_;
    std::vector<Extractor> extractors_;
    EvalConfig config_;
    scoring::EmbeddingCache fidelity_cache_;
};

nlohmann::ordered_json to_json(const EvalReport& report);

/// Plain-text table: id, CLIP-T, then one column per extractor.
std::string render_table(const EvalReport& report);

/// Writes report.json and report.txt into `dir`.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace revprompt::evaluation
