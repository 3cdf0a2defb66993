#include "revprompt/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <numeric>
#include <set>
#include <sstream>
#include <variant>

#include <spdlog/spdlog.h>

#include "revprompt/run_store.hpp"
#include "revprompt/serialization.hpp"

namespace revprompt::evaluation {

namespace fs = std::filesystem;

std::string_view to_string(Source s) { return s == Source::ai_generated ? "ai_generated" : "human_created"; }

namespace {

Source source_from_string(const std::string& s, const std::string& key) {
    if (s == "ai_generated") return Source::ai_generated;
    if (s == "human_created") return Source::human_created;
    fail(ErrorCode::config_invalid, key + ": expected ai_generated or human_created, got '" + s + "'");
}

std::string fixed2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

DatasetManifest DatasetManifest::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config_invalid, "cannot read manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_invalid, "manifest '" + path.string() + "' is not valid JSON: " + e.what());
    }
    auto manifest = from_json(j, path.parent_path());
    manifest.validate();
    return manifest;
}

DatasetManifest DatasetManifest::from_json(const nlohmann::json& j, const fs::path& base_dir) {
    if (!j.is_object() || !j.contains("entries") || !j["entries"].is_array())
        fail(ErrorCode::config_invalid, "manifest.entries: expected an array");
    DatasetManifest m;
    std::size_t i = 0;
    for (const auto& e : j["entries"]) {
        const auto key = "manifest.entries[" + std::to_string(i++) + "]";
        if (!e.is_object()) fail(ErrorCode::config_invalid, key + ": expected an object");
        for (const char* field : {"id", "image"})
            if (!e.contains(field) || !e[field].is_string())
                fail(ErrorCode::config_invalid, key + "." + field + ": expected a string");
        ManifestEntry entry;
        entry.id = e["id"].get<std::string>();
        fs::path image = e["image"].get<std::string>();
        entry.image = image.is_absolute() ? image : base_dir / image;
        if (e.contains("source")) {
            if (!e["source"].is_string()) fail(ErrorCode::config_invalid, key + ".source: expected a string");
            entry.source = source_from_string(e["source"].get<std::string>(), key + ".source");
        }
        if (e.contains("gold_prompt") && !e["gold_prompt"].is_null()) {
            try {
                entry.gold_prompt = json::prompt_from_json(e["gold_prompt"], Provenance::init);
            } catch (const Error& err) {
                fail(ErrorCode::config_invalid, key + ".gold_prompt: " + err.what());
            }
        }
        m.entries.push_back(std::move(entry));
    }
    return m;
}

void DatasetManifest::validate() const {
    std::set<std::string> ids;
    for (const auto& e : entries) {
        if (!ids.insert(e.id).second) fail(ErrorCode::config_invalid, "manifest: duplicate id '" + e.id + "'");
        if (!fs::exists(e.image))
            fail(ErrorCode::config_invalid, "manifest: image for '" + e.id + "' not found: " + e.image.string());
    }
}

MetricSummary mean_variance(std::span<const double> values) {
    if (values.empty()) return {};
    const double n = static_cast<double>(values.size());
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, ss / n};
}

std::string metric_label(const std::string& extractor) {
    if (extractor == "clip") return "CLIP-I";
    if (extractor == "dino") return "DINO";
    if (extractor == "vit") return "ViT";
    std::string out = extractor;
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

ScoreValue clip_t(scoring::Scorer& scorer, const TagPrompt& prompt, const ImageRef& reference) {
    return scorer.clip_sim(reference, prompt);
}

std::map<std::string, FidelityResult> image_fidelity(const TagPrompt& prompt, const ImageRef& reference,
                                                     std::span<const std::int64_t> seeds,
                                                     providers::ImageGenerator& generator,
                                                     std::span<const Extractor> extractors,
                                                     scoring::EmbeddingCache& cache, int width, int height,
                                                     std::optional<int> steps) {
    require(!seeds.empty(), "image fidelity needs at least one seed");
    require(!prompt.empty(), "image fidelity needs a non-empty prompt");
    std::map<std::string, FidelityResult> out;
    for (const auto& ex : extractors) out[ex.name];
    const auto text = render(prompt);
    for (const auto seed : seeds) {
        const auto image = generator.generate({text, seed, width, height, steps});
        for (const auto& ex : extractors) {
            const auto s = scoring::image_similarity(*ex.embedder, cache, "fidelity." + ex.name, image, reference);
            out[ex.name].per_seed.push_back(s.reported());
        }
    }
    for (auto& [_, r] : out) r.summary = mean_variance(r.per_seed);
    return out;
}

Evaluator::Evaluator(std::shared_ptr<scoring::Scorer> scorer, std::shared_ptr<providers::ImageGenerator> generator,
                     std::vector<Extractor> extractors, EvalConfig config)
    : scorer_(std::move(scorer)),
      generator_(std::move(generator)),
      extractors_(std::move(extractors)),
      config_(std::move(config)) {
    require(scorer_ && generator_, "evaluator needs a scorer and a generator");
    require(!config_.seeds.empty(), "evaluation needs at least one seed");
    std::set<std::string> names;
    for (const auto& ex : extractors_) {
        require(ex.embedder != nullptr, "extractor '" + ex.name + "' has no embedder");
        require(names.insert(ex.name).second, "duplicate extractor '" + ex.name + "'");
    }
}

ImageEval Evaluator::evaluate(const ManifestEntry& entry, const ImageRef& reference, const TagPrompt& prompt) {
    ImageEval r;
    r.id = entry.id;
    r.source = entry.source;
    r.prompt = prompt;
    r.clip_t = clip_t(*scorer_, prompt, reference);
    r.fidelity = image_fidelity(prompt, reference, config_.seeds, *generator_, extractors_, fidelity_cache_,
                                config_.image_width, config_.image_height, config_.steps);
    return r;
}

EvalReport Evaluator::run(const DatasetManifest& manifest, const PromptMethod& method, const std::string& method_name) {
    if (manifest.entries.empty()) fail(ErrorCode::empty_manifest, "manifest has no entries");

    using Outcome = std::variant<ImageEval, std::string>;
    const auto one = [&](const ManifestEntry& entry) -> Outcome {
        try {
            const auto reference = ImageRef::from_path(entry.image.string());
            if (!reference.decodable()) return std::string("image is not a readable PNG");
            auto prompt = method(entry, reference);
            if (prompt.empty()) return std::string("method produced an empty prompt");
            return evaluate(entry, reference, prompt);
        } catch (const std::exception& e) {
            return std::string(e.what());
        }
    };

    std::vector<Outcome> outcomes(manifest.entries.size());
    const std::size_t width = std::max<std::size_t>(1, config_.parallelism);
    for (std::size_t start = 0; start < outcomes.size(); start += width) {
        const std::size_t end = std::min(outcomes.size(), start + width);
        if (width == 1) {
            outcomes[start] = one(manifest.entries[start]);
            continue;
        }
        std::vector<std::future<Outcome>> batch;
        for (std::size_t i = start; i < end; ++i)
            batch.push_back(std::async(std::launch::async, one, std::cref(manifest.entries[i])));
        for (std::size_t i = start; i < end; ++i) outcomes[i] = batch[i - start].get();
    }

    EvalReport report;
    report.method = method_name;
    report.config = config_;
    for (const auto& ex : extractors_) report.extractors.push_back(ex.name);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        if (auto* ok = std::get_if<ImageEval>(&outcomes[i])) {
            report.per_image.push_back(std::move(*ok));
        } else {
            const auto& reason = std::get<std::string>(outcomes[i]);
            spdlog::warn("skipping '{}': {}", manifest.entries[i].id, reason);
            report.skipped.push_back({manifest.entries[i].id, reason});
        }
    }

    const double n = static_cast<double>(report.per_image.size());
    if (n > 0) {
        double clip_sum = 0.0;
        for (const auto& r : report.per_image) clip_sum += r.clip_t.raw_cosine();
        report.aggregate_clip_t = ScoreValue(clip_sum / n);
        for (const auto& name : report.extractors) {
            AggregateMetric m;
            std::vector<double> seed_means(config_.seeds.size(), 0.0);
            for (const auto& r : report.per_image) {
                const auto& f = r.fidelity.at(name);
                m.mean += f.summary.mean / n;
                m.variance += f.summary.variance / n;
                for (std::size_t s = 0; s < seed_means.size(); ++s) seed_means[s] += f.per_seed[s] / n;
            }
            m.seed_variance = mean_variance(seed_means).variance;
            report.aggregate[name] = m;
        }
    }
    return report;
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    using oj = nlohmann::ordered_json;
    oj j;
    j["method"] = report.method;
    j["optimization_profile"] = report.config.optimization_profile;
    j["generation_profile"] = report.config.generation_profile;
    j["seeds"] = report.config.seeds;
    j["image_size"] = {report.config.image_width, report.config.image_height};
    j["variance"] = "population variance over seeds, x100 scale";
    oj labels = oj::array();
    for (const auto& name : report.extractors) labels.push_back({{"extractor", name}, {"label", metric_label(name)}});
    j["metrics"] = std::move(labels);

    oj per_image = oj::array();
    for (const auto& r : report.per_image) {
        oj e;
        e["id"] = r.id;
        e["source"] = to_string(r.source);
        e["prompt"] = render(r.prompt);
        e["clip_t"] = r.clip_t.reported();
        for (const auto& name : report.extractors) {
            const auto& f = r.fidelity.at(name);
            e[name] = {{"mean", f.summary.mean}, {"variance", f.summary.variance}, {"per_seed", f.per_seed}};
        }
        per_image.push_back(std::move(e));
    }
    j["per_image"] = std::move(per_image);

    oj agg;
    agg["images"] = report.per_image.size();
    agg["clip_t"] = report.per_image.empty() ? oj(nullptr) : oj(report.aggregate_clip_t.reported());
    for (const auto& name : report.extractors) {
        auto it = report.aggregate.find(name);
        if (it == report.aggregate.end()) {
            agg[name] = nullptr;
            continue;
        }
        agg[name] = {{"mean", it->second.mean},
                     {"variance", it->second.variance},
                     {"seed_variance", it->second.seed_variance}};
    }
    j["aggregate"] = std::move(agg);

    oj skipped = oj::array();
    for (const auto& s : report.skipped) skipped.push_back({{"id", s.id}, {"reason", s.reason}});
    j["skipped"] = std::move(skipped);
    j["warnings"] = report.skipped.size();
    return j;
}

std::string render_table(const EvalReport& report) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"id", "CLIP-T"};
    for (const auto& name : report.extractors) header.push_back(metric_label(name) + " (mean±var)");
    rows.push_back(header);
    for (const auto& r : report.per_image) {
        std::vector<std::string> row{r.id, fixed2(r.clip_t.reported())};
        for (const auto& name : report.extractors) {
            const auto& s = r.fidelity.at(name).summary;
            row.push_back(fixed2(s.mean) + "±" + fixed2(s.variance));
        }
        rows.push_back(std::move(row));
    }
    if (!report.per_image.empty()) {
        std::vector<std::string> row{"mean", fixed2(report.aggregate_clip_t.reported())};
        for (const auto& name : report.extractors) {
            const auto& a = report.aggregate.at(name);
            row.push_back(fixed2(a.mean) + "±" + fixed2(a.variance));
        }
        rows.push_back(std::move(row));
    }

    // Column widths in code points; "±" is two bytes.
    const auto display_len = [](const std::string& s) {
        return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](unsigned char c) { return (c & 0xC0) != 0x80; }));
    };
    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : rows)
        for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], display_len(row[c]));

    std::ostringstream out;
    out << "method: " << report.method << "\n";
    out << "optimization profile: " << report.config.optimization_profile
        << "  generation profile: " << report.config.generation_profile << "\n";
    out << "seeds:";
    for (auto s : report.config.seeds) out << ' ' << s;
    out << "  (image metrics: mean ± population variance over seeds, x100)\n\n";
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c];
            if (c + 1 < row.size()) out << std::string(widths[c] - display_len(row[c]) + 2, ' ');
        }
        out << "\n";
    }
    if (!report.skipped.empty()) {
        out << "\nskipped " << report.skipped.size() << ":\n";
        for (const auto& s : report.skipped) out << "  " << s.id << ": " << s.reason << "\n";
    }
    return out.str();
}

void write_report(const EvalReport& report, const fs::path& dir) {
    fs::create_directories(dir);
    optimizer::write_text(dir / "report.json", to_json(report).dump(2) + "\n");
    optimizer::write_text(dir / "report.txt", render_table(report));
}

}  // namespace revprompt::evaluation
