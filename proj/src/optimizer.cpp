#include "revprompt/optimizer.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <random>

namespace revprompt::optimizer {

void RunConfig::validate() const {
    if (max_iterations < 1) fail(ErrorCode::config_invalid, "run.max_iterations must be >= 1");
    if (early_stop_patience < 1) fail(ErrorCode::config_invalid, "run.early_stop_patience must be >= 1");
    if (image_width <= 0 || image_height <= 0) fail(ErrorCode::config_invalid, "run.image_size must be positive");
    if (steps && *steps <= 0) fail(ErrorCode::config_invalid, "run.steps must be positive");
    if (candidate_cap == 0) fail(ErrorCode::config_invalid, "run.candidate_cap must be >= 1");
}

std::string IterationRecord::image_path() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "images/step_%03d.png", step);
    return buf;
}

std::string_view to_string(StopReason r) {
    switch (r) {
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::early_stop: return "early_stop";
        case StopReason::error: return "error";
    }
    return "error";
}

StopReason stop_reason_from_string(std::string_view s) {
    if (s == "max_iterations") return StopReason::max_iterations;
    if (s == "early_stop") return StopReason::early_stop;
    if (s == "error") return StopReason::error;
    fail(ErrorCode::parse_failure, "unknown stop reason '" + std::string(s) + "'");
}

std::string new_run_id() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    char buf[64];
    std::snprintf(buf, sizeof buf, "run-%04d%02d%02d-%02d%02d%02d-%06llx", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                  static_cast<unsigned long long>(rng() & 0xffffffULL));
    return buf;
}

Optimizer::Optimizer(providers::ProviderSet providers, TemplateSet templates,
                     std::shared_ptr<scoring::EmbeddingCache> cache)
    : providers_(std::move(providers)),
      templates_(std::move(templates)),
      scorer_(providers_.text_embedding, providers_.image_embedding, std::move(cache)) {
    require(providers_.caption && providers_.text_to_image && providers_.vlm && providers_.llm,
            "optimizer needs caption, text_to_image, vlm and llm providers");
}

TagPrompt Optimizer::initialize(const ImageRef& reference) {
    auto prompt = parse_tags(providers_.caption->caption(reference), Provenance::init);
    if (prompt.empty()) fail(ErrorCode::parse_failure, "caption backend returned an empty caption");
    return prompt;
}

IterationRecord Optimizer::step(const TagPrompt& current, const ImageRef& reference, const RunConfig& config,
                                int index) {
    config.validate();
    IterationRecord record;
    record.step = index;
    record.prompt_in = current;
    step_into(record, reference, config);
    return record;
}

void Optimizer::step_into(IterationRecord& record, const ImageRef& reference, const RunConfig& config) {
    const auto started = std::chrono::steady_clock::now();
    const auto scorer = [this](const ImageRef& image, const TagPrompt& p) { return scorer_.clip_sim(image, p); };

    record.score_in = scorer_.clip_sim(reference, record.prompt_in);
    record.prompt_out = record.prompt_in;
    record.score_out = record.score_in;

    record.generated_image = providers_.text_to_image->generate(
        {render(record.prompt_in), config.seed, config.image_width, config.image_height, config.steps});

    promptgen::PromptGenerator generator(providers_.vlm, providers_.llm, templates_, config.candidate_cap);
    const auto diffs = generator.differences(reference, record.generated_image, config.framework);
    record.framework = diffs.framework;
    record.differences = diffs.blocks;
    record.difference_aspects = diffs.aspect_tags;

    // A reply that is not a usable list only costs this iteration its candidates.
    const auto propose = [&](const promptgen::DifferenceSet& set) -> std::vector<Fragment> {
        try {
            return generator.generate_candidates(set, record.prompt_in);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::parse_failure) throw;
            spdlog::info("step {}: no candidates from reply: {}", record.step, e.what());
            return {};
        }
    };
    TagPrompt candidates;
    if (diffs.framework == promptgen::Framework::vanilla) {
        for (auto& f : propose(diffs)) candidates.push_back(std::move(f));
    } else {
        for (auto aspect : {Aspect::content, Aspect::style}) {
            const auto subset = diffs.only(aspect);
            if (subset.blocks.empty()) continue;
            for (auto& f : propose(subset)) candidates.push_back(std::move(f));
        }
    }
    record.candidates = candidates.fragments();

    const auto outcome =
        selection::greedy_select(record.prompt_in, record.candidates, reference, scorer, config.selection);
    record.prompt_out = outcome.selected;
    record.score_out = outcome.final_score;
    record.picks = outcome.picks;
    record.fell_back = outcome.fell_back;
    record.prompt_tokens = scoring::estimate_tokens(render(record.prompt_out));
    if (record.prompt_tokens > scoring::kTextWindowTokens)
        spdlog::warn("step {}: prompt of ~{} tokens exceeds the {}-token text window", record.step,
                     record.prompt_tokens, scoring::kTextWindowTokens);
    record.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
}

RunResult Optimizer::run(const ImageRef& reference, const RunConfig& config, RunObserver* observer,
                         std::string run_id) {
    config.validate();
    RunResult result;
    result.run_id = run_id.empty() ? new_run_id() : std::move(run_id);
    result.reference = reference;
    if (observer) observer->on_start(result.run_id, reference, config);

    const auto finish = [&](StopReason reason) {
        result.stop_reason = reason;
        if (observer) observer->on_finish(result);
        return result;
    };

    try {
        result.initial_prompt = config.initial_prompt ? *config.initial_prompt : initialize(reference);
        result.initial_score = scorer_.clip_sim(reference, result.initial_prompt);
    } catch (const std::exception& e) {
        result.error = std::string("initialization failed: ") + e.what();
        spdlog::error("{}: {}", result.run_id, *result.error);
        return finish(StopReason::error);
    }
    result.final_prompt = result.initial_prompt;
    result.final_score = result.initial_score;

    int unchanged_streak = 0;
    for (int i = 0; i < config.max_iterations; ++i) {
        IterationRecord record;
        record.step = i;
        record.prompt_in = result.final_prompt;
        record.prompt_out = result.final_prompt;
        record.score_in = result.final_score;
        record.score_out = result.final_score;
        try {
            step_into(record, reference, config);
        } catch (const std::exception& e) {
            record.prompt_out = record.prompt_in;
            record.score_out = record.score_in;
            record.error = e.what();
        }
        if (observer) observer->on_iteration(result.run_id, record);
        result.iterations.push_back(record);

        if (record.error) {
            result.error = "step " + std::to_string(i) + ": " + *record.error;
            spdlog::error("{}: {}", result.run_id, *result.error);
            return finish(StopReason::error);
        }
        unchanged_streak = record.prompt_out.same_texts(result.final_prompt) ? unchanged_streak + 1 : 0;
        result.final_prompt = record.prompt_out;
        result.final_score = record.score_out;
        if (unchanged_streak >= config.early_stop_patience) return finish(StopReason::early_stop);
    }
    return finish(StopReason::max_iterations);
}

}  // namespace revprompt::optimizer
