#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "revprompt/core.hpp"
#include "revprompt/promptgen.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/scoring.hpp"
#include "revprompt/selection.hpp"

namespace revprompt::optimizer {

struct RunConfig {
    int max_iterations = 10;
    int early_stop_patience = 2;
    promptgen::FrameworkChoice framework = promptgen::FrameworkChoice::automatic;
    std::int64_t seed = 0;
    int image_width = 512;
    int image_height = 512;
    std::optional<int> steps;
    std::size_t candidate_cap = 16;
    /// Hand-crafted starting prompt; skips captioning when set.
    std::optional<TagPrompt> initial_prompt;
    selection::Mode selection = selection::Mode::full;

    /// Throws config_invalid naming the offending run.* key.
    void validate() const;
};

struct IterationRecord {
    int step = 0;
    TagPrompt prompt_in;
    ImageRef generated_image;
    std::optional<promptgen::Framework> framework;
    std::vector<std::string> differences;
    std::vector<std::optional<Aspect>> difference_aspects;
    std::vector<Fragment> candidates;
    TagPrompt prompt_out;
    ScoreValue score_in;
    ScoreValue score_out;
    std::vector<selection::Pick> picks;
    bool fell_back = false;
    std::size_t prompt_tokens = 0;  // estimate for prompt_out
    double wall_time = 0.0;         // seconds
    std::optional<std::string> error;

    /// Store-relative path of the generated image.
    std::string image_path() const;
};

enum class StopReason { max_iterations, early_stop, error };
std::string_view to_string(StopReason r);
StopReason stop_reason_from_string(std::string_view s);

struct RunResult {
    std::string run_id;
    ImageRef reference;
    TagPrompt initial_prompt;
    TagPrompt final_prompt;
    std::vector<IterationRecord> iterations;
    ScoreValue initial_score;
    ScoreValue final_score;
    StopReason stop_reason = StopReason::max_iterations;
    std::optional<std::string> error;
};

/// Receives run progress. Callbacks run on the optimizer's thread.
class RunObserver {
public:
    virtual ~RunObserver() = default;
    virtual void on_start(const std::string& /*run_id*/, const ImageRef& /*reference*/, const RunConfig& /*config*/) {}
    virtual void on_iteration(const std::string& /*run_id*/, const IterationRecord& /*record*/) {}
    virtual void on_finish(const RunResult& /*result*/) {}
};

std::string new_run_id();

/// The reverse-prompt loop: caption, then repeat generate / compare /
/// propose / select.
class Optimizer {
public:
    Optimizer(providers::ProviderSet providers, TemplateSet templates = TemplateSet::defaults(),
              std::shared_ptr<scoring::EmbeddingCache> cache = std::make_shared<scoring::EmbeddingCache>());

    /// Caption of the reference parsed into a prompt (provenance init).
    TagPrompt initialize(const ImageRef& reference);

    /// One iteration. Throws on provider errors.
    IterationRecord step(const TagPrompt& current, const ImageRef& reference, const RunConfig& config, int index = 0);

    /// Iterates until max_iterations, or until the prompt stays unchanged for
    /// early_stop_patience consecutive iterations. Provider errors end the
    /// run with stop_reason error; the failing iteration is still reported.
    RunResult run(const ImageRef& reference, const RunConfig& config, RunObserver* observer = nullptr,
                  std::string run_id = {});

    scoring::Scorer& scorer() noexcept { return scorer_; }
    const providers::ProviderSet& providers() const noexcept { return providers_; }
    const TemplateSet& templates() const noexcept { return templates_; }

private:
    void step_into(IterationRecord& record, const ImageRef& reference, const RunConfig& config);

    providers::ProviderSet providers_;
    TemplateSet templates_;
    scoring::Scorer scorer_;
};

}  // namespace revprompt::optimizer
