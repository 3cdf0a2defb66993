#include "revprompt/selection.hpp"

#include <limits>

namespace revprompt::selection {

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::full: return "full";
        case Mode::no_combination: return "no_combination";
        case Mode::accept_all: return "accept_all";
    }
    return "full";
}

Mode mode_from_string(std::string_view s) {
    if (s == "full") return Mode::full;
    if (s == "no_combination") return Mode::no_combination;
    if (s == "accept_all") return Mode::accept_all;
    fail(ErrorCode::config_invalid, "unknown selection mode '" + std::string(s) + "'");
}

SelectionOutcome greedy_select(const TagPrompt& current, std::span<const Fragment> candidates,
                               const ImageRef& reference, const PromptScorer& scorer, Mode mode) {
    TagPrompt pool;
    if (mode != Mode::no_combination)
        for (const auto& f : current.fragments()) pool.push_back(f);
    for (const auto& f : candidates) pool.push_back(f);

    const double current_score = current.empty() ? -std::numeric_limits<double>::infinity()
                                                 : scorer(reference, current).raw_cosine();
    const auto unchanged = [&] {
        return SelectionOutcome{current, ScoreValue(current.empty() ? 0.0 : current_score), {}, true};
    };

    if (mode == Mode::accept_all) {
        if (pool.empty()) return unchanged();
        return SelectionOutcome{pool, scorer(reference, pool), {}, false};
    }

    std::vector<Fragment> remaining = pool.fragments();
    TagPrompt selection;
    std::vector<Pick> picks;
    double best_so_far = current_score;

    while (!remaining.empty()) {
        std::size_t best_index = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < remaining.size(); ++i) {
            TagPrompt trial = selection;
            trial.push_back(remaining[i]);
            const double s = scorer(reference, trial).raw_cosine();
            if (s > best) {
                best = s;
                best_index = i;
            }
        }
        if (best < best_so_far) break;
        selection.push_back(remaining[best_index]);
        picks.push_back({remaining[best_index].text, ScoreValue(best)});
        best_so_far = best;
        remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_index));
    }

    if (selection.empty() || best_so_far < current_score) return unchanged();
    return SelectionOutcome{std::move(selection), ScoreValue(best_so_far), std::move(picks), false};
}

SelectionOutcome greedy_select(const TagPrompt& current, std::span<const std::string> candidates,
                               const ImageRef& reference, const PromptScorer& scorer, Mode mode) {
    std::vector<Fragment> fragments;
    fragments.reserve(candidates.size());
    for (const auto& c : candidates) fragments.push_back({c, Provenance::candidate, std::nullopt});
    return greedy_select(current, fragments, reference, scorer, mode);
}

}  // namespace revprompt::selection
