#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "revprompt/core.hpp"

namespace revprompt::selection {

/// `full` is the greedy selection. The other two exist for ablations:
/// `no_combination` leaves the current prompt's fragments out of the pool,
/// `accept_all` skips selection and appends every candidate.
enum class Mode { full, no_combination, accept_all };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view s);

struct Pick {
    std::string fragment;
    ScoreValue score;  // score of the selection after adding `fragment`

    bool operator==(const Pick&) const = default;
};

struct SelectionOutcome {
    TagPrompt selected;
    ScoreValue final_score;
    std::vector<Pick> picks;
    bool fell_back = false;

    bool operator==(const SelectionOutcome&) const = default;
};

using PromptScorer = std::function<ScoreValue(const ImageRef&, const TagPrompt&)>;

/// Builds the next prompt from the pool (current fragments, then candidates,
/// deduped). Starting from an empty selection with s_max = score(current)
/// (or -inf for an empty current), each round scores selection + p for every
/// remaining p, takes the maximizer (lowest pool index on ties) and accepts
/// it iff its score >= s_max. The first rejection ends the loop. If nothing
/// was accepted, or the result scores below the current prompt, the current
/// prompt is returned unchanged with fell_back set.
///
/// An empty current prompt with nothing selected reports a final score of 0.
SelectionOutcome greedy_select(const TagPrompt& current, std::span<const Fragment> candidates,
                               const ImageRef& reference, const PromptScorer& scorer, Mode mode = Mode::full);

SelectionOutcome greedy_select(const TagPrompt& current, std::span<const std::string> candidates,
                               const ImageRef& reference, const PromptScorer& scorer, Mode mode = Mode::full);

}  // namespace revprompt::selection
