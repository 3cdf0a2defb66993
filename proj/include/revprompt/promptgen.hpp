#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "revprompt/core.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/templates.hpp"

namespace revprompt::promptgen {

enum class Framework { vanilla, enhanced };
enum class FrameworkChoice { automatic, vanilla, enhanced };

std::string_view to_string(Framework f);
std::string_view to_string(FrameworkChoice f);
FrameworkChoice framework_choice_from_string(std::string_view s);

struct ImageDescription {
    std::string content;
    std::string style;
};

struct DifferenceSet {
    std::vector<std::string> blocks;
    Framework framework = Framework::vanilla;
    std::vector<std::optional<Aspect>> aspect_tags;  // parallel to blocks

    /// Blocks carrying the given aspect, as a set of their own.
    DifferenceSet only(Aspect aspect) const;
};

/// Pulls list items out of a model reply. Takes the first bracketed list and
/// splits it on commas; without a usable list, splits the whole reply on
/// lines and commas. Items are trimmed and stripped of quotes, brackets and
/// bullet markers. Throws parse_failure if nothing is left.
std::vector<std::string> parse_candidate_list(std::string_view text);

/// One block per item when the reply is an enumerated or bulleted list,
/// otherwise the whole (trimmed) reply as a single block.
std::vector<std::string> split_difference_reply(std::string_view reply);

/// Produces textual gradients: difference descriptions between the
/// reference and the generated image, then candidate fragments.
class PromptGenerator {
public:
    PromptGenerator(std::shared_ptr<providers::ChatModel> vlm, std::shared_ptr<providers::ChatModel> llm,
                    TemplateSet templates = TemplateSet::defaults(), std::size_t candidate_cap = 16);

    /// Vanilla only when the VLM takes several images and the choice allows
    /// it; single-image VLMs always go through the enhanced framework.
    Framework route(FrameworkChoice choice) const;

    /// One VLM call with both images, reference first.
    DifferenceSet vanilla_differences(const ImageRef& reference, const ImageRef& generated);

    /// Content and style descriptions of one image (two VLM calls, run
    /// concurrently).
    ImageDescription enhanced_describe(const ImageRef& image);

    /// One LLM call per aspect that has text on both sides.
    DifferenceSet enhanced_differences(const ImageDescription& reference, const ImageDescription& generated);

    /// Routes and runs the chosen framework.
    DifferenceSet differences(const ImageRef& reference, const ImageRef& generated, FrameworkChoice choice);

    /// One LLM call over all blocks. Result is deduped, capped and carries
    /// the aspect when every block shares one.
    std::vector<Fragment> generate_candidates(const DifferenceSet& diffs, const TagPrompt& current);

    const TemplateSet& templates() const noexcept { return templates_; }
    std::size_t candidate_cap() const noexcept { return candidate_cap_; }

private:
    std::string ask(providers::ChatModel& model, std::string text, std::vector<ImageRef> images = {});

    std::shared_ptr<providers::ChatModel> vlm_;
    std::shared_ptr<providers::ChatModel> llm_;
    TemplateSet templates_;
    std::size_t candidate_cap_;
};

}  // namespace revprompt::promptgen
