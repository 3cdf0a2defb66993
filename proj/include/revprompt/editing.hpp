#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "revprompt/core.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/templates.hpp"

namespace revprompt::editing {

/// Every fragment of the source prompt lands in exactly one of the lists.
struct ClassifiedPrompt {
    std::vector<Fragment> content;
    std::vector<Fragment> style;
    std::string origin = "external";

    TagPrompt content_prompt() const;
    TagPrompt style_prompt() const;
};

/// Fragments that already carry an aspect keep it. The rest go to the LLM in
/// one call (none if all are tagged). Omitted, unknown or doubly assigned
/// fragments resolve to content, as does an unparseable reply.
ClassifiedPrompt classify(const TagPrompt& prompt, providers::ChatModel& llm,
                          const TemplateSet& templates = TemplateSet::defaults(), std::string origin = "external");

/// Case-insensitive substring replacement inside each fragment, then
/// re-normalization. Changed fragments become user edits.
TagPrompt modify(const TagPrompt& prompt, std::string_view find, std::string_view replace);

/// content_source.content followed by style_source.style, deduped. Throws
/// empty_result if both are empty.
TagPrompt fuse(const ClassifiedPrompt& style_source, const ClassifiedPrompt& content_source);

nlohmann::json to_json(const ClassifiedPrompt& c);
ClassifiedPrompt classified_from_json(const nlohmann::json& j);

}  // namespace revprompt::editing
