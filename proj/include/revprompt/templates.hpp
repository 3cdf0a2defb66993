#pragma once

#include <map>
#include <string>

#include "revprompt/core.hpp"

namespace revprompt {

/// Instruction templates for the model calls. Names match the keys of the
/// JSON override file.
struct TemplateSet {
    PromptTemplate compare_difference;    // VLM, reference and generated image
    PromptTemplate generate_candidates;   // LLM, {difference}
    PromptTemplate describe_content;      // VLM, one image
    PromptTemplate describe_style;        // VLM, one image
    PromptTemplate compare_descriptions;  // LLM, {image1} {image2}
    PromptTemplate classify_tags;         // LLM, {tags} as a JSON array

    static TemplateSet defaults();

    /// Applies overrides from a name -> text map. Unknown names and
    /// overrides whose placeholders differ from the default's throw
    /// config_invalid.
    TemplateSet with_overrides(const std::map<std::string, std::string>& overrides) const;

    /// Reads a JSON object file of name -> text overrides.
    static std::map<std::string, std::string> read_override_file(const std::string& path);

    std::map<std::string, std::string> texts() const;
};

}  // namespace revprompt
