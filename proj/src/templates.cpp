#include "revprompt/templates.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>

namespace revprompt {

namespace {

constexpr const char* kCompareDifference =
    "The first image is Image 1 and the second image is Image 2. You need to describe the difference between "
    "Image 1 and Image 2. Let's think step by step.";

constexpr const char* kGenerateCandidates =
    "Generate image promts that incorporate the following difference between Image 1 and Image 2: {difference}.\n"
    "For the specific contrasts identified in the differences between Image 1 and Image 2, the image prompts should "
    "guide the creation of images that align more closely with Image 1.\n"
    "The prompts should be structured as a series of keywords or short phrases, separated by commas. Please list "
    "all possible prompts in a python list format. Your answer should only contain a python list. Let's think step "
    "by step.";

constexpr const char* kDescribeContent =
    "You are an expert in describing image, please describe the content of the image. This includes indentifying "
    "objects, environments, events, background, actions, etc. in the image.";

constexpr const char* kDescribeStyle =
    "You are an expert in image analysis, please describe the style of the image. This includes identifying the "
    "medium of the image, the art style, the artist's style, the creative technique, the lighting, the colours and "
    "the resolution, etc.";

constexpr const char* kCompareDescriptions =
    "I have descriptions of Image 1 and Image 2.\n"
    "The descriptions of Image 1: {image1}\n"
    "The descriptions of Image 2: {image2}\n"
    "Please identify the differences between Image 1 and Image 2 based on their descriptions. Let's think step by "
    "step.";

constexpr const char* kClassifyTags =
    "Classify each tag of the following text-to-image prompt as content or style. Content covers objects, "
    "characters, environments, events, background and actions. Style covers medium, art style, artist, technique, "
    "lighting, colours and resolution.\n"
    "Answer with a single JSON object {\"content\": [...], \"style\": [...]} that lists every tag exactly once, "
    "copied verbatim.\n"
    "Tags: {tags}";

}  // namespace

TemplateSet TemplateSet::defaults() {
    return TemplateSet{
        PromptTemplate("compare_difference", kCompareDifference),
        PromptTemplate("generate_candidates", kGenerateCandidates),
        PromptTemplate("describe_content", kDescribeContent),
        PromptTemplate("describe_style", kDescribeStyle),
        PromptTemplate("compare_descriptions", kCompareDescriptions),
        PromptTemplate("classify_tags", kClassifyTags),
    };
}

TemplateSet TemplateSet::with_overrides(const std::map<std::string, std::string>& overrides) const {
    TemplateSet out = *this;
    for (const auto& [name, text] : overrides) {
        PromptTemplate* slot = nullptr;
        if (name == "compare_difference") slot = &out.compare_difference;
        else if (name == "generate_candidates") slot = &out.generate_candidates;
        else if (name == "describe_content") slot = &out.describe_content;
        else if (name == "describe_style") slot = &out.describe_style;
        else if (name == "compare_descriptions") slot = &out.compare_descriptions;
        else if (name == "classify_tags") slot = &out.classify_tags;
        else fail(ErrorCode::config_invalid, "templates." + name + " is not a known template");

        PromptTemplate replacement(name, text);
        auto expected = slot->placeholders();
        auto got = replacement.placeholders();
        std::sort(expected.begin(), expected.end());
        std::sort(got.begin(), got.end());
        if (expected != got)
            fail(ErrorCode::config_invalid, "templates." + name + " must use exactly the placeholders of the default");
        *slot = std::move(replacement);
    }
    return out;
}

std::map<std::string, std::string> TemplateSet::read_override_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config_invalid, "cannot read template file '" + path + "'");
    try {
        return nlohmann::json::parse(in).get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::config_invalid, "template file '" + path + "' must map names to strings: " + e.what());
    }
}

std::map<std::string, std::string> TemplateSet::texts() const {
    std::map<std::string, std::string> out;
    for (const auto* t : {&compare_difference, &generate_candidates, &describe_content, &describe_style,
                          &compare_descriptions, &classify_tags})
        out.emplace(t->name(), t->text());
    return out;
}

}  // namespace revprompt
