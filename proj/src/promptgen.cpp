#include "revprompt/promptgen.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <future>
#include <regex>

namespace revprompt::promptgen {

std::string_view to_string(Framework f) { return f == Framework::enhanced ? "enhanced" : "vanilla"; }

std::string_view to_string(FrameworkChoice f) {
    switch (f) {
        case FrameworkChoice::automatic: return "auto";
        case FrameworkChoice::vanilla: return "vanilla";
        case FrameworkChoice::enhanced: return "enhanced";
    }
    return "auto";
}

FrameworkChoice framework_choice_from_string(std::string_view s) {
    if (s == "auto") return FrameworkChoice::automatic;
    if (s == "vanilla") return FrameworkChoice::vanilla;
    if (s == "enhanced") return FrameworkChoice::enhanced;
    fail(ErrorCode::config_invalid, "run.framework must be auto, vanilla or enhanced, got '" + std::string(s) + "'");
}

DifferenceSet DifferenceSet::only(Aspect aspect) const {
    DifferenceSet out{{}, framework, {}};
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (aspect_tags[i] == aspect) {
            out.blocks.push_back(blocks[i]);
            out.aspect_tags.push_back(aspect);
        }
    }
    return out;
}

// ------------------------------------------------------------------ parsing

namespace {

constexpr std::array<std::string_view, 7> kQuotes{"'", "\"", "`", "“", "”", "‘", "’"};

std::string strip_decorations(std::string_view raw) {
    std::string s = trim(raw);
    for (bool changed = true; changed && !s.empty();) {
        changed = false;
        for (auto q : kQuotes) {
            if (s.size() >= q.size() && s.compare(0, q.size(), q) == 0) {
                s.erase(0, q.size());
                changed = true;
            }
            if (s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
                s.erase(s.size() - q.size());
                changed = true;
            }
        }
        while (!s.empty() && (s.front() == '[' || s.front() == '{' || s.front() == '(')) {
            s.erase(0, 1);
            changed = true;
        }
        while (!s.empty() && (s.back() == ']' || s.back() == '}' || s.back() == ')' || s.back() == ';')) {
            s.pop_back();
            changed = true;
        }
        auto t = trim(s);
        if (t != s) changed = true;
        s = std::move(t);
    }
    return s;
}

std::string strip_bullet(std::string_view line) {
    static const std::regex kBullet(R"(^\s*(?:[-*•]|\d+[.)])\s+)");
    return std::regex_replace(std::string(line), kBullet, "", std::regex_constants::format_first_only);
}

void add_items(std::string_view text, char separator_a, char separator_b, std::vector<std::string>& out) {
    std::size_t start = 0;
    for (std::size_t i = 0; i <= text.size(); ++i) {
        if (i == text.size() || text[i] == separator_a || text[i] == separator_b) {
            auto item = strip_decorations(strip_bullet(text.substr(start, i - start)));
            if (!item.empty()) out.push_back(std::move(item));
            start = i + 1;
        }
    }
}

std::vector<std::string> from_bracketed_list(std::string_view text) {
    const auto open = text.find('[');
    if (open == std::string_view::npos) return {};
    int depth = 0;
    std::size_t close = text.size();
    for (std::size_t i = open; i < text.size(); ++i) {
        if (text[i] == '[') ++depth;
        if (text[i] == ']' && --depth == 0) {
            close = i;
            break;
        }
    }
    std::vector<std::string> items;
    add_items(text.substr(open + 1, close - open - 1), ',', '\n', items);
    return items;
}

bool is_list_item(std::string_view line) {
    static const std::regex kItem(R"(^\s*(?:[-*•]|\d+[.)])\s+\S)");
    return std::regex_search(std::string(line), kItem);
}

}  // namespace

std::vector<std::string> parse_candidate_list(std::string_view text) {
    auto items = from_bracketed_list(text);
    if (items.empty()) add_items(text, ',', '\n', items);
    if (items.empty()) fail(ErrorCode::parse_failure, "no candidate prompts found in reply");
    return items;
}

std::vector<std::string> split_difference_reply(std::string_view reply) {
    std::vector<std::string> lines;
    for (std::size_t start = 0; start <= reply.size();) {
        auto end = reply.find('\n', start);
        if (end == std::string_view::npos) end = reply.size();
        lines.emplace_back(reply.substr(start, end - start));
        start = end + 1;
    }
    const auto items = std::count_if(lines.begin(), lines.end(), [](const std::string& l) { return is_list_item(l); });

    std::vector<std::string> blocks;
    if (items < 2) {
        auto whole = trim(reply);
        if (!whole.empty()) blocks.push_back(std::move(whole));
        return blocks;
    }
    std::string current;
    const auto flush = [&] {
        auto t = trim(current);
        if (!t.empty()) blocks.push_back(std::move(t));
        current.clear();
    };
    for (const auto& line : lines) {
        if (is_list_item(line)) flush();
        if (!current.empty()) current += "\n";
        current += line;
    }
    flush();
    return blocks;
}

// --------------------------------------------------------- PromptGenerator

PromptGenerator::PromptGenerator(std::shared_ptr<providers::ChatModel> vlm, std::shared_ptr<providers::ChatModel> llm,
                                 TemplateSet templates, std::size_t candidate_cap)
    : vlm_(std::move(vlm)), llm_(std::move(llm)), templates_(std::move(templates)), candidate_cap_(candidate_cap) {
    require(vlm_ && llm_, "prompt generator needs a VLM and an LLM");
    require(candidate_cap_ > 0, "candidate cap must be positive");
}

std::string PromptGenerator::ask(providers::ChatModel& model, std::string text, std::vector<ImageRef> images) {
    const providers::ChatTurn turn{providers::ChatTurn::Speaker::user, std::move(text), std::move(images)};
    return model.chat(std::span<const providers::ChatTurn>(&turn, 1));
}

Framework PromptGenerator::route(FrameworkChoice choice) const {
    if (!vlm_->supports_multi_image()) return Framework::enhanced;
    return choice == FrameworkChoice::enhanced ? Framework::enhanced : Framework::vanilla;
}

DifferenceSet PromptGenerator::vanilla_differences(const ImageRef& reference, const ImageRef& generated) {
    if (!vlm_->supports_multi_image())
        fail(ErrorCode::unsupported_multi_image, "vanilla differences need a multi-image VLM; use the enhanced framework");
    const auto reply = ask(*vlm_, templates_.compare_difference.instantiate({}), {reference, generated});
    DifferenceSet set{split_difference_reply(reply), Framework::vanilla, {}};
    if (set.blocks.empty()) fail(ErrorCode::parse_failure, "empty difference description from VLM");
    set.aspect_tags.assign(set.blocks.size(), std::nullopt);
    return set;
}

ImageDescription PromptGenerator::enhanced_describe(const ImageRef& image) {
    auto content = std::async(std::launch::async,
                              [&] { return ask(*vlm_, templates_.describe_content.instantiate({}), {image}); });
    auto style = ask(*vlm_, templates_.describe_style.instantiate({}), {image});
    return ImageDescription{trim(content.get()), trim(style)};
}

DifferenceSet PromptGenerator::enhanced_differences(const ImageDescription& reference,
                                                    const ImageDescription& generated) {
    require(!reference.content.empty() || !reference.style.empty(), "reference description is empty");
    require(!generated.content.empty() || !generated.style.empty(), "generated description is empty");

    const auto compare = [&](const std::string& ref, const std::string& gen) {
        return ask(*llm_, templates_.compare_descriptions.instantiate({{"image1", ref}, {"image2", gen}}));
    };
    const bool do_content = !reference.content.empty() && !generated.content.empty();
    const bool do_style = !reference.style.empty() && !generated.style.empty();
    require(do_content || do_style, "descriptions share no non-empty aspect");

    std::future<std::string> style_reply;
    if (do_style) style_reply = std::async(std::launch::async, [&] { return compare(reference.style, generated.style); });
    const std::string content_reply = do_content ? compare(reference.content, generated.content) : std::string();

    DifferenceSet set{{}, Framework::enhanced, {}};
    const auto add = [&](const std::string& reply, Aspect aspect) {
        for (auto& block : split_difference_reply(reply)) {
            if (std::find(set.blocks.begin(), set.blocks.end(), block) != set.blocks.end()) continue;
            set.blocks.push_back(std::move(block));
            set.aspect_tags.emplace_back(aspect);
        }
    };
    if (do_content) add(content_reply, Aspect::content);
    if (do_style) add(style_reply.get(), Aspect::style);
    if (set.blocks.empty()) fail(ErrorCode::parse_failure, "empty difference description from LLM");
    return set;
}

DifferenceSet PromptGenerator::differences(const ImageRef& reference, const ImageRef& generated,
                                           FrameworkChoice choice) {
    if (route(choice) == Framework::vanilla) return vanilla_differences(reference, generated);
    auto ref_desc = std::async(std::launch::async, [&] { return enhanced_describe(reference); });
    auto gen_desc = enhanced_describe(generated);
    return enhanced_differences(ref_desc.get(), gen_desc);
}

std::vector<Fragment> PromptGenerator::generate_candidates(const DifferenceSet& diffs, const TagPrompt& current) {
    (void)current;  // the shipped template only consumes the difference text
    require(!diffs.blocks.empty(), "candidate generation needs at least one difference block");
    std::string difference;
    for (const auto& b : diffs.blocks) {
        if (!difference.empty()) difference += "\n";
        difference += b;
    }
    const auto reply = ask(*llm_, templates_.generate_candidates.instantiate({{"difference", difference}}));

    std::optional<Aspect> aspect;
    if (diffs.framework == Framework::enhanced && !diffs.aspect_tags.empty() && diffs.aspect_tags.front() &&
        std::all_of(diffs.aspect_tags.begin(), diffs.aspect_tags.end(),
                    [&](const auto& a) { return a == diffs.aspect_tags.front(); }))
        aspect = diffs.aspect_tags.front();

    TagPrompt unique;
    for (const auto& item : parse_candidate_list(reply)) {
        if (unique.size() >= candidate_cap_) break;
        unique.push_back({item, Provenance::candidate, aspect});
    }
    return unique.fragments();
}

}  // namespace revprompt::promptgen
