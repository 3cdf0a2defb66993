#include "revprompt/editing.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <spdlog/spdlog.h>

#include "revprompt/serialization.hpp"

namespace revprompt::editing {

namespace {

TagPrompt as_prompt(const std::vector<Fragment>& fragments) {
    TagPrompt p;
    for (const auto& f : fragments) p.push_back(f);
    return p;
}

// First balanced {...} object in a reply.
std::optional<nlohmann::json> first_object(std::string_view text) {
    for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
        int depth = 0;
        bool in_string = false;
        for (std::size_t i = open; i < text.size(); ++i) {
            const char c = text[i];
            if (in_string) {
                if (c == '\\') ++i;
                else if (c == '"') in_string = false;
                continue;
            }
            if (c == '"') in_string = true;
            else if (c == '{') ++depth;
            else if (c == '}' && --depth == 0) {
                auto parsed = nlohmann::json::parse(text.substr(open, i - open + 1), nullptr, false);
                if (!parsed.is_discarded() && parsed.is_object()) return parsed;
                break;
            }
        }
    }
    return std::nullopt;
}

}  // namespace

TagPrompt ClassifiedPrompt::content_prompt() const { return as_prompt(content); }
TagPrompt ClassifiedPrompt::style_prompt() const { return as_prompt(style); }

ClassifiedPrompt classify(const TagPrompt& prompt, providers::ChatModel& llm, const TemplateSet& templates,
                          std::string origin) {
    require(!prompt.empty(), "classify needs a non-empty prompt");

    std::vector<const Fragment*> untagged;
    for (const auto& f : prompt.fragments())
        if (!f.aspect) untagged.push_back(&f);

    std::map<std::string, Aspect> llm_labels;
    if (!untagged.empty()) {
        nlohmann::json tags = nlohmann::json::array();
        for (const auto* f : untagged) tags.push_back(f->text);
        const providers::ChatTurn turn{providers::ChatTurn::Speaker::user,
                                       templates.classify_tags.instantiate({{"tags", tags.dump()}}),
                                       {}};
        const auto reply = llm.chat(std::span<const providers::ChatTurn>(&turn, 1));

        std::map<std::string, int> seen;  // key -> number of classes claiming it
        const auto object = first_object(reply);
        if (!object) spdlog::warn("classification reply unparseable; treating all tags as content");
        for (const auto& [label, aspect] : {std::pair{"content", Aspect::content}, std::pair{"style", Aspect::style}}) {
            if (!object || !object->contains(label) || !(*object)[label].is_array()) continue;
            std::set<std::string> in_this_class;
            for (const auto& item : (*object)[label]) {
                if (!item.is_string()) continue;
                const auto key = dedupe_key(item.get<std::string>());
                if (!in_this_class.insert(key).second) continue;
                llm_labels[key] = aspect;
                ++seen[key];
            }
        }
        for (const auto& [key, count] : seen)
            if (count > 1) llm_labels[key] = Aspect::content;
    }

    ClassifiedPrompt out;
    out.origin = std::move(origin);
    for (const auto& f : prompt.fragments()) {
        Aspect aspect = Aspect::content;
        if (f.aspect) {
            aspect = *f.aspect;
        } else if (auto it = llm_labels.find(dedupe_key(f.text)); it != llm_labels.end()) {
            aspect = it->second;
        }
        Fragment tagged = f;
        tagged.aspect = aspect;
        (aspect == Aspect::style ? out.style : out.content).push_back(std::move(tagged));
    }
    return out;
}

TagPrompt modify(const TagPrompt& prompt, std::string_view find, std::string_view replace) {
    require(!find.empty(), "modify needs a non-empty search text");
    require(replace.find(',') == std::string_view::npos, "replacement text may not contain a comma");
    const auto lower = [](std::string_view s) {
        std::string out(s);
        std::transform(out.begin(), out.end(), out.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        return out;
    };
    const auto needle = lower(find);

    TagPrompt out;
    for (const auto& f : prompt.fragments()) {
        const auto haystack = lower(f.text);
        std::string text;
        std::size_t pos = 0;
        for (auto hit = haystack.find(needle); hit != std::string::npos; hit = haystack.find(needle, pos)) {
            text.append(f.text, pos, hit - pos);
            text.append(replace);
            pos = hit + needle.size();
        }
        if (pos == 0) {
            out.push_back(f);
            continue;
        }
        text.append(f.text, pos);
        out.push_back({std::move(text), Provenance::user_edit, f.aspect});
    }
    return out;
}

TagPrompt fuse(const ClassifiedPrompt& style_source, const ClassifiedPrompt& content_source) {
    TagPrompt out;
    for (const auto& f : content_source.content) out.push_back(f);
    for (const auto& f : style_source.style) out.push_back(f);
    if (out.empty()) fail(ErrorCode::empty_result, "fuse produced an empty prompt");
    return out;
}

nlohmann::json to_json(const ClassifiedPrompt& c) {
    nlohmann::json content = nlohmann::json::array();
    for (const auto& f : c.content) content.push_back(json::to_json(f));
    nlohmann::json style = nlohmann::json::array();
    for (const auto& f : c.style) style.push_back(json::to_json(f));
    return {{"content", std::move(content)}, {"style", std::move(style)}, {"origin", c.origin}};
}

ClassifiedPrompt classified_from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorCode::parse_failure, "classified prompt must be an object");
    ClassifiedPrompt c;
    c.origin = j.value("origin", "external");
    for (const auto& [label, aspect] : {std::pair{"content", Aspect::content}, std::pair{"style", Aspect::style}}) {
        if (!j.contains(label)) continue;
        auto part = json::prompt_from_json(j[label], Provenance::user_edit);
        auto& list = aspect == Aspect::style ? c.style : c.content;
        for (auto f : part.fragments()) {
            f.aspect = aspect;
            list.push_back(std::move(f));
        }
    }
    return c;
}

}  // namespace revprompt::editing
