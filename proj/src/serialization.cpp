#include "revprompt/serialization.hpp"

#include <set>

namespace revprompt::json {

json to_json(const Fragment& f) {
    json j{{"text", f.text}, {"provenance", to_string(f.provenance)}};
    if (f.aspect) j["aspect"] = to_string(*f.aspect);
    return j;
}

json to_json(const TagPrompt& p) {
    json arr = json::array();
    for (const auto& f : p.fragments()) arr.push_back(to_json(f));
    return arr;
}

json to_json(ScoreValue s) { return {{"raw", s.raw_cosine()}, {"reported", s.reported()}}; }

json to_json(const selection::SelectionOutcome& o) {
    json picks = json::array();
    for (const auto& p : o.picks) picks.push_back({{"fragment", p.fragment}, {"score", to_json(p.score)}});
    return {{"selected", to_json(o.selected)},
            {"selected_text", render(o.selected)},
            {"final_score", to_json(o.final_score)},
            {"picks", std::move(picks)},
            {"fell_back", o.fell_back}};
}

json to_json(const optimizer::RunConfig& c) {
    json j{{"max_iterations", c.max_iterations},
           {"early_stop_patience", c.early_stop_patience},
           {"framework", promptgen::to_string(c.framework)},
           {"seed", c.seed},
           {"image_size", {c.image_width, c.image_height}},
           {"candidate_cap", c.candidate_cap},
           {"selection", selection::to_string(c.selection)}};
    if (c.steps) j["steps"] = *c.steps;
    if (c.initial_prompt) j["initial_prompt"] = render(*c.initial_prompt);
    return j;
}

json to_json(const optimizer::IterationRecord& r) {
    json image{{"id", r.generated_image.id()},
               {"path", r.image_path()},
               {"width", r.generated_image.width()},
               {"height", r.generated_image.height()}};
    image["seed"] = r.generated_image.seed() ? json(*r.generated_image.seed()) : json(nullptr);
    if (r.generated_image.empty()) image = nullptr;

    json aspects = json::array();
    for (const auto& a : r.difference_aspects) aspects.push_back(a ? json(to_string(*a)) : json(nullptr));
    json candidates = json::array();
    for (const auto& c : r.candidates) candidates.push_back(to_json(c));
    json picks = json::array();
    for (const auto& p : r.picks) picks.push_back({{"fragment", p.fragment}, {"score", to_json(p.score)}});

    json j{{"step", r.step},
           {"prompt_in", to_json(r.prompt_in)},
           {"prompt_in_text", render(r.prompt_in)},
           {"generated_image", std::move(image)},
           {"framework", r.framework ? json(promptgen::to_string(*r.framework)) : json(nullptr)},
           {"differences", r.differences},
           {"difference_aspects", std::move(aspects)},
           {"candidates", std::move(candidates)},
           {"prompt_out", to_json(r.prompt_out)},
           {"prompt_out_text", render(r.prompt_out)},
           {"score_in", to_json(r.score_in)},
           {"score_out", to_json(r.score_out)},
           {"picks", std::move(picks)},
           {"fell_back", r.fell_back},
           {"prompt_tokens", r.prompt_tokens},
           {"wall_time", r.wall_time}};
    j["error"] = r.error ? json(*r.error) : json(nullptr);
    return j;
}

json to_json(const optimizer::RunResult& r) {
    json j{{"run_id", r.run_id},
           {"reference", {{"id", r.reference.id()}, {"width", r.reference.width()}, {"height", r.reference.height()}}},
           {"initial_prompt", to_json(r.initial_prompt)},
           {"initial_prompt_text", render(r.initial_prompt)},
           {"final_prompt", to_json(r.final_prompt)},
           {"final_prompt_text", render(r.final_prompt)},
           {"initial_score", to_json(r.initial_score)},
           {"final_score", to_json(r.final_score)},
           {"iterations", r.iterations.size()},
           {"stop_reason", optimizer::to_string(r.stop_reason)}};
    json trace = json::array();
    for (const auto& it : r.iterations) trace.push_back(it.score_out.raw_cosine());
    j["score_trace"] = std::move(trace);
    j["error"] = r.error ? json(*r.error) : json(nullptr);
    return j;
}

TagPrompt prompt_from_json(const json& j, Provenance default_provenance) {
    if (j.is_string()) return parse_tags(j.get<std::string>(), default_provenance);
    if (!j.is_array()) fail(ErrorCode::parse_failure, "prompt must be a string or an array");
    TagPrompt prompt;
    for (const auto& item : j) {
        if (item.is_string()) {
            prompt.push_back({item.get<std::string>(), default_provenance, std::nullopt});
        } else if (item.is_object() && item.contains("text") && item["text"].is_string()) {
            Fragment f{item["text"].get<std::string>(), default_provenance, std::nullopt};
            if (item.contains("provenance")) f.provenance = provenance_from_string(item["provenance"].get<std::string>());
            if (item.contains("aspect") && !item["aspect"].is_null())
                f.aspect = aspect_from_string(item["aspect"].get<std::string>());
            prompt.push_back(std::move(f));
        } else {
            fail(ErrorCode::parse_failure, "prompt fragments must be strings or {\"text\": ...} objects");
        }
    }
    return prompt;
}

optimizer::RunConfig run_config_from_json(const json& j, optimizer::RunConfig base) {
    if (!j.is_object()) fail(ErrorCode::config_invalid, "run must be an object");
    const auto key_error = [](const std::string& key, const std::string& what) {
        fail(ErrorCode::config_invalid, "run." + key + ": " + what);
    };
    const auto get_int = [&](const char* key, auto& out) {
        if (!j.contains(key)) return;
        if (!j[key].is_number_integer()) key_error(key, "expected an integer");
        out = j[key].get<std::remove_reference_t<decltype(out)>>();
    };
    static const std::set<std::string> kKnown{"max_iterations", "early_stop_patience", "framework", "seed",
                                              "image_size", "steps", "candidate_cap", "initial_prompt",
                                              "selection"};
    for (const auto& [key, _] : j.items())
        if (!kKnown.count(key)) key_error(key, "unknown key");

    get_int("max_iterations", base.max_iterations);
    get_int("early_stop_patience", base.early_stop_patience);
    get_int("seed", base.seed);
    if (j.contains("steps")) {
        int steps = 0;
        get_int("steps", steps);
        base.steps = steps;
    }
    if (j.contains("candidate_cap")) {
        if (!j["candidate_cap"].is_number_unsigned()) key_error("candidate_cap", "expected a positive integer");
        base.candidate_cap = j["candidate_cap"].get<std::size_t>();
    }
    if (j.contains("framework")) {
        if (!j["framework"].is_string()) key_error("framework", "expected a string");
        base.framework = promptgen::framework_choice_from_string(j["framework"].get<std::string>());
    }
    if (j.contains("selection")) {
        if (!j["selection"].is_string()) key_error("selection", "expected a string");
        try {
            base.selection = selection::mode_from_string(j["selection"].get<std::string>());
        } catch (const Error& e) {
            key_error("selection", e.what());
        }
    }
    if (j.contains("image_size")) {
        const auto& s = j["image_size"];
        if (s.is_number_integer()) {
            base.image_width = base.image_height = s.get<int>();
        } else if (s.is_array() && s.size() == 2 && s[0].is_number_integer() && s[1].is_number_integer()) {
            base.image_width = s[0].get<int>();
            base.image_height = s[1].get<int>();
        } else {
            key_error("image_size", "expected an integer or [width, height]");
        }
    }
    if (j.contains("initial_prompt") && !j["initial_prompt"].is_null()) {
        try {
            base.initial_prompt = prompt_from_json(j["initial_prompt"], Provenance::init);
        } catch (const Error& e) {
            key_error("initial_prompt", e.what());
        }
    }
    base.validate();
    return base;
}

}  // namespace revprompt::json
