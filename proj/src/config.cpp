#include "revprompt/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "revprompt/serialization.hpp"

namespace revprompt::config {

namespace fs = std::filesystem;
using nlohmann::json;
using providers::ProviderProfile;
using providers::Role;

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& what) {
    fail(ErrorCode::config_invalid, key + ": " + what);
}

json scalar_to_json(const YAML::Node& node) {
    const auto& s = node.Scalar();
    if (node.Tag() == "!") return s;  // quoted
    if (s == "null" || s == "~" || s.empty()) return nullptr;
    if (s == "true" || s == "True") return true;
    if (s == "false" || s == "False") return false;
    try {
        std::size_t used = 0;
        const long long i = std::stoll(s, &used);
        if (used == s.size()) return i;
    } catch (const std::exception&) {
    }
    try {
        std::size_t used = 0;
        const double d = std::stod(s, &used);
        if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
    return s;
}

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
        case YAML::NodeType::Null:
        case YAML::NodeType::Undefined:
            return nullptr;
        case YAML::NodeType::Scalar:
            return scalar_to_json(node);
        case YAML::NodeType::Sequence: {
            json arr = json::array();
            for (const auto& item : node) arr.push_back(yaml_to_json(item));
            return arr;
        }
        case YAML::NodeType::Map: {
            json obj = json::object();
            for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
            return obj;
        }
    }
    return nullptr;
}

void check_keys(const json& j, const std::string& key, const std::set<std::string>& known) {
    if (!j.is_object()) bad(key, "expected a mapping");
    for (const auto& [k, _] : j.items())
        if (!known.count(k)) bad(key + "." + k, "unknown key");
}

template <class T>
T get_number(const json& j, const std::string& key) {
    if constexpr (std::is_integral_v<T>) {
        if (!j.is_number_integer()) bad(key, "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
            if (j.get<long long>() < 0) bad(key, "expected a non-negative integer");
    } else {
        if (!j.is_number()) bad(key, "expected a number");
    }
    return j.get<T>();
}

std::string get_string(const json& j, const std::string& key) {
    if (!j.is_string()) bad(key, "expected a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& key) {
    if (!j.is_boolean()) bad(key, "expected true or false");
    return j.get<bool>();
}

// Wraps a lower-level config error so the message leads with `key`.
template <class F>
auto keyed(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        const std::string what = e.what();
        if (what.rfind(key, 0) == 0) throw;
        bad(key, what);
    }
}

TemplateSet templates_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) bad("templates", "expected a mapping");
    std::map<std::string, std::string> overrides;
    for (const auto& [name, value] : j.items()) {
        if (name == "file") {
            fs::path p = get_string(value, "templates.file");
            if (p.is_relative()) p = base_dir / p;
            for (auto& [n, t] : TemplateSet::read_override_file(p.string())) overrides[n] = t;
        } else {
            overrides[name] = get_string(value, "templates." + name);
        }
    }
    return TemplateSet::defaults().with_overrides(overrides);
}

}  // namespace

json parse_document(const std::string& text, bool yaml) {
    if (!yaml) {
        try {
            return json::parse(text);
        } catch (const json::exception& e) {
            fail(ErrorCode::config_invalid, std::string("config is not valid JSON: ") + e.what());
        }
    }
    try {
        return yaml_to_json(YAML::Load(text));
    } catch (const YAML::Exception& e) {
        fail(ErrorCode::config_invalid, std::string("config is not valid YAML: ") + e.what());
    }
}

ProviderProfile profile_from_json(const json& j, Role role, const std::string& key, const ProviderProfile& base) {
    check_keys(j, key,
               {"kind", "endpoint", "model_name", "auth_env", "timeout", "max_retries", "retry_backoff", "temperature",
                "multi_image", "dimension", "max_tokens", "mock"});
    ProviderProfile p = base;
    p.role = role;
    p.key = key;
    for (const auto& [k, v] : j.items()) {
        const auto sub = key + "." + k;
        if (k == "kind") p.kind = get_string(v, sub);
        else if (k == "endpoint") p.endpoint = get_string(v, sub);
        else if (k == "model_name") p.model_name = get_string(v, sub);
        else if (k == "auth_env") p.auth_env = get_string(v, sub);
        else if (k == "timeout") p.timeout = get_number<double>(v, sub);
        else if (k == "max_retries") p.max_retries = get_number<int>(v, sub);
        else if (k == "retry_backoff") p.retry_backoff = get_number<double>(v, sub);
        else if (k == "temperature") {
            if (role != Role::llm && role != Role::vlm) bad(sub, "only applies to llm and vlm");
            p.temperature = get_number<double>(v, sub);
        } else if (k == "multi_image") p.multi_image = get_bool(v, sub);
        else if (k == "dimension") p.dimension = get_number<std::size_t>(v, sub);
        else if (k == "max_tokens") p.max_tokens = get_number<std::size_t>(v, sub);
        else if (k == "mock") {
            check_keys(v, sub, {"distractors", "canned_reply"});
            if (v.contains("distractors")) p.mock.distractors = get_number<int>(v["distractors"], sub + ".distractors");
            if (v.contains("canned_reply"))
                p.mock.canned_reply = get_string(v["canned_reply"], sub + ".canned_reply");
        }
    }
    p.validate();
    return p;
}

AppConfig AppConfig::mock() {
    AppConfig cfg;
    for (auto role : {Role::caption, Role::text_to_image, Role::vlm, Role::llm, Role::text_embedding,
                      Role::image_embedding}) {
        ProviderProfile p;
        p.role = role;
        cfg.providers[role] = p;
    }
    return cfg;
}

AppConfig AppConfig::load(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::config_invalid, "cannot read config file '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const auto ext = path.extension().string();
    const bool yaml = ext != ".json";
    return from_json(parse_document(buf.str(), yaml), path.parent_path());
}

AppConfig AppConfig::from_json(const json& doc, const fs::path& base_dir) {
    if (doc.is_null()) return AppConfig{};
    check_keys(doc, "config", {"providers", "run", "evaluation", "templates", "cache", "service"});
    AppConfig cfg;

    if (doc.contains("providers")) {
        const auto& ps = doc["providers"];
        if (!ps.is_object()) bad("providers", "expected a mapping");
        ProviderProfile base;
        if (ps.contains("default")) base = profile_from_json(ps["default"], Role::llm, "providers.default");
        for (const auto& [name, value] : ps.items()) {
            if (name == "default") continue;
            const auto key = "providers." + name;
            Role role;
            try {
                role = providers::role_from_string(name);
            } catch (const Error&) {
                bad(key, "unknown provider role");
            }
            cfg.providers[role] = profile_from_json(value, role, key, base);
        }
        if (ps.contains("default")) {
            for (auto role : {Role::caption, Role::text_to_image, Role::vlm, Role::llm, Role::text_embedding,
                              Role::image_embedding}) {
                if (cfg.providers.count(role)) continue;
                auto p = base;
                p.role = role;
                p.key.clear();
                p.temperature = (role == Role::llm || role == Role::vlm) ? base.temperature : std::nullopt;
                p.validate();
                cfg.providers[role] = p;
            }
        }
    }

    if (doc.contains("run")) cfg.run = revprompt::json::run_config_from_json(doc["run"], cfg.run);

    if (doc.contains("evaluation")) {
        const auto& ev = doc["evaluation"];
        check_keys(ev, "evaluation",
                   {"seeds", "parallelism", "image_size", "steps", "extractors", "generation", "optimization_profile",
                    "generation_profile"});
        auto& e = cfg.evaluation.eval;
        if (ev.contains("seeds")) {
            const auto& s = ev["seeds"];
            if (!s.is_array() || s.empty()) bad("evaluation.seeds", "expected a non-empty list of integers");
            e.seeds.clear();
            for (const auto& x : s) e.seeds.push_back(get_number<std::int64_t>(x, "evaluation.seeds"));
        }
        if (ev.contains("parallelism")) {
            e.parallelism = get_number<std::size_t>(ev["parallelism"], "evaluation.parallelism");
            if (e.parallelism == 0) bad("evaluation.parallelism", "must be at least 1");
        }
        if (ev.contains("image_size")) {
            const auto& s = ev["image_size"];
            if (s.is_number_integer()) {
                e.image_width = e.image_height = s.get<int>();
            } else if (s.is_array() && s.size() == 2) {
                e.image_width = get_number<int>(s[0], "evaluation.image_size");
                e.image_height = get_number<int>(s[1], "evaluation.image_size");
            } else {
                bad("evaluation.image_size", "expected an integer or [width, height]");
            }
            if (e.image_width <= 0 || e.image_height <= 0) bad("evaluation.image_size", "must be positive");
        }
        if (ev.contains("steps")) e.steps = get_number<int>(ev["steps"], "evaluation.steps");
        if (ev.contains("optimization_profile"))
            e.optimization_profile = get_string(ev["optimization_profile"], "evaluation.optimization_profile");
        if (ev.contains("generation_profile"))
            e.generation_profile = get_string(ev["generation_profile"], "evaluation.generation_profile");
        if (ev.contains("generation"))
            cfg.evaluation.generation =
                profile_from_json(ev["generation"], Role::text_to_image, "evaluation.generation");
        if (ev.contains("extractors")) {
            const auto& xs = ev["extractors"];
            if (!xs.is_object()) bad("evaluation.extractors", "expected a mapping of name to profile");
            // json objects iterate in key order; keep the conventional column order first.
            std::vector<std::string> names;
            for (const char* n : {"clip", "dino", "vit"})
                if (xs.contains(n)) names.push_back(n);
            for (const auto& [n, _] : xs.items())
                if (n != "clip" && n != "dino" && n != "vit") names.push_back(n);
            for (const auto& n : names) {
                const auto key = "evaluation.extractors." + n;
                const auto& v = xs[n];
                ProviderProfile p;
                if (v.is_string()) {
                    if (v.get<std::string>() != "image_embedding")
                        bad(key, "a string value must be 'image_embedding'");
                    auto it = cfg.providers.find(Role::image_embedding);
                    if (it != cfg.providers.end()) p = it->second;
                    p.key = key;
                } else {
                    p = profile_from_json(v, Role::image_embedding, key);
                }
                cfg.evaluation.extractors.emplace_back(n, p);
            }
        }
        if (e.generation_profile == "default") {
            const auto& gen = cfg.evaluation.generation ? *cfg.evaluation.generation
                                                        : (cfg.providers.count(Role::text_to_image)
                                                               ? cfg.providers.at(Role::text_to_image)
                                                               : ProviderProfile{});
            if (!gen.model_name.empty()) e.generation_profile = gen.model_name;
        }
    }

    if (doc.contains("templates")) cfg.templates = keyed("templates", [&] { return templates_from_json(doc["templates"], base_dir); });

    if (doc.contains("cache")) {
        const auto& c = doc["cache"];
        check_keys(c, "cache", {"capacity", "path"});
        if (c.contains("capacity")) {
            cfg.cache.capacity = get_number<std::size_t>(c["capacity"], "cache.capacity");
            if (cfg.cache.capacity == 0) bad("cache.capacity", "must be positive");
        }
        if (c.contains("path") && !c["path"].is_null()) {
            fs::path p = get_string(c["path"], "cache.path");
            cfg.cache.path = p.is_relative() ? base_dir / p : p;
        }
    }

    if (doc.contains("service")) {
        const auto& s = doc["service"];
        check_keys(s, "service", {"max_concurrent_runs", "store"});
        if (s.contains("max_concurrent_runs")) {
            cfg.service.max_concurrent_runs = get_number<std::size_t>(s["max_concurrent_runs"], "service.max_concurrent_runs");
            if (cfg.service.max_concurrent_runs == 0) bad("service.max_concurrent_runs", "must be at least 1");
        }
        if (s.contains("store")) cfg.service.store = get_string(s["store"], "service.store");
    }
    return cfg;
}

Runtime build_runtime(const AppConfig& cfg) {
    Runtime rt;
    rt.providers = providers::make_provider_set(cfg.providers);
    rt.cache = std::make_shared<scoring::EmbeddingCache>(cfg.cache.capacity);
    if (cfg.cache.path && fs::exists(*cfg.cache.path)) rt.cache->load(cfg.cache.path->string());
    rt.eval_generator = cfg.evaluation.generation ? providers::make_image_generator(*cfg.evaluation.generation)
                                                  : rt.providers.text_to_image;
    if (cfg.evaluation.extractors.empty()) {
        rt.extractors.push_back({"clip", rt.providers.image_embedding});
    } else {
        for (const auto& [name, profile] : cfg.evaluation.extractors)
            rt.extractors.push_back({name, providers::make_image_embedder(profile)});
    }
    return rt;
}

}  // namespace revprompt::config
