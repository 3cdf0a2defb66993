#include <cstdio>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "revprompt/app.hpp"
#include "revprompt/config.hpp"
#include "revprompt/editing.hpp"
#include "revprompt/mock.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/promptgen.hpp"
#include "revprompt/scoring.hpp"
#include "revprompt/selection.hpp"
#include "revprompt/serialization.hpp"

namespace py = pybind11;
using namespace revprompt;

namespace {

ImageRef image_from(const py::bytes& data) {
    const std::string s = data;
    return ImageRef(Bytes(s.begin(), s.end()));
}

py::bytes to_bytes(const ImageRef& image) {
    const auto& b = image.bytes();
    return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

config::AppConfig config_from(const std::string& config_json) {
    if (config_json.empty()) return config::AppConfig::mock();
    return config::AppConfig::from_json(nlohmann::json::parse(config_json));
}

}  // namespace

PYBIND11_MODULE(_revprompt, m) {
    m.doc() = "Reverse-prompt engine: recover a text-to-image prompt from a reference image.";

    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

    m.def("parse_tags", [](const std::string& text) { return parse_tags(text).texts(); });
    m.def("render", [](const std::vector<std::string>& tags) {
        return render(TagPrompt::from_texts(std::span<const std::string>(tags)));
    });
    m.def("parse_candidate_list", [](const std::string& text) { return promptgen::parse_candidate_list(text); });
    m.def("cosine", [](const std::vector<double>& u, const std::vector<double>& v) {
        return scoring::cosine(EmbeddingVector(u), EmbeddingVector(v));
    });

    m.def("vocabulary", [] {
        std::vector<std::string> words;
        for (const auto& w : mock::vocabulary()) words.emplace_back(w.word);
        return words;
    });
    m.def(
        "planted_image",
        [](const std::vector<std::string>& words, std::int64_t seed, int width, int height) {
            return to_bytes(mock::make_planted_image(words, seed, width, height));
        },
        py::arg("words"), py::arg("seed") = 0, py::arg("width") = 64, py::arg("height") = 64);
    m.def("planted_words", [](const py::bytes& png) { return mock::planted_words(image_from(png)); });
    m.def("mock_clip_sim", [](const py::bytes& png, const std::vector<std::string>& prompt) {
        scoring::Scorer scorer(std::make_shared<mock::TextEmbedder>(), std::make_shared<mock::ImageEmbedder>());
        return scorer.clip_sim(image_from(png), TagPrompt::from_texts(std::span<const std::string>(prompt))).raw_cosine();
    });
    m.def(
        "mock_greedy_select",
        [](const std::vector<std::string>& current, const std::vector<std::string>& candidates,
           const py::bytes& reference, const std::string& mode) {
            scoring::Scorer scorer(std::make_shared<mock::TextEmbedder>(), std::make_shared<mock::ImageEmbedder>());
            const auto out = selection::greedy_select(
                TagPrompt::from_texts(std::span<const std::string>(current)), std::span<const std::string>(candidates),
                image_from(reference),
                [&](const ImageRef& i, const TagPrompt& p) { return scorer.clip_sim(i, p); },
                selection::mode_from_string(mode));
            return revprompt::json::to_json(out).dump();
        },
        py::arg("current"), py::arg("candidates"), py::arg("reference"), py::arg("mode") = "full");

    m.def(
        "run_json",
        [](const py::bytes& reference, const std::string& config_json, const std::string& run_json) {
            const auto cfg = config_from(config_json);
            auto run = cfg.run;
            if (!run_json.empty()) run = revprompt::json::run_config_from_json(nlohmann::json::parse(run_json), run);
            optimizer::RunResult result;
            {
                py::gil_scoped_release release;
                auto rt = config::build_runtime(cfg);
                optimizer::Optimizer opt(rt.providers, cfg.templates, rt.cache);
                result = opt.run(image_from(reference), run);
            }
            auto j = revprompt::json::to_json(result);
            nlohmann::json its = nlohmann::json::array();
            for (const auto& r : result.iterations) its.push_back(revprompt::json::to_json(r));
            j["records"] = std::move(its);
            return j.dump();
        },
        py::arg("reference"), py::arg("config_json") = "", py::arg("run_json") = "");

    m.def(
        "classify_json",
        [](const std::vector<std::string>& prompt, const std::string& config_json) {
            const auto cfg = config_from(config_json);
            auto rt = config::build_runtime(cfg);
            const auto c = editing::classify(TagPrompt::from_texts(std::span<const std::string>(prompt), Provenance::user_edit),
                                             *rt.providers.llm, cfg.templates);
            return editing::to_json(c).dump();
        },
        py::arg("prompt"), py::arg("config_json") = "");
    m.def("modify", [](const std::vector<std::string>& prompt, const std::string& find, const std::string& replace) {
        return editing::modify(TagPrompt::from_texts(std::span<const std::string>(prompt)), find, replace).texts();
    });

    m.def("cli", [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"revprompt"};
        for (const auto& a : args) argv.push_back(a.c_str());
        py::gil_scoped_release release;
        const int code = app::run_cli(static_cast<int>(argv.size()), argv.data());
        std::fflush(stdout);  // C stdio output would otherwise trail Python's
        return code;
    });

#ifdef VERSION_INFO
    m.attr("__version__") = VERSION_INFO;
#else
    m.attr("__version__") = "dev";
#endif
}
