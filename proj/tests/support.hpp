#pragma once

// Shared fixtures for the unit tests: mock provider sets, a scorer over the
// mock embedders and scratch directories.

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "revprompt/mock.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/scoring.hpp"

namespace testing {

inline revprompt::providers::ProviderSet mock_set(bool multi_image = true, int distractors = 0) {
    using namespace revprompt;
    providers::MockOptions opts;
    opts.distractors = distractors;
    providers::ProviderSet set;
    set.caption = std::make_shared<mock::Captioner>();
    set.text_to_image = std::make_shared<mock::ImageGenerator>();
    set.vlm = std::make_shared<mock::ChatModel>(multi_image, opts);
    set.llm = std::make_shared<mock::ChatModel>(true, opts);
    set.text_embedding = std::make_shared<mock::TextEmbedder>();
    set.image_embedding = std::make_shared<mock::ImageEmbedder>();
    return set;
}

inline std::shared_ptr<revprompt::scoring::Scorer> mock_scorer() {
    using namespace revprompt;
    return std::make_shared<scoring::Scorer>(std::make_shared<mock::TextEmbedder>(),
                                             std::make_shared<mock::ImageEmbedder>());
}

/// Fresh directory under the test's working directory.
inline std::filesystem::path scratch(const std::string& name) {
    static std::atomic<int> counter{0};
    auto dir = std::filesystem::current_path() / "scratch" / (name + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<std::string> vocab_words() {
    std::vector<std::string> out;
    for (const auto& w : revprompt::mock::vocabulary()) out.emplace_back(w.word);
    return out;
}

/// `n` distinct vocabulary words.
inline std::vector<std::string> sample_words(std::mt19937_64& rng, std::size_t n) {
    auto all = vocab_words();
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(n);
    return all;
}

}  // namespace testing
