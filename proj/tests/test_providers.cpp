#include <cmath>
#include <set>

#include "revprompt/mock.hpp"
#include "revprompt/providers.hpp"
#include "revprompt/scoring.hpp"
#include "revprompt/templates.hpp"
#include "support.hpp"

using namespace revprompt;
using providers::ChatTurn;

namespace {

std::string ask(providers::ChatModel& m, std::string text, std::vector<ImageRef> images = {}) {
    const ChatTurn turn{ChatTurn::Speaker::user, std::move(text), std::move(images)};
    return m.chat(std::span<const ChatTurn>(&turn, 1));
}

}  // namespace

TEST_CASE("mock vocabulary is 64 distinct words, 32 content then 32 style") {
    const auto& v = mock::vocabulary();
    std::set<std::string_view> seen;
    for (std::size_t i = 0; i < v.size(); ++i) {
        CHECK(seen.insert(v[i].word).second);
        CHECK(v[i].word_class == (i < 32 ? mock::WordClass::content : mock::WordClass::style));
        CHECK(mock::vocabulary_index(v[i].word) == i);
    }
    CHECK_FALSE(mock::vocabulary_index("zebra"));
    CHECK(mock::vocabulary_words("A Cat, a CAT and a blue-bow tie!") ==
          std::vector<std::string>{"cat", "blue", "bow", "tie"});
}

TEST_CASE("mock caption joins planted words") {
    mock::Captioner c;
    CHECK(c.caption(mock::make_planted_image({"cat", "blue"})) == "cat blue");
    CHECK(c.caption(mock::make_planted_image(std::vector<std::string>{})) == "an untitled image");
}

TEST_CASE("mock image generation is deterministic and plants the prompt's words") {
    mock::ImageGenerator g;
    const providers::GenerationRequest req{"a cat", 1, 512, 512, std::nullopt};
    const auto a = g.generate(req);
    const auto b = g.generate(req);
    CHECK(a.id() == b.id());
    CHECK(a.seed() == 1);
    CHECK(a.width() == 512);
    CHECK(mock::planted_words(a) == std::vector<std::string>{"cat"});
    CHECK(g.generate({"a cat", 2, 512, 512, std::nullopt}).id() != a.id());
    CHECK_THROWS_AS(g.generate({"", 1, 512, 512, std::nullopt}), Error);
    try {
        g.generate({"cat", 1, 0, 512, std::nullopt});
        FAIL("expected invalid_size");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_size);
    }
}

TEST_CASE("mock chat: canned reply and multi-image gate") {
    mock::ChatModel m(true);
    CHECK(ask(m, "say ok") == "ok");
    CHECK(m.calls() == 1);

    mock::ChatModel single(false);
    const auto img = mock::make_planted_image({"cat"});
    try {
        ask(single, "compare", {img, img});
        FAIL("expected unsupported_multi_image");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unsupported_multi_image);
    }
    CHECK(ask(single, "say ok", {img}) == "ok");
    CHECK_THROWS_AS(m.chat({}), Error);
}

TEST_CASE("mock chat answers the shipped templates from planted words") {
    const auto t = TemplateSet::defaults();
    mock::ChatModel m;
    const auto ref = mock::make_planted_image({"cat", "blue", "bow"});
    const auto gen = mock::make_planted_image({"cat", "dog"});

    const auto diff = ask(m, t.compare_difference.text(), {ref, gen});
    CHECK(diff == "Image 1 contains blue, bow which Image 2 lacks. Image 2 contains dog which Image 1 lacks.");
    CHECK(ask(m, t.compare_difference.text(), {ref, ref}) == mock::kNoDifferences);

    CHECK(ask(m, t.describe_content.text(), {ref}) == "cat blue bow");
    CHECK(ask(m, t.describe_style.text(), {ref}) == mock::kStyleSentence);

    const auto cands = ask(m, t.generate_candidates.instantiate({{"difference", diff}}));
    CHECK(cands == "['blue', 'bow']");
    CHECK(ask(m, t.generate_candidates.instantiate({{"difference", std::string(mock::kNoDifferences)}})) == "[]");

    const auto desc = ask(m, t.compare_descriptions.instantiate({{"image1", "cat blue"}, {"image2", "cat"}}));
    CHECK(desc == "Image 1 contains blue which Image 2 lacks.");
}

TEST_CASE("mock distractors add deterministic off-target words") {
    const auto t = TemplateSet::defaults();
    providers::MockOptions opts;
    opts.distractors = 2;
    mock::ChatModel m(true, opts);
    const auto prompt = t.generate_candidates.instantiate({{"difference", "Image 1 contains blue which Image 2 lacks."}});
    const auto a = ask(m, prompt);
    CHECK(a == ask(m, prompt));
    const auto words = mock::vocabulary_words(a);
    REQUIRE(words.size() == 3);
    CHECK(words[0] == "blue");
}

TEST_CASE("mock embeddings are normalized indicators") {
    mock::TextEmbedder te;
    mock::ImageEmbedder ie;
    const auto t = te.embed_text("cat");
    CHECK(t.dimension() == mock::kDimension);
    CHECK(t.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.values()[*mock::vocabulary_index("cat")] == doctest::Approx(1.0));

    const auto i = ie.embed_image(mock::make_planted_image({"cat", "blue", "bow"}));
    for (const char* w : {"cat", "blue", "bow"})
        CHECK(i.values()[*mock::vocabulary_index(w)] == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(i.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // No vocabulary word: the spare dimension keeps the vector unit-norm.
    CHECK(te.embed_text("zebra crossing").norm() == doctest::Approx(1.0));
    CHECK_THROWS_AS(te.embed_text(""), Error);
}

TEST_CASE("mock text embedder truncates long input with a warning") {
    mock::TextEmbedder te;
    std::string text;
    for (int i = 0; i < 1000; ++i) text += "cat ";
    text += "dog";
    const auto v = te.embed_text(text);
    CHECK(te.truncation_warnings() == 1);
    CHECK(v.values()[*mock::vocabulary_index("dog")] == 0.0);  // beyond the window
}

TEST_CASE("corrupt image bytes are a backend error") {
    mock::ImageEmbedder ie;
    ImageRef bad(Bytes{0x89, 'P', 'N', 'G', 0, 0});
    try {
        ie.embed_image(bad);
        FAIL("expected backend_error");
    } catch (const BackendError& e) {
        CHECK(e.code() == ErrorCode::backend_error);
        CHECK(e.status() == 400);
    }
}

TEST_CASE("mock operations are pure") {
    auto set = testing::mock_set();
    const auto img = mock::make_planted_image({"fox", "moon", "ink"}, 5);
    CHECK(set.caption->caption(img) == set.caption->caption(img));
    CHECK(set.image_embedding->embed_image(img) == set.image_embedding->embed_image(img));
    CHECK(set.text_embedding->embed_text("fox moon") == set.text_embedding->embed_text("fox moon"));
}

TEST_CASE("provider profiles validate") {
    providers::ProviderProfile p;
    p.role = providers::Role::llm;
    CHECK_NOTHROW(p.validate());
    p.timeout = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p.timeout = 1;
    p.max_retries = -1;
    CHECK_THROWS_AS(p.validate(), Error);
    p.max_retries = 0;
    p.kind = "http";
    CHECK_THROWS_AS(p.validate(), Error);  // no endpoint
    p.kind = "grpc";
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("role names round-trip") {
    using providers::Role;
    for (auto r : {Role::caption, Role::text_to_image, Role::vlm, Role::llm, Role::text_embedding,
                   Role::image_embedding})
        CHECK(providers::role_from_string(providers::to_string(r)) == r);
    CHECK_THROWS_AS(providers::role_from_string("painter"), Error);
}

TEST_CASE("provider set: missing role and paired dimension mismatch") {
    using providers::Role;
    std::map<Role, providers::ProviderProfile> profiles;
    for (auto r : {Role::caption, Role::text_to_image, Role::vlm, Role::llm, Role::text_embedding,
                   Role::image_embedding}) {
        profiles[r].role = r;
    }
    CHECK_NOTHROW(providers::make_provider_set(profiles));

    auto missing = profiles;
    missing.erase(Role::vlm);
    try {
        providers::make_provider_set(missing);
        FAIL("expected config_invalid");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::config_invalid);
        CHECK(std::string(e.what()).find("providers.vlm") != std::string::npos);
    }

    auto mismatched = profiles;
    for (auto [role, dim] : {std::pair{Role::text_embedding, 768}, std::pair{Role::image_embedding, 512}}) {
        auto& p = mismatched[role];
        p.kind = "http";
        p.endpoint = "http://127.0.0.1:1/embed";
        p.dimension = static_cast<std::size_t>(dim);
    }
    try {
        providers::make_provider_set(mismatched);
        FAIL("expected dimension_mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::dimension_mismatch);
    }
}

TEST_CASE("scorer refuses mismatched embedders") {
    class Small final : public providers::ImageEmbedder {
    public:
        EmbeddingVector embed_image(const ImageRef&) override { return EmbeddingVector::normalized_from({1, 0}); }
        std::size_t dimension() const override { return 2; }
    };
    CHECK_THROWS_AS(scoring::Scorer(std::make_shared<mock::TextEmbedder>(), std::make_shared<Small>()), Error);
}
