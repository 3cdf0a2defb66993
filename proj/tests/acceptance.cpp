// Acceptance suite over the deterministic mock providers. Prints one
// PASS/FAIL line per criterion and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "revprompt/app.hpp"
#include "revprompt/editing.hpp"
#include "revprompt/evaluation.hpp"
#include "revprompt/mock.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/promptgen.hpp"
#include "revprompt/service.hpp"
#include "selection_oracle.hpp"

using namespace revprompt;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

void report(const std::string& name, bool ok, const std::string& detail) {
    std::printf("%s  %-32s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

// Runs a criterion, turning exceptions into failures and timing it.
void criterion(const std::string& name, double budget_s, const std::function<std::pair<bool, std::string>()>& body) {
    const auto t0 = Clock::now();
    std::pair<bool, std::string> r;
    try {
        r = body();
    } catch (const std::exception& e) {
        r = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    char timing[64];
    std::snprintf(timing, sizeof timing, " [%.2fs", secs);
    std::string detail = r.second + timing;
    if (budget_s > 0) {
        char b[32];
        std::snprintf(b, sizeof b, " / %.0fs]", budget_s);
        detail += b;
        if (secs >= budget_s) r.first = false;
    } else {
        detail += "]";
    }
    report(name, r.first, detail);
}

std::string fstr(const char* f, double a, double b = 0, double c = 0) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

std::vector<std::string> vocab() {
    std::vector<std::string> out;
    for (const auto& w : mock::vocabulary()) out.emplace_back(w.word);
    return out;
}

std::vector<std::string> sample(std::mt19937_64& rng, std::size_t n, const std::set<std::string>& exclude = {}) {
    std::vector<std::string> all;
    for (auto& w : vocab())
        if (!exclude.count(w)) all.push_back(w);
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(n);
    return all;
}

std::string join(const std::vector<std::string>& words) {
    std::string out;
    for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
    return out;
}

providers::ProviderSet mock_set(bool multi_image = true, int distractors = 0) {
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

std::shared_ptr<scoring::Scorer> mock_scorer() {
    return std::make_shared<scoring::Scorer>(std::make_shared<mock::TextEmbedder>(),
                                             std::make_shared<mock::ImageEmbedder>());
}

fs::path scratch(const std::string& name) {
    auto dir = fs::current_path() / "acceptance_work" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// --- planted-target suite --------------------------------------------------

struct Trial {
    ImageRef reference;
    TagPrompt init;
};

// 100 references planted with 4 vocabulary words; each initial prompt is a
// single fragment of 1-2 words disjoint from its target.
std::vector<Trial> planted_suite() {
    std::mt19937_64 rng(20240601);
    std::vector<Trial> out;
    for (int i = 0; i < 100; ++i) {
        const auto target = sample(rng, 4);
        const auto init = sample(rng, 1 + rng() % 2, {target.begin(), target.end()});
        out.push_back({mock::make_planted_image(target, i), TagPrompt::from_texts({join(init)}, Provenance::init)});
    }
    return out;
}

optimizer::RunResult run_trial(const Trial& t, selection::Mode mode, int distractors, int max_iterations = 10) {
    optimizer::Optimizer opt(mock_set(true, distractors));
    optimizer::RunConfig cfg;
    cfg.initial_prompt = t.init;
    cfg.max_iterations = max_iterations;
    cfg.selection = mode;
    return opt.run(t.reference, cfg);
}

double score_after(const optimizer::RunResult& r, std::size_t iterations) {
    if (r.iterations.empty()) return r.initial_score.raw_cosine();
    return r.iterations[std::min(iterations, r.iterations.size()) - 1].score_out.raw_cosine();
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const auto suite = planted_suite();

    criterion("greedy_oracle_equivalence", 10, [] {
        std::mt19937_64 rng(7);
        auto scorer = mock_scorer();
        const selection::PromptScorer s = [&](const ImageRef& i, const TagPrompt& p) { return scorer->clip_sim(i, p); };
        const auto words = vocab();
        auto fragment = [&] {
            std::string f;
            for (std::size_t k = 0, n = 1 + rng() % 3; k < n; ++k) f += (f.empty() ? "" : " ") + words[rng() % words.size()];
            return f;
        };
        int checked = 0, mismatched = 0;
        for (int pool = 0; pool < 200; ++pool) {
            const auto reference = mock::make_planted_image(sample(rng, 1 + rng() % 5), pool);
            std::vector<std::string> cur;
            for (std::size_t i = 0, n = rng() % 3; i < n; ++i) cur.push_back(fragment());
            const auto current = TagPrompt::from_texts(cur, Provenance::init);
            std::vector<Fragment> cands;
            for (std::size_t i = 0, n = rng() % (7 - current.size()); i < n; ++i)
                cands.push_back({fragment(), Provenance::candidate, std::nullopt});
            for (auto mode : {selection::Mode::full, selection::Mode::no_combination, selection::Mode::accept_all}) {
                ++checked;
                if (selection::greedy_select(current, cands, reference, s, mode) !=
                    testing::oracle_select(current, cands, reference, s, mode))
                    ++mismatched;
            }
        }
        return std::pair{mismatched == 0, fstr("%.0f pools x modes, %.0f mismatches", checked, mismatched)};
    });

    criterion("monotonicity", 30, [] {
        std::mt19937_64 rng(11);
        int violations = 0;
        for (int i = 0; i < 100; ++i) {
            const auto target = sample(rng, 2 + rng() % 5);
            optimizer::Optimizer opt(mock_set(i % 2 == 0, static_cast<int>(rng() % 3)));
            optimizer::RunConfig cfg;
            cfg.initial_prompt = TagPrompt::from_texts(sample(rng, 1 + rng() % 3), Provenance::init);
            cfg.seed = i;
            const auto r = opt.run(mock::make_planted_image(target, i), cfg);
            double prev = r.initial_score.raw_cosine();
            for (const auto& it : r.iterations) {
                if (it.score_out.raw_cosine() < prev - 1e-12) ++violations;
                prev = it.score_out.raw_cosine();
            }
            if (r.final_score.raw_cosine() < r.initial_score.raw_cosine() - 1e-12) ++violations;
        }
        return std::pair{violations == 0, fstr("100 runs, %.0f violations (tol 1e-12)", violations)};
    });

    std::vector<optimizer::RunResult> full_runs;
    criterion("planted_target_convergence", 60, [&] {
        int converged = 0;
        for (const auto& t : suite) {
            full_runs.push_back(run_trial(t, selection::Mode::full, 0));
            const auto& r = full_runs.back();
            if (r.final_score.raw_cosine() >= 0.95 && r.iterations.size() <= 10) ++converged;
        }
        return std::pair{converged >= 95, fstr("%.0f/100 reached >= 0.95 within 10 iterations (need 95)", converged)};
    });

    criterion("two_step_improvement", 0, [&] {
        double init = 0, two = 0;
        for (const auto& r : full_runs) {
            init += r.initial_score.raw_cosine();
            two += score_after(r, 2);
        }
        init /= static_cast<double>(full_runs.size());
        two /= static_cast<double>(full_runs.size());
        return std::pair{!full_runs.empty() && two > init, fstr("mean init %.4f -> after 2 iterations %.4f", init, two)};
    });

    criterion("ablation_direction", 0, [&] {
        bool ok = true;
        std::string detail;
        for (int distractors : {0, 1}) {
            double full = 0, no_comb = 0, all = 0;
            for (const auto& t : suite) {
                full += run_trial(t, selection::Mode::full, distractors).final_score.raw_cosine();
                no_comb += run_trial(t, selection::Mode::no_combination, distractors).final_score.raw_cosine();
                all += run_trial(t, selection::Mode::accept_all, distractors).final_score.raw_cosine();
            }
            const double n = static_cast<double>(suite.size());
            ok = ok && no_comb / n <= full / n && all / n <= full / n;
            detail += fstr("d=%.0f: ", distractors) + fstr("full %.4f no_comb %.4f accept_all %.4f; ", full / n, no_comb / n, all / n);
        }
        return std::pair{ok, detail};
    });

    criterion("scoring_arithmetic", 0, [] {
        const EmbeddingVector v({0.3, -1.2, 2.0});
        const EmbeddingVector neg({-0.3, 1.2, -2.0});
        const EmbeddingVector a({1.0, 0.0, 0.0}), b({0.0, 5.0, 0.0});
        auto scorer = mock_scorer();
        const auto target = mock::make_planted_image({"fox", "moon", "ink"});
        const double one_of_three = scorer->clip_sim(target, TagPrompt::from_texts({"fox"})).raw_cosine();
        const double two_of_three = scorer->clip_sim(target, TagPrompt::from_texts({"fox ink"})).raw_cosine();
        const double err = std::max({std::abs(scoring::cosine(v, v) - 1.0), std::abs(scoring::cosine(a, b)),
                                     std::abs(scoring::cosine(v, neg) + 1.0), std::abs(one_of_three - 1 / std::sqrt(3.0)),
                                     std::abs(two_of_three - 2 / std::sqrt(6.0))});
        return std::pair{err <= 1e-9, fstr("max abs error %.2e (tol 1e-9)", err)};
    });

    criterion("parser_corpus", 0, [] {
        const std::string example =
            "[stylized artistic rendering of a cat, exaggerated large blue eyes, light blue silky bow tie, smooth fur "
            "texture, cool tone background, serene mood, whimsical feel, illustrative and fantastical style, soft "
            "texture visual, monochromatic color scheme]";
        bool ok = promptgen::parse_candidate_list(example).size() == 10;
        ok = ok && promptgen::parse_candidate_list("Sure! Here you go: ['cat', 'dog']").size() == 2;
        ok = ok && promptgen::parse_candidate_list("```\n[\"soft light\", \"oil painting\",]\n```").size() == 2;
        ok = ok && promptgen::parse_candidate_list("“ink wash”, ‘rice paper’").size() == 2;

        std::mt19937_64 rng(5);
        const auto words = vocab();
        const std::vector<std::string> quotes{"", "'", "\"", "`"};
        int bad = 0;
        for (int c = 0; c < 50; ++c) {
            const auto& q = quotes[rng() % quotes.size()];
            std::string body;
            for (std::size_t i = 0, n = 1 + rng() % 8; i < n; ++i) {
                body += (i ? ", " : "") + q + words[rng() % words.size()] + q;
                if (rng() % 5 == 0) body += ", " + q + q;
            }
            for (const auto& f : promptgen::parse_candidate_list((rng() % 2 ? "Here:\n[" : "[") + body + "]")) {
                if (f.empty() || f.front() == '\'' || f.front() == '"' || f.front() == '`' || f.back() == '\'' ||
                    f.back() == '"' || f.back() == '`')
                    ++bad;
            }
        }
        return std::pair{ok && bad == 0, fstr("example -> 10 fragments; fuzz 50 cases, %.0f bad fragments", bad)};
    });

    criterion("evaluation_determinism", 0, [] {
        const auto dir = scratch("eval");
        nlohmann::json entries = nlohmann::json::array();
        for (const auto& [id, words] : std::vector<std::pair<std::string, std::vector<std::string>>>{
                 {"fox", {"fox", "moon", "ink"}}, {"cat", {"cat", "blue", "bow"}}, {"boat", {"boat", "lake", "sky"}}}) {
            const auto bytes = mock::make_planted_image(words, 0, 64, 64).bytes();
            std::ofstream(dir / (id + ".png"), std::ios::binary)
                .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            entries.push_back({{"id", id}, {"image", id + ".png"}});
        }
        std::ofstream(dir / "manifest.json") << nlohmann::json{{"entries", entries}}.dump();
        const auto manifest = evaluation::DatasetManifest::load(dir / "manifest.json");

        std::vector<std::string> reports;
        double max_seed_variance = 0;
        for (int pass = 0; pass < 2; ++pass) {
            auto cfg = config::AppConfig::mock();
            cfg.evaluation.eval.seeds = {0, 1, 2};
            const auto rt = config::build_runtime(cfg);
            const auto report = app::evaluate(cfg, rt, manifest, "arpo");
            evaluation::write_report(report, dir / ("out" + std::to_string(pass)));
            reports.push_back(slurp(dir / ("out" + std::to_string(pass)) / "report.json"));
            for (const auto& [name, m] : nlohmann::json::parse(reports.back())["aggregate"].items())
                if (m.contains("seed_variance")) max_seed_variance = std::max(max_seed_variance, m["seed_variance"].get<double>());
        }

        // Hand case: cosines 0.8 and 0.6 over two seeds.
        struct SeedGen final : providers::ImageGenerator {
            ImageRef generate(const providers::GenerationRequest& r) override {
                return mock::make_planted_image({"cat"}, r.seed);
            }
        };
        struct SeedEmb final : providers::ImageEmbedder {
            EmbeddingVector embed_image(const ImageRef& image) override {
                if (!image.seed()) return EmbeddingVector({1.0, 0.0}, true);
                return *image.seed() == 0 ? EmbeddingVector({0.8, 0.6}) : EmbeddingVector({0.6, 0.8});
            }
            std::size_t dimension() const override { return 2; }
        };
        SeedGen gen;
        scoring::EmbeddingCache cache;
        const std::vector<evaluation::Extractor> ex{{"clip", std::make_shared<SeedEmb>()}};
        const std::vector<std::int64_t> seeds{0, 1};
        const auto hand = evaluation::image_fidelity(TagPrompt::from_texts({"cat"}),
                                                     ImageRef(mock::make_planted_image({"dog"}).bytes()), seeds, gen,
                                                     ex, cache)
                              .at("clip")
                              .summary;
        const bool ok = reports[0] == reports[1] && max_seed_variance == 0.0 &&
                        std::abs(hand.mean - 70.0) <= 1e-9 && std::abs(hand.variance - 100.0) <= 1e-9;
        return std::pair{ok, std::string(reports[0] == reports[1] ? "reports identical" : "reports differ") +
                                 fstr(", seed variance %.1f, hand case mean %.6f var %.6f", max_seed_variance,
                                     hand.mean, hand.variance)};
    });

    criterion("editing_invariants", 0, [] {
        mock::ChatModel llm;
        std::mt19937_64 rng(3);
        int broken = 0;
        for (int i = 0; i < 100; ++i) {
            std::vector<std::string> texts;
            for (std::size_t k = 0, n = 1 + rng() % 6; k < n; ++k) texts.push_back(join(sample(rng, 1 + rng() % 3)));
            const auto p = TagPrompt::from_texts(texts);
            const auto c = editing::classify(p, llm);
            std::multiset<std::string> seen;
            for (const auto& f : c.content) seen.insert(dedupe_key(f.text));
            for (const auto& f : c.style) seen.insert(dedupe_key(f.text));
            std::multiset<std::string> want;
            for (const auto& f : p.fragments()) want.insert(dedupe_key(f.text));
            if (seen != want) ++broken;
        }
        const auto modified = editing::modify(TagPrompt::from_texts({"imaginative landscape"}), "landscape", "cityscape");
        editing::ClassifiedPrompt style, content;
        style.style = {{"ink painting", Provenance::init, Aspect::style}, {"a red fox", Provenance::init, Aspect::style}};
        content.content = {{"A Red Fox", Provenance::init, Aspect::content}};
        const auto fused = editing::fuse(style, content);
        const bool ok = broken == 0 && modified.texts() == std::vector<std::string>{"imaginative cityscape"} &&
                        fused.texts() == std::vector<std::string>{"A Red Fox", "ink painting"};
        return std::pair{ok, fstr("%.0f/100 classifications not a partition; modify -> '", broken) + render(modified) +
                                 "'; fuse -> '" + render(fused) + "'"};
    });

    criterion("service_contract", 0, [] {
        auto cfg = config::AppConfig::mock();
        cfg.service.store = scratch("service");
        service::Service svc(cfg);
        const int port = svc.start_background();
        httplib::Client client("127.0.0.1", port);
        const auto ref = base64_encode(mock::make_planted_image({"fox", "moon", "ink", "lake"}).bytes());
        auto res = client.Post("/runs", nlohmann::json{{"reference", ref}, {"run", {{"initial_prompt", "tree"}}}}.dump(),
                               "application/json");
        if (!res || res->status != 202) return std::pair{false, std::string("POST /runs failed")};
        const std::string id = nlohmann::json::parse(res->body)["run_id"];

        std::vector<nlohmann::json> pages;
        std::size_t since = 0;
        std::string status;
        for (int i = 0; i < 2000 && status != "done" && status != "failed"; ++i) {
            auto page = client.Get("/runs/" + id + "/iterations?since=" + std::to_string(since));
            if (!page || page->status != 200) return std::pair{false, std::string("pagination request failed")};
            const auto j = nlohmann::json::parse(page->body);
            status = j["status"];
            for (const auto& rec : j["iterations"]) pages.push_back(rec);
            since = j["next"];
            if (status != "done" && status != "failed") std::this_thread::sleep_for(std::chrono::milliseconds(2));
        }
        // One more page after completion so nothing written late is missed.
        const auto tail = nlohmann::json::parse(client.Get("/runs/" + id + "/iterations?since=" + std::to_string(since))->body);
        for (const auto& rec : tail["iterations"]) pages.push_back(rec);
        svc.stop();
        const auto stored = svc.store().read_iterations(id);
        const bool ok = status == "done" && !pages.empty() && pages == stored;
        return std::pair{ok, "status " + status + fstr(", %.0f paged records vs %.0f in iterations.jsonl",
                                                      static_cast<double>(pages.size()),
                                                      static_cast<double>(stored.size()))};
    });

    std::printf("%s\n", failures == 0 ? "ALL PASS" : "SOME FAILED");
    return failures == 0 ? 0 : 1;
}
