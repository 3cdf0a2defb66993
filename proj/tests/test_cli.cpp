#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "revprompt/app.hpp"
#include "support.hpp"

using namespace revprompt;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = -1;
    std::string out;
};

// Runs the CLI in-process with stdout redirected to a file.
Outcome cli(std::vector<std::string> args) {
    args.insert(args.begin(), "revprompt");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());

    const auto capture = testing::scratch("stdout") / "out.txt";
    std::fflush(stdout);
    const int saved = ::dup(STDOUT_FILENO);
    FILE* f = std::fopen(capture.c_str(), "w");
    ::dup2(::fileno(f), STDOUT_FILENO);
    Outcome o;
    o.code = app::run_cli(static_cast<int>(argv.size()), argv.data());
    std::fflush(stdout);
    ::dup2(saved, STDOUT_FILENO);
    ::close(saved);
    std::fclose(f);

    std::ifstream in(capture);
    std::stringstream ss;
    ss << in.rdbuf();
    o.out = ss.str();
    return o;
}

fs::path write_png(const fs::path& dir, const std::string& name, const std::vector<std::string>& words) {
    const auto bytes = mock::make_planted_image(words, 0, 64, 64).bytes();
    std::ofstream(dir / name, std::ios::binary)
        .write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    return dir / name;
}

}  // namespace

TEST_CASE("run on a mock reference exits 0 and writes a run directory") {
    const auto dir = testing::scratch("cli_run");
    const auto ref = write_png(dir, "ref.png", {"cat", "blue", "bow", "tie"});
    const auto o = cli({"--out", (dir / "runs").string(), "run", ref.string(), "--init", "dog", "--seed", "3"});
    CHECK(o.code == 0);
    CHECK(o.out.find("score: 100.00") != std::string::npos);
    std::size_t runs = 0;
    for (const auto& e : fs::directory_iterator(dir / "runs")) {
        ++runs;
        CHECK(fs::exists(e.path() / "final.json"));
        CHECK(fs::exists(e.path() / "iterations.jsonl"));
    }
    CHECK(runs == 1);
}

TEST_CASE("bad input exits 2") {
    const auto dir = testing::scratch("cli_bad");
    CHECK(cli({"run", (dir / "missing.png").string()}).code == 2);
    std::ofstream(dir / "junk.png") << "junk";
    CHECK(cli({"run", (dir / "junk.png").string()}).code == 2);

    const auto ref = write_png(dir, "ref.png", {"cat"});
    CHECK(cli({"--config", (dir / "nope.yaml").string(), "run", ref.string()}).code == 2);
    std::ofstream(dir / "bad.yaml") << "run:\n  max_iterations: -3\n";
    CHECK(cli({"--config", (dir / "bad.yaml").string(), "run", ref.string()}).code == 2);
    CHECK(cli({"run", ref.string(), "--selection", "beam"}).code == 2);
    CHECK(cli({"eval", (dir / "missing.json").string()}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"paint"}).code == 2);
}

TEST_CASE("help exits 0") {
    const auto o = cli({"--help"});
    CHECK(o.code == 0);
    CHECK(o.out.find("classify") != std::string::npos);
}

TEST_CASE("classify prints the partition as JSON") {
    const auto o = cli({"classify", "a red fox, ink painting"});
    REQUIRE(o.code == 0);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j["content"].size() + j["style"].size() == 2);
}

TEST_CASE("fuse prints content then style") {
    const auto o = cli({"fuse", "--style", "cat, watercolor", "--content", "boat lake, neon"});
    REQUIRE(o.code == 0);
    CHECK(o.out == "boat lake, watercolor\n");
}

TEST_CASE("eval writes the report with every metric column") {
    const auto dir = testing::scratch("cli_eval");
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [id, words] : std::vector<std::pair<std::string, std::vector<std::string>>>{
             {"fox", {"fox", "moon", "ink"}}, {"boat", {"boat", "lake"}}}) {
        write_png(dir, id + ".png", words);
        entries.push_back({{"id", id}, {"image", id + ".png"}, {"gold_prompt", "x"}});
    }
    std::ofstream(dir / "manifest.json") << nlohmann::json{{"entries", entries}}.dump();
    std::ofstream(dir / "cfg.yaml") << R"(
providers:
  default: {kind: mock}
evaluation:
  seeds: [0, 1]
  extractors:
    clip: image_embedding
    dino: {kind: mock}
    vit: {kind: mock}
)";
    const auto o = cli({"--config", (dir / "cfg.yaml").string(), "--out", (dir / "report").string(), "eval",
                        (dir / "manifest.json").string(), "--method", "caption"});
    REQUIRE(o.code == 0);
    CHECK(fs::exists(dir / "report" / "report.json"));
    CHECK(fs::exists(dir / "report" / "report.txt"));
    const auto clip_t = o.out.find("CLIP-T"), clip_i = o.out.find("CLIP-I"), dino = o.out.find("DINO"),
               vit = o.out.find("ViT");
    REQUIRE(vit != std::string::npos);
    CHECK(clip_t < clip_i);
    CHECK(clip_i < dino);
    CHECK(dino < vit);

    std::ifstream in(dir / "report" / "report.json");
    const auto report = nlohmann::json::parse(in);
    CHECK(report.dump().find("caption") != std::string::npos);
}

TEST_CASE("unknown eval method is a config error") {
    const auto dir = testing::scratch("cli_eval_bad");
    write_png(dir, "a.png", {"fox"});
    std::ofstream(dir / "m.json") << R"({"entries": [{"id": "a", "image": "a.png"}]})";
    CHECK(cli({"eval", (dir / "m.json").string(), "--method", "guess"}).code == 2);
}
