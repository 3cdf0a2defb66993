#include "revprompt/run_store.hpp"

#include <fstream>

#include "revprompt/serialization.hpp"

namespace revprompt::optimizer {

namespace fs = std::filesystem;

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void write_text(const fs::path& path, std::string_view text) {
    write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) fail(ErrorCode::io_error, "cannot create run store '" + root_.string() + "': " + ec.message());
}

void RunStore::on_start(const std::string& run_id, const ImageRef& reference, const RunConfig& config) {
    const auto dir = run_dir(run_id);
    fs::create_directories(dir / "images");
    auto j = json::to_json(config);
    j["run_id"] = run_id;
    j["reference_id"] = reference.id();
    write_text(dir / "config.json", j.dump(2) + "\n");
    write_file(dir / "images" / "reference.png", reference.bytes());
    write_text(dir / "iterations.jsonl", "");
}

void RunStore::on_iteration(const std::string& run_id, const IterationRecord& record) {
    const auto dir = run_dir(run_id);
    if (!record.generated_image.empty()) write_file(dir / record.image_path(), record.generated_image.bytes());
    std::ofstream out(dir / "iterations.jsonl", std::ios::app);
    if (!out) fail(ErrorCode::io_error, "cannot append to " + (dir / "iterations.jsonl").string());
    out << json::to_json(record).dump() << '\n';
}

void RunStore::on_finish(const RunResult& result) {
    write_text(run_dir(result.run_id) / "final.json", json::to_json(result).dump(2) + "\n");
}

std::vector<nlohmann::json> RunStore::read_iterations(const std::string& run_id) const {
    std::ifstream in(run_dir(run_id) / "iterations.jsonl");
    if (!in) fail(ErrorCode::not_found, "no iterations stored for run '" + run_id + "'");
    std::vector<nlohmann::json> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

void ObserverList::on_start(const std::string& run_id, const ImageRef& reference, const RunConfig& config) {
    for (auto* o : observers_) o->on_start(run_id, reference, config);
}

void ObserverList::on_iteration(const std::string& run_id, const IterationRecord& record) {
    for (auto* o : observers_) o->on_iteration(run_id, record);
}

void ObserverList::on_finish(const RunResult& result) {
    for (auto* o : observers_) o->on_finish(result);
}

}  // namespace revprompt::optimizer
