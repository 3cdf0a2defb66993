#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "revprompt/optimizer.hpp"

namespace revprompt::optimizer {

/// Persists runs as
///
///   <root>/<run_id>/config.json        run configuration + reference id
///   <root>/<run_id>/iterations.jsonl   one IterationRecord per line
///   <root>/<run_id>/images/            reference.png, step_NNN.png
///   <root>/<run_id>/final.json         RunResult summary
///
/// Records are appended as iterations complete. Distinct runs may be
/// written concurrently.
class RunStore final : public RunObserver {
public:
    explicit RunStore(std::filesystem::path root);

    void on_start(const std::string& run_id, const ImageRef& reference, const RunConfig& config) override;
    void on_iteration(const std::string& run_id, const IterationRecord& record) override;
    void on_finish(const RunResult& result) override;

    std::filesystem::path run_dir(const std::string& run_id) const { return root_ / run_id; }
    const std::filesystem::path& root() const noexcept { return root_; }

    /// Lines of iterations.jsonl, parsed.
    std::vector<nlohmann::json> read_iterations(const std::string& run_id) const;

private:
    std::filesystem::path root_;
};

/// Fans one run's events out to several observers.
class ObserverList final : public RunObserver {
public:
    explicit ObserverList(std::vector<RunObserver*> observers) : observers_(std::move(observers)) {}

    void on_start(const std::string& run_id, const ImageRef& reference, const RunConfig& config) override;
    void on_iteration(const std::string& run_id, const IterationRecord& record) override;
    void on_finish(const RunResult& result) override;

private:
    std::vector<RunObserver*> observers_;
};

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace revprompt::optimizer
