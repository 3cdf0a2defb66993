#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "revprompt/config.hpp"
#include "revprompt/optimizer.hpp"
#include "revprompt/run_store.hpp"

namespace httplib {
class Server;
}

namespace revprompt::service {

enum class RunStatus { queued, running, done, failed };
std::string_view to_string(RunStatus s);

/// Immutable view of one run, taken under the run's lock.
struct RunSnapshot {
    std::string run_id;
    RunStatus status = RunStatus::queued;
    int completed = 0;
    int max_iterations = 0;
    std::optional<nlohmann::json> result;  // RunResult JSON once finished
};

/// HTTP front end for runs and prompt editing. Runs execute on their own
/// threads, at most `service.max_concurrent_runs` at a time; each is also
/// persisted through a RunStore under `service.store`.
class Service {
public:
    explicit Service(config::AppConfig cfg);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Queues a run and returns its id immediately.
    std::string start_run(const ImageRef& reference, const optimizer::RunConfig& run);

    std::optional<RunSnapshot> snapshot(const std::string& run_id) const;
    /// Records from index `since` on, in the exact form written to
    /// iterations.jsonl. Nullopt for an unknown run.
    std::optional<std::vector<nlohmann::json>> iterations(const std::string& run_id, std::size_t since) const;
    std::optional<Bytes> image(const std::string& run_id, int step) const;

    /// Blocks until every started run has finished.
    void wait_all();

    /// Binds and serves until stop(); returns false if binding failed.
    bool listen(const std::string& host, int port);
    /// Binds to an ephemeral port and serves on a background thread.
    int start_background(const std::string& host = "127.0.0.1");
    void stop();

    const config::AppConfig& config() const noexcept { return cfg_; }
    const optimizer::RunStore& store() const noexcept { return store_; }

private:
    struct RunState;
    class Tracker;

    void routes();
    std::shared_ptr<RunState> find(const std::string& run_id) const;

    config::AppConfig cfg_;
    config::Runtime runtime_;
    optimizer::RunStore store_;
    std::counting_semaphore<> slots_;

    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<RunState>> runs_;
    std::vector<std::thread> workers_;

    std::unique_ptr<httplib::Server> server_;
    std::thread listener_;
};

}  // namespace revprompt::service
