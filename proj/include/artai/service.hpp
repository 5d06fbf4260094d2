#pragma once
// HTTP front end over the Store with an asynchronous FIFO run executor.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "artai/store.hpp"

namespace httplib {
class Server;
}

namespace artai {

struct ServiceOptions {
    std::filesystem::path store_root;
    std::string host = "127.0.0.1";
    int port = 8080;  // 0 = pick a free port
    std::size_t parallelism = 1;
    std::size_t queue_capacity = 64;
};

// Run document accepted by POST /runs:
//   {"dataset": name, "taxonomy": name,
//    "cohorts": [store cohort name | inline cohort spec, ...],
//    "simulation": {T, k, seed, recommender, choice, dynamics},
//    "report": {window, flagged, cohort_pairs, epsilon}}
// Resolved against the store into the same RunConfig the cli reads.
class RunExecutor {
public:
    RunExecutor(Store& store, std::size_t parallelism, std::size_t queue_capacity);
    ~RunExecutor();

    RunExecutor(const RunExecutor&) = delete;
    RunExecutor& operator=(const RunExecutor&) = delete;

    // false when the queue is full.
    bool enqueue(const std::string& run_id);
    // Removes a queued run; false if it is not waiting in the queue.
    bool cancel(const std::string& run_id);
    bool is_running(const std::string& run_id) const;
    // Blocks until nothing is queued or running.
    void wait_idle();
    void shutdown();

private:
    void worker_loop();
    void execute(const std::string& run_id);

    Store& store_;
    std::size_t queue_capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::string> queue_;
    std::vector<std::string> running_;
    bool stopping_ = false;
    std::vector<std::thread> workers_;
};

class Service {
public:
    explicit Service(ServiceOptions options);
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    // Binds and serves on a background thread; returns the bound port.
    int start();
    // Serves on the calling thread until stop().
    void run();
    void stop();

    int port() const { return port_; }
    Store& store() { return store_; }
    RunExecutor& executor() { return executor_; }

private:
    void install_routes();
    int bind();

    ServiceOptions options_;
    Store store_;
    RunExecutor executor_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = 0;
};

// Resolves a POST /runs document against the store (paths into the store).
nlohmann::json resolve_run_document(const Store& store, const nlohmann::json& doc);

}  // namespace artai
