#pragma once
// Small helpers for driving the HTTP service in tests.

#include <chrono>
#include <string>
#include <thread>

#include "artai/io.hpp"
#include "httplib.h"
#include "json.hpp"
#include "support.hpp"

namespace artai::testing {

inline nlohmann::json post_json(httplib::Client& cli, const std::string& path, const nlohmann::json& body, int* status = nullptr) {
    auto res = cli.Post(path, body.dump(), "application/json");
    if (!res) throw std::runtime_error("request failed: " + path + " (" + httplib::to_string(res.error()) + ")");
    if (status) *status = res->status;
    return res->body.empty() ? nlohmann::json() : nlohmann::json::parse(res->body, nullptr, false);
}

// Uploads the toy dataset, its taxonomy and both cohorts.
inline void upload_toy(httplib::Client& cli) {
    const auto dir = fixture_dir();
    int status = 0;
    post_json(cli, "/datasets",
              {{"name", "toy"},
               {"catalog", io::read_file(dir / "catalog.csv")},
               {"interactions", io::read_file(dir / "interactions.csv")},
               {"labels", io::read_file(dir / "labels.csv")}},
              &status);
    if (status != 201) throw std::runtime_error("dataset upload failed");
    std::vector<std::string> cats = {"news", "sports", "music", "harmful"};
    post_json(cli, "/taxonomies", {{"name", "toy"}, {"categories", cats}, {"lexicon", io::read_file(dir / "lexicon.csv")}},
              &status);
    if (status != 201) throw std::runtime_error("taxonomy upload failed");
    for (const char* f : {"cohort_general.json", "cohort_fans.json"}) {
        post_json(cli, "/cohorts", nlohmann::json::parse(io::read_file(dir / f)), &status);
        if (status != 201) throw std::runtime_error("cohort upload failed");
    }
}

// The service run document equivalent to the toy config.json.
inline nlohmann::json toy_run_document() {
    auto cfg = nlohmann::json::parse(io::read_file(fixture_dir() / "config.json"));
    nlohmann::json sim = cfg["simulation"];
    sim.erase("cohorts");
    return {{"dataset", "toy"},
            {"taxonomy", "toy"},
            {"cohorts", {"general", "fans"}},
            {"simulation", sim},
            {"report", cfg["report"]}};
}

inline nlohmann::json wait_terminal(httplib::Client& cli, const std::string& id, double timeout_s = 120) {
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
    for (;;) {
        auto res = cli.Get("/runs/" + id);
        if (res && res->status == 200) {
            auto j = nlohmann::json::parse(res->body);
            if (j["status"] == "done" || j["status"] == "failed") return j;
        }
        if (std::chrono::steady_clock::now() > deadline) throw std::runtime_error("run " + id + " did not finish");
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
}

}  // namespace artai::testing
