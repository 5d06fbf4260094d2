#include <cmath>

#include "artai/io.hpp"
#include "artai/pipeline.hpp"
#include "cli_runner.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artai;
using artai::testing::run_cli;
using artai::testing::shell_quote;
using nlohmann::json;

namespace {

std::string fx(const std::string& name) { return shell_quote((testing::fixture_dir() / name).string()); }
std::string q(const std::filesystem::path& p) { return shell_quote(p.string()); }

}  // namespace

TEST_CASE("cli exit codes") {
    testing::TempDir dir("cli-codes");
    CHECK(run_cli("", dir.path()).code == 1);
    CHECK(run_cli("bogus", dir.path()).code == 1);
    auto r = run_cli("classify --catalog " + fx("catalog.csv"), dir.path());
    CHECK(r.code == 1);
    CHECK(r.err.find("--taxonomy") != std::string::npos);

    r = run_cli("cohort marginal-pair --spec " + fx("cohort_general.json") + " --target harmful --delta 1.5", dir.path());
    CHECK(r.code == 2);
    CHECK(r.err.find("delta") != std::string::npos);
    CHECK(run_cli("simulate --config " + q(dir / "missing.json"), dir.path()).code == 2);

    r = run_cli("classify --catalog " + fx("catalog.csv") + " --taxonomy " + fx("taxonomy.txt") + " --lexicon " +
                    fx("lexicon.csv") + " --out " + q(dir / "no" / "such" / "dir" / "x.json"),
                dir.path());
    CHECK(r.code == 3);
}

TEST_CASE("simulate is reproducible from the cli and agrees with evaluate") {
    testing::TempDir dir("cli-sim");
    const auto cfg = fx("config.json");
    auto a = run_cli("simulate --config " + cfg + " --seed 7 --out " + q(dir / "a.jsonl") + " --report " + q(dir / "a.json"),
                     dir.path());
    REQUIRE(a.code == 0);
    auto b = run_cli("simulate --config " + cfg + " --seed 7 --serial --out " + q(dir / "b.jsonl"), dir.path());
    REQUIRE(b.code == 0);
    CHECK(io::read_file(dir / "a.jsonl") == io::read_file(dir / "b.jsonl"));

    auto c = run_cli("simulate --config " + cfg + " --seed 8 --out " + q(dir / "c.jsonl"), dir.path());
    REQUIRE(c.code == 0);
    CHECK(io::read_file(dir / "a.jsonl") != io::read_file(dir / "c.jsonl"));

    auto ev = run_cli("evaluate --log " + q(dir / "a.jsonl") + " --config " + cfg + " --out " + q(dir / "e.json"), dir.path());
    REQUIRE(ev.code == 0);
    CHECK(io::read_file(dir / "e.json") == io::read_file(dir / "a.json"));
}

TEST_CASE("classify, cohort gen, simulate from users, evaluate, render") {
    testing::TempDir dir("cli-pipe");
    auto r = run_cli("classify --catalog " + fx("catalog.csv") + " --taxonomy " + fx("taxonomy.txt") + " --lexicon " +
                         fx("lexicon.csv") + " --labels " + fx("labels.csv") + " --out " + q(dir / "cls.json"),
                     dir.path());
    REQUIRE(r.code == 0);
    r = run_cli("cohort gen --spec " + fx("cohort_fans.json") + " --classification " + q(dir / "cls.json") + " --catalog " +
                    fx("catalog.csv") + " --seed 3 --out " + q(dir / "users.json"),
                dir.path());
    REQUIRE(r.code == 0);
    const auto users = users_from_json(json::parse(io::read_file(dir / "users.json")));
    CHECK(users.size() == 50);

    json cfg = {{"catalog", (testing::fixture_dir() / "catalog.csv").string()},
                {"classification", "cls.json"},
                {"users", {"users.json"}},
                {"simulation",
                 {{"T", 30},
                  {"k", 4},
                  {"seed", 5},
                  {"recommender", {{"algorithm", "popularity"}}},
                  {"dynamics", {{"drift_rate", 0.05}}},
                  {"cohorts", {json::parse(io::read_file(testing::fixture_dir() / "cohort_fans.json"))}}}},
                {"report", {{"flagged", {"harmful"}}, {"window", 5}}}};
    io::write_file_atomic(dir / "run.json", cfg.dump(2));
    r = run_cli("simulate --config " + q(dir / "run.json") + " --out " + q(dir / "log.jsonl"), dir.path());
    REQUIRE_MESSAGE(r.code == 0, r.err);
    r = run_cli("evaluate --log " + q(dir / "log.jsonl") + " --config " + q(dir / "run.json") + " --out " +
                    q(dir / "report.json") + " --timeseries " + q(dir / "ts.csv"),
                dir.path());
    REQUIRE_MESSAGE(r.code == 0, r.err);

    const auto report = json::parse(io::read_file(dir / "report.json"));
    CHECK(report["metadata"]["n_windows"] == 6);
    for (const auto& c : report["cohorts"])
        for (const auto& w : c["series"]) {
            if (w["shares"].is_null()) continue;
            double sum = 0.0;
            for (const auto& s : w["shares"]) sum += s.get<double>();
            CHECK(std::abs(sum - 1.0) <= 1e-9);
        }
    CHECK(io::read_file(dir / "ts.csv").rfind("cohort,window,category,share\n", 0) == 0);

    r = run_cli("report render --report " + q(dir / "report.json"), dir.path());
    REQUIRE(r.code == 0);
    CHECK(r.out.find("# Recommender risk report") == 0);
}

TEST_CASE("ingest writes a worldmodel") {
    testing::TempDir dir("cli-ingest");
    auto r = run_cli("ingest --catalog " + fx("catalog.csv") + " --taxonomy " + fx("taxonomy.txt") + " --lexicon " +
                         fx("lexicon.csv") + " --interactions " + fx("interactions.csv") + " --out " + q(dir / "w.json"),
                     dir.path());
    REQUIRE_MESSAGE(r.code == 0, r.err);
    const auto w = json::parse(io::read_file(dir / "w.json"));
    CHECK(w.is_object());
    r = run_cli("ingest --catalog " + fx("catalog.csv") + " --taxonomy " + fx("taxonomy.txt") + " --interactions " +
                    fx("interactions.csv") + " --smoothing -1",
                dir.path());
    CHECK(r.code == 2);
}
