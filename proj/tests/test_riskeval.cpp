#include <cmath>
#include <random>
#include <sstream>

#include "artai/error.hpp"
#include "artai/riskeval.hpp"
#include "artai/simulate.hpp"
#include "doctest.h"
#include "oracles.hpp"
#include "support.hpp"

using namespace artai;

namespace {

// Items 0..7; item i has category i % 4 (news, sports, music, harmful).
struct LogBuilder {
    ExposureLog log;
    LogBuilder(int64_t T, std::vector<std::string> cohorts, int64_t users_per_cohort = 2) {
        auto& h = log.header;
        h.config_hash = "0000000000000000";
        h.steps = T;
        h.slate_size = 4;
        h.recommender = "random";
        h.taxonomy = testing::toy_taxonomy();
        for (std::size_t i = 0; i < 8; ++i) {
            h.item_ids.push_back(testing::item_id(i));
            h.item_category.push_back(i % 4);
        }
        for (const auto& c : cohorts) {
            CohortSummary s;
            s.name = c;
            s.size = users_per_cohort;
            s.mean_initial_interest = {0.25, 0.25, 0.25, 0.25, 0.0};
            h.cohorts.push_back(s);
        }
    }
    LogBuilder& add(int64_t t, const std::string& user, std::size_t cohort, std::vector<std::size_t> slate,
                    std::optional<std::size_t> chosen_rank = std::nullopt) {
        ExposureRecord r{t, user, cohort, slate, std::nullopt};
        if (chosen_rank) r.chosen = ChosenItem{slate[*chosen_rank - 1], static_cast<int64_t>(*chosen_rank)};
        log.records.push_back(r);
        return *this;
    }
};

}  // namespace

TEST_CASE("default window and window count") {
    CHECK(default_window(1) == 1);
    CHECK(default_window(20) == 1);
    CHECK(default_window(100) == 5);
    CHECK(default_window(101) == 6);
    CHECK(window_count(100, 5) == 20);
    CHECK(window_count(101, 6) == 17);
    CHECK(window_count(7, 3) == 3);
}

TEST_CASE("exposure share examples") {
    LogBuilder b(2, {"c"});
    b.add(1, "c-0", 0, {0, 4, 0, 1});  // news, news, news, sports
    b.add(2, "c-0", 0, {3, 7});
    const auto s = exposure_shares(b.log, "c", 1);
    REQUIRE(s.rows.size() == 2);
    CHECK(*s.rows[0] == std::vector<double>{0.75, 0.25, 0, 0, 0});
    CHECK(*s.rows[1] == std::vector<double>{0, 0, 0, 1, 0});
    CHECK(s.impressions == std::vector<int64_t>{4, 2});

    LogBuilder e(3, {"c"});
    e.add(3, "c-0", 0, {2});
    const auto se = exposure_shares(e.log, "c", 1);
    CHECK_FALSE(se.rows[0].has_value());
    CHECK_FALSE(se.rows[1].has_value());
    CHECK(se.rows[2].has_value());
    CHECK_THROWS_AS(exposure_shares(e.log, "nobody", 1), NotFoundError);
    CHECK_THROWS_AS(exposure_shares(e.log, "c", 0), ValidationError);
}

TEST_CASE("amplification examples") {
    const std::vector<double> v = {0.1, 0.2, 0.3, 0.4};
    CHECK(amplification(v, v) == std::vector<double>{1, 1, 1, 1});
    CHECK(amplification(std::vector<double>{0, 1}, std::vector<double>{0.5, 0.5})[0] == 0.0);
    CHECK(amplification(std::vector<double>{0.5, 0.5}, std::vector<double>{0.25, 0.75})[0] == 2.0);
    CHECK(amplification(std::vector<double>{0.5, 0.5}, std::vector<double>{0.0, 1.0}, 1e-6)[0] == doctest::Approx(5e5));
}

TEST_CASE("gini examples and pairwise oracle") {
    CHECK(gini(std::vector<double>{3, 3, 3}) == 0.0);
    CHECK(gini(std::vector<double>{0, 0, 0, 1}) == 0.75);
    CHECK(gini(std::vector<double>{5}) == 0.0);
    CHECK(gini(std::vector<double>{0, 0}) == 0.0);
    CHECK_THROWS_AS(gini(std::vector<double>{}), ValidationError);
    std::mt19937_64 gen(2);
    for (int i = 0; i < 200; ++i) {
        std::vector<double> x(1 + gen() % 30);
        for (auto& v : x) v = static_cast<double>(gen() % 10);
        CHECK(gini(x) == doctest::Approx(oracle::gini_pairwise(x)).epsilon(1e-12));
        std::vector<double> scaled = x;
        const double c = 0.1 + static_cast<double>(gen() % 1000) / 7.0;
        for (auto& v : scaled) v *= c;
        CHECK(gini(scaled) == doctest::Approx(gini(x)).epsilon(1e-12));
    }
}

TEST_CASE("js divergence examples and properties") {
    const std::vector<double> p = {0.2, 0.8};
    CHECK(js_divergence(p, p) == 0.0);
    CHECK(js_divergence(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 1.0);
    const std::vector<double> a = {0.5, 0.5}, b = {1, 0};
    CHECK(std::abs(js_divergence(a, b) - oracle::jsd_by_kl(a, b)) < 1e-9);
    CHECK(js_divergence(a, b) == doctest::Approx(0.3113).epsilon(1e-4));
    CHECK_THROWS_AS(js_divergence(a, std::vector<double>{1, 0, 0}), ValidationError);
    std::mt19937_64 gen(4);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 2 + gen() % 6;
        auto x = testing::random_simplex(gen, n), y = testing::random_simplex(gen, n);
        if (gen() % 3 == 0) x[gen() % n] = 0.0;
        double sx = 0;
        for (double v : x) sx += v;
        for (auto& v : x) v /= sx;
        const double d = js_divergence(x, y);
        CHECK(d == js_divergence(y, x));
        CHECK(d >= 0.0);
        CHECK(d <= 1.0);
        CHECK(std::abs(d - oracle::jsd_by_kl(x, y)) < 1e-9);
    }
}

TEST_CASE("trend slope examples") {
    CHECK(trend_slope(std::vector<double>{4, 4, 4}) == 0.0);
    CHECK(trend_slope(std::vector<double>{0, 1, 2}) == 1.0);
    CHECK(trend_slope(std::vector<double>{2, 1, 0}) == -1.0);
    CHECK_THROWS_AS(trend_slope(std::vector<double>{1}), ValidationError);
    const std::vector<std::optional<double>> gappy = {0.0, std::nullopt, 2.0, std::nullopt};
    CHECK(trend_slope(gappy) == std::optional<double>(1.0));
    const std::vector<std::optional<double>> sparse = {std::nullopt, 3.0};
    CHECK_FALSE(trend_slope(sparse).has_value());
}

TEST_CASE("incidence examples") {
    // 4 users, 8 impressions, 2 harmful; one user exposed.
    LogBuilder b(1, {"c"}, 4);
    b.add(1, "c-0", 0, {3, 7}, 1).add(1, "c-1", 0, {0, 1}, 2).add(1, "c-2", 0, {2, 4}).add(1, "c-3", 0, {5, 6});
    auto inc = incidence(b.log, {"harmful"});
    CHECK(inc.impression_fraction == 0.25);
    CHECK(inc.user_fraction == 0.25);
    CHECK(inc.chosen_fraction == 0.5);

    inc = incidence(b.log, {});
    CHECK(inc.impression_fraction == 0.0);
    CHECK(inc.user_fraction == 0.0);
    CHECK(inc.chosen_fraction == 0.0);

    inc = incidence(b.log, {"news", "sports", "music", "harmful"});
    CHECK(inc.impression_fraction == 1.0);
    CHECK(inc.user_fraction == 1.0);
    CHECK(inc.chosen_fraction == 1.0);
    CHECK_THROWS_AS(incidence(b.log, {"memes"}), ValidationError);
}

TEST_CASE("divergence trajectory examples") {
    LogBuilder b(2, {"x", "y"});
    b.add(1, "x-0", 0, {0, 1}).add(1, "y-0", 1, {2, 3}).add(2, "x-0", 0, {4}).add(2, "y-0", 1, {6});
    auto d = divergence_trajectory(b.log, "x", "y", 1);
    CHECK(d == std::vector<std::optional<double>>{1.0, 1.0});
    d = divergence_trajectory(b.log, "x", b.log, "x", 1);
    CHECK(d == std::vector<std::optional<double>>{0.0, 0.0});

    LogBuilder gap(2, {"x", "y"});
    gap.add(1, "x-0", 0, {0}).add(2, "x-0", 0, {0}).add(2, "y-0", 1, {0});
    d = divergence_trajectory(gap.log, "x", "y", 1);
    CHECK_FALSE(d[0].has_value());
    CHECK(d[1] == std::optional<double>(0.0));

    auto other = b.log;
    other.header.taxonomy = Taxonomy({"news", "sports", "music", "spam"});
    CHECK_THROWS_AS(divergence_trajectory(b.log, "x", other, "y", 1), ValidationError);
}

TEST_CASE("delta zero pair under random stays inside the permutation null") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 80);
    SimulationConfig c;
    c.steps = 20;
    c.slate_size = 5;
    c.seed = 5;
    c.recommender.algorithm = RecAlgorithm::random;
    auto [ctrl, pert] = make_marginal_pair(testing::dirichlet_cohort("g", 60, {1, 1, 1, 1}, 1.0, 2), "harmful", 0.0);
    c.cohorts = {ctrl, pert};
    const auto log = simulate(c, cat, nullptr);
    const auto traj = divergence_trajectory(log, "g-ctrl", "g-perturbed", 5);
    for (std::size_t w = 0; w < traj.size(); ++w) {
        const auto null = permutation_null(log, "g-ctrl", "g-perturbed", 5, static_cast<int64_t>(w), 200, 1);
        CHECK(null.observed == doctest::Approx(*traj[w]).epsilon(1e-12));
        CHECK(*traj[w] <= null.upper());
    }
}

TEST_CASE("property: share rows sum to one on random logs") {
    std::mt19937_64 gen(6);
    for (int trial = 0; trial < 200; ++trial) {
        const int64_t T = 1 + static_cast<int64_t>(gen() % 15);
        LogBuilder b(T, {"p", "q"});
        for (int64_t t = 1; t <= T; ++t)
            for (int u = 0; u < 4; ++u) {
                if (gen() % 3 == 0) continue;
                std::vector<std::size_t> slate;
                for (std::size_t s = gen() % 5; s > 0; --s) slate.push_back(gen() % 8);
                b.add(t, (u < 2 ? "p-" : "q-") + std::to_string(u), u < 2 ? 0 : 1, slate);
            }
        const int64_t window = 1 + static_cast<int64_t>(gen() % 4);
        for (const char* c : {"p", "q", ""}) {
            const auto s = exposure_shares(b.log, c, window);
            for (std::size_t w = 0; w < s.rows.size(); ++w) {
                CHECK(s.rows[w].has_value() == (s.impressions[w] > 0));
                if (!s.rows[w]) continue;
                double sum = 0;
                for (double x : *s.rows[w]) sum += x;
                CHECK(std::abs(sum - 1.0) <= 1e-9);
            }
        }
        CHECK_NOTHROW(validate_report(nlohmann::json::parse(report_to_string(build_report(b.log, {})))));
    }
}

TEST_CASE("report structure: empty log, single cohort, marginal pair") {
    LogBuilder empty(5, {"solo"});
    auto r = build_report(empty.log, {});
    CHECK(r["no_activity"] == true);
    CHECK_FALSE(r.contains("divergence"));
    CHECK(r["cohorts"][0]["series"].size() == 5);
    CHECK(r["cohorts"][0]["series"][0]["shares"].is_null());
    CHECK_NOTHROW(validate_report(nlohmann::json::parse(report_to_string(r))));
    CHECK(render_report(nlohmann::json::parse(report_to_string(r))).find("No activity") != std::string::npos);

    LogBuilder pair(2, {"g-ctrl", "g-perturbed", "other"});
    pair.add(1, "g-ctrl-0", 0, {0, 1}).add(1, "g-perturbed-0", 1, {3}).add(2, "other-0", 2, {2});
    r = build_report(pair.log, {});
    REQUIRE(r["divergence"].size() == 1);
    CHECK(r["divergence"][0]["a"] == "g-ctrl");
    CHECK(r["divergence"][0]["b"] == "g-perturbed");
    CHECK(r["cohorts"].size() == 3);

    ReportOptions o;
    o.cohort_pairs = {{"g-ctrl", "other"}};
    o.flagged = {"harmful"};
    r = build_report(pair.log, o);
    CHECK(r["divergence"][0]["b"] == "other");
    CHECK(r["overall"]["incidence"]["impression_fraction"] == 0.25);
    o.flagged = {"memes"};
    CHECK_THROWS_AS(build_report(pair.log, o), ValidationError);
}

TEST_CASE("report is reproducible from the persisted log") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 40);
    SimulationConfig c;
    c.steps = 30;
    c.slate_size = 3;
    c.recommender.algorithm = RecAlgorithm::item_knn;
    c.dynamics.drift_rate = 0.1;
    c.cohorts = {testing::dirichlet_cohort("a", 20, {1, 1, 1, 1}, 0.8, 2)};
    const auto log = simulate(c, cat, nullptr);
    ReportOptions o;
    o.flagged = {"harmful"};
    const auto direct = report_to_string(build_report(log, o));
    CHECK(report_to_string(build_report(parse_exposure_log(to_jsonl(log)), o)) == direct);
    CHECK(nlohmann::json::parse(direct)["metadata"]["window"] == 2);

    const auto csv = timeseries_csv(log, "a", 10);
    CHECK(csv.rfind("cohort,window,category,share\n", 0) == 0);
    std::map<std::string, double> sums;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto last = line.rfind(',');
        const auto first_two = line.substr(0, line.find(',', line.find(',') + 1));
        sums[first_two] += std::stod(line.substr(last + 1));
    }
    CHECK(sums.size() == 3);
    for (const auto& [_, s] : sums) CHECK(std::abs(s - 1.0) < 1e-9);
}

TEST_CASE("validate_report rejects tampered reports") {
    LogBuilder b(2, {"c"});
    b.add(1, "c-0", 0, {0, 1});
    auto j = nlohmann::json::parse(report_to_string(build_report(b.log, {})));
    CHECK_NOTHROW(validate_report(j));
    auto bad = j;
    bad["cohorts"][0]["series"][0]["shares"][0] = 0.9;
    CHECK_THROWS_AS(validate_report(bad), ValidationError);
    bad = j;
    bad.erase("taxonomy");
    CHECK_THROWS_AS(validate_report(bad), ValidationError);
}

TEST_CASE("report options json") {
    ReportOptions o;
    o.window = 3;
    o.flagged = {"harmful"};
    o.cohort_pairs = {{"a", "b"}};
    const auto back = report_options_from_json(nlohmann::json::parse(report_options_to_json(o).dump()));
    CHECK(back.window == 3);
    CHECK(back.flagged == o.flagged);
    CHECK(back.cohort_pairs == o.cohort_pairs);
    try {
        report_options_from_json(nlohmann::json::parse(R"({"window": -2})"));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("report.window") != std::string::npos);
    }
}
