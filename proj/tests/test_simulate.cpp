#include <omp.h>

#include <cmath>
#include <random>

#include "artai/error.hpp"
#include "artai/exposure_log.hpp"
#include "artai/simplex.hpp"
#include "artai/simulate.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace artai;
using artai::testing::point_cohort;

namespace {

// Frequencies of outcomes {rank 0, rank 1, ..., none} over n trials.
template <class Choose>
std::vector<int> tally(std::size_t slots, int n, Choose&& choose) {
    std::vector<int> counts(slots + 1, 0);
    for (int i = 0; i < n; ++i) {
        auto s = rng::derive(123, {static_cast<uint64_t>(i)});
        const auto r = choose(s);
        ++counts[r ? *r : slots];
    }
    return counts;
}

void check_within_4sigma(const std::vector<int>& counts, const std::vector<double>& p, int n) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double sigma = std::sqrt(n * p[i] * (1 - p[i]));
        CHECK(std::abs(counts[i] - n * p[i]) <= 4 * sigma + 1e-9);
    }
}

SimulationConfig base_config(RecAlgorithm algo, int64_t T = 20, int64_t k = 4) {
    SimulationConfig c;
    c.steps = T;
    c.slate_size = k;
    c.seed = 42;
    c.recommender.algorithm = algo;
    c.recommender.latent_dim = 4;
    c.dynamics.drift_rate = 0.1;
    c.cohorts = {testing::dirichlet_cohort("a", 30, {1, 2, 1, 0.5}, 0.7, 3),
                 point_cohort("b", 20, {0.1, 0.1, 0.2, 0.6}, 0.9, 2)};
    return c;
}

}  // namespace

TEST_CASE("cascade examples") {
    const std::vector<double> interest = {1.0, 0.0, 0.0, 0.0, 0.0};
    const std::vector<std::size_t> cats = {0, 1, 2};
    auto c = tally(3, 2000, [&](auto& s) { return choose_position_cascade(interest, cats, 0.7, s); });
    CHECK(c[0] == 2000);

    const std::vector<double> flat = {0.25, 0.25, 0.25, 0.25, 0.0};
    c = tally(3, 5000, [&](auto& s) { return choose_position_cascade(flat, cats, 0.0, s); });
    CHECK(c[1] == 0);
    CHECK(c[2] == 0);

    const std::vector<double> half = {0.5, 0.5, 0.0, 0.0, 0.0};
    const std::vector<std::size_t> two = {0, 1};
    const int n = 100000;
    c = tally(2, n, [&](auto& s) { return choose_position_cascade(half, two, 1.0, s); });
    check_within_4sigma(c, {0.5, 0.25, 0.25}, n);
}

TEST_CASE("multinomial examples") {
    const std::vector<double> flat = {0.25, 0.25, 0.25, 0.25, 0.0};
    const std::vector<std::size_t> cats = {0, 1, 2, 3};
    const int n = 40000;
    auto c = tally(4, n, [&](auto& s) { return choose_utility_multinomial(flat, cats, 1.0, 0.0, s); });
    check_within_4sigma(c, {0.25, 0.25, 0.25, 0.25, 0.0}, n);

    const std::vector<std::size_t> one = {2};
    c = tally(1, 1000, [&](auto& s) { return choose_utility_multinomial(flat, one, 0.3, 0.0, s); });
    CHECK(c[0] == 1000);

    const std::vector<double> v = {0.6, 0.2, 0.1, 0.1, 0.0};
    const std::vector<std::size_t> two = {0, 1};
    c = tally(2, 100000, [&](auto& s) { return choose_utility_multinomial(v, two, 0.5, 0.1, s); });
    check_within_4sigma(c, {0.75, 0.125, 0.125}, 100000);

    const std::vector<double> none = {0.0, 0.0, 0.0, 0.0, 1.0};
    c = tally(2, 100, [&](auto& s) { return choose_utility_multinomial(none, two, 0.5, 0.0, s); });
    CHECK(c[2] == 100);
}

TEST_CASE("cascade selection frequency does not increase with rank") {
    std::mt19937_64 gen(3);
    const std::size_t k = 6;
    std::vector<int> counts(k + 1, 0);
    for (int i = 0; i < 100000; ++i) {
        const auto interest = testing::random_simplex(gen, 5);
        std::vector<std::size_t> cats(k);
        for (auto& c : cats) c = gen() % 5;
        auto s = rng::derive(5, {static_cast<uint64_t>(i)});
        const auto r = choose_position_cascade(interest, cats, 0.9, s);
        ++counts[r ? *r : k];
    }
    for (std::size_t r = 0; r + 1 < k; ++r) CHECK(counts[r] > counts[r + 1]);
}

TEST_CASE("drift examples") {
    const std::vector<double> v = {0.25, 0.25, 0.25, 0.25};
    CHECK(drift_interest(v, 0, 0.0) == v);
    CHECK(drift_interest(v, 2, 1.0) == std::vector<double>{0, 0, 1, 0});
    const auto d = drift_interest(v, 0, 0.2);
    const std::vector<double> expect = {0.4, 0.2, 0.2, 0.2};
    for (std::size_t i = 0; i < 4; ++i) CHECK(d[i] == doctest::Approx(expect[i]).epsilon(1e-15));
}

TEST_CASE("is_active examples") {
    rng::Stream s(1);
    int on = 0;
    const int n = 100000;
    for (int i = 0; i < 1000; ++i) {
        CHECK(is_active(1.0, s));
        CHECK_FALSE(is_active(0.0, s));
    }
    for (int i = 0; i < n; ++i) on += is_active(0.3, s);
    CHECK(std::abs(on - 0.3 * n) < 4 * std::sqrt(n * 0.3 * 0.7));
}

TEST_CASE("no active users gives an empty log") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 8);
    auto c = base_config(RecAlgorithm::popularity, 1);
    c.cohorts = {point_cohort("idle", 10, {0.25, 0.25, 0.25, 0.25}, 0.0)};
    const auto log = simulate(c, cat, nullptr);
    CHECK(log.records.empty());
    CHECK(log.header.cohorts[0].size == 10);
}

TEST_CASE("k=1 popularity serves the most-seeded item first") {
    const auto t = testing::toy_taxonomy();
    const auto cat = testing::make_catalog(t, 8);
    auto c = base_config(RecAlgorithm::popularity, 1, 1);
    c.cohorts = {point_cohort("seeders", 0, {0.25, 0.25, 0.25, 0.25}, 0.0), point_cohort("u", 1, {1, 0, 0, 0})};
    std::vector<SyntheticUser> users;
    auto seeder = [&](int i, std::vector<std::string> h) {
        SyntheticUser s;
        s.user_id = "seeders-" + std::to_string(i);
        s.cohort = "seeders";
        s.stream_key = "seeders";
        s.index = static_cast<uint64_t>(i);
        s.interest = {0.25, 0.25, 0.25, 0.25, 0.0};
        s.p_active = 0.0;
        s.history = std::move(h);
        return s;
    };
    users.push_back(seeder(0, {"i0005", "i0003"}));
    users.push_back(seeder(1, {"i0005", "i0001"}));
    users.push_back(seeder(2, {"i0003", "i0005"}));
    SyntheticUser u = seeder(0, {});
    u.user_id = "u-0";
    u.cohort = u.stream_key = "u";
    u.interest = {1, 0, 0, 0, 0};
    u.p_active = 1.0;
    users.push_back(u);
    const auto log = simulate_users(c, cat, users, nullptr);
    REQUIRE(log.records.size() == 1);
    CHECK(log.records[0].slate == std::vector<std::size_t>{5});
}

TEST_CASE("schedule invariance and determinism for every algorithm and choice model") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 60);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(4);
    for (auto algo : {RecAlgorithm::random, RecAlgorithm::popularity, RecAlgorithm::item_knn,
                      RecAlgorithm::matrix_factorization}) {
        for (auto variant : {ChoiceVariant::position_cascade, ChoiceVariant::utility_multinomial}) {
            auto c = base_config(algo);
            c.choice.variant = variant;
            const auto serial = to_jsonl(simulate(c, cat, nullptr, {Execution::serial, {}}));
            CHECK(to_jsonl(simulate(c, cat, nullptr, {Execution::serial, {}})) == serial);
            CHECK(to_jsonl(simulate(c, cat, nullptr, {Execution::serial_reverse, {}})) == serial);
            CHECK(to_jsonl(simulate(c, cat, nullptr, {Execution::parallel, {}})) == serial);
            c.seed = 43;
            CHECK(to_jsonl(simulate(c, cat, nullptr, {Execution::parallel, {}})) != serial);
        }
    }
    omp_set_num_threads(saved);
}

TEST_CASE("interests stay on the simplex and the log is structurally valid") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 40);
    auto c = base_config(RecAlgorithm::item_knn, 40);
    c.dynamics.drift_rate = 0.3;
    int64_t calls = 0;
    SimulationOptions opts;
    opts.observer = [&](int64_t t, std::span<const SyntheticUser> users) {
        CHECK(t == calls++);
        for (const auto& u : users) REQUIRE(on_simplex(u.interest));
    };
    const auto log = simulate(c, cat, nullptr, opts);
    CHECK(calls == 41);
    CHECK_NOTHROW(validate_log(log));
    CHECK(log.records.size() <= static_cast<std::size_t>(40 * 50));
    const auto text = to_jsonl(log);
    CHECK(parse_exposure_log(text) == log);
    CHECK(to_jsonl(parse_exposure_log(text)) == text);
}

TEST_CASE("random recommender with symmetric cohorts exposes categories uniformly") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 200);
    auto c = base_config(RecAlgorithm::random, 30, 5);
    c.cohorts = {point_cohort("sym", 100, {0.25, 0.25, 0.25, 0.25}, 1.0)};
    const auto log = simulate(c, cat, nullptr);
    std::vector<double> counts(5, 0.0);
    double n = 0;
    for (const auto& r : log.records)
        for (auto i : r.slate) {
            counts[cat.category[i]] += 1;
            n += 1;
        }
    CHECK(counts[4] == 0);
    for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(counts[k] - n / 4) < 4 * std::sqrt(n * 0.25 * 0.75));
}

TEST_CASE("active record count matches p_active within a binomial interval") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 20);
    auto c = base_config(RecAlgorithm::random, 50, 2);
    c.cohorts = {point_cohort("p", 200, {0.25, 0.25, 0.25, 0.25}, 0.3)};
    const auto log = simulate(c, cat, nullptr);
    const double n = 200.0 * 50.0;
    CHECK(std::abs(static_cast<double>(log.records.size()) - 0.3 * n) < 4 * std::sqrt(n * 0.3 * 0.7));
}

TEST_CASE("simulation config validation and json") {
    const auto t = testing::toy_taxonomy();
    auto c = base_config(RecAlgorithm::item_knn);
    CHECK_NOTHROW(validate(c, t));
    const auto back = simulation_config_from_json(nlohmann::json::parse(simulation_config_to_json(c).dump()));
    CHECK(back == c);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 16);

    auto bad = c;
    bad.cohorts.clear();
    CHECK_THROWS_AS(validate(bad, t), ValidationError);
    bad = c;
    bad.cohorts[1].name = "a";
    CHECK_THROWS_AS(validate(bad, t), ValidationError);
    bad = c;
    bad.steps = 0;
    CHECK_THROWS_AS(validate(bad, t), ValidationError);
    bad = c;
    bad.choice.gamma = 1.5;
    CHECK_THROWS_AS(validate(bad, t), ValidationError);
    bad = c;
    bad.dynamics.drift_rate = -0.1;
    CHECK_THROWS_AS(validate(bad, t), ValidationError);

    try {
        simulation_config_from_json(nlohmann::json::parse(R"({"T": 5, "k": "x", "cohorts": []})"));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("simulation.k") != std::string::npos);
    }
}

TEST_CASE("exposure log validation rejects inconsistent records") {
    const auto cat = testing::make_catalog(testing::toy_taxonomy(), 20);
    const auto good = simulate(base_config(RecAlgorithm::popularity, 5), cat, nullptr);
    REQUIRE(!good.records.empty());
    auto bad = good;
    bad.records[0].t = 99;
    CHECK_THROWS_AS(validate_log(bad), ValidationError);
    bad = good;
    bad.records.push_back(bad.records[0]);
    CHECK_THROWS_AS(validate_log(bad), ValidationError);
    bad = good;
    bad.records[0].chosen = ChosenItem{bad.records[0].slate[0], 2};
    CHECK_THROWS_AS(validate_log(bad), ValidationError);
    CHECK_THROWS_AS(parse_exposure_log("{\"kind\":\"nope\"}\n"), ValidationError);
}
