// Serial vs parallel timing for the simulation sweep and catalog classification.
// Usage: bench_sweep [users] [items] [steps]

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <omp.h>

#include "artai/exposure_log.hpp"
#include "artai/simulate.hpp"

using namespace artai;

namespace {

template <class Fn>
double seconds(Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* kCats[] = {"news", "sports", "music", "gaming", "harmful"};

std::vector<ItemRecord> make_items(int n, std::mt19937_64& gen) {
    std::vector<ItemRecord> items;
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "it%05d", i);
        std::string title;
        for (int w = 0; w < 6; ++w) title += std::string(kCats[gen() % 5]) + "word filler ";
        title += kCats[i % 5];
        items.push_back({id, title, std::nullopt});
    }
    return items;
}

}  // namespace

int main(int argc, char** argv) {
    const int users = argc > 1 ? std::atoi(argv[1]) : 2000;
    const int n_items = argc > 2 ? std::atoi(argv[2]) : 1000;
    const int steps = argc > 3 ? std::atoi(argv[3]) : 50;

    std::mt19937_64 gen(7);
    const Taxonomy taxonomy({kCats, kCats + 5});
    Lexicon lexicon;
    for (const char* c : kCats) lexicon.terms[c] = {c};
    const auto items = make_items(n_items * 20, gen);

    Classification serial_cls, parallel_cls;
    const double c_serial = seconds([&] { serial_cls = classify_catalog_serial(items, lexicon, taxonomy, {}); });
    const double c_parallel = seconds([&] { parallel_cls = classify_catalog(items, lexicon, taxonomy, {}); });
    std::printf("classify  items=%zu threads=%d serial=%.3fs parallel=%.3fs speedup=%.2f identical=%s\n", items.size(),
                omp_get_max_threads(), c_serial, c_parallel, c_serial / c_parallel,
                serial_cls == parallel_cls ? "yes" : "NO");

    const std::vector<ItemRecord> sim_items(items.begin(), items.begin() + n_items);
    const auto catalog = categorize(sim_items, serial_cls, taxonomy);
    SimulationConfig cfg;
    cfg.steps = steps;
    cfg.slate_size = 10;
    cfg.seed = 11;
    cfg.recommender.algorithm = RecAlgorithm::item_knn;
    cfg.dynamics.drift_rate = 0.1;
    CohortSpec spec;
    spec.name = "bench";
    spec.size = users;
    spec.prior = {PriorKind::dirichlet, {1, 1, 1, 1, 1}};
    spec.p_active = 0.8;
    spec.n_hist = 5;
    cfg.cohorts = {spec};

    ExposureLog serial_log, parallel_log;
    const double s_serial = seconds([&] { serial_log = simulate(cfg, catalog, nullptr, {Execution::serial, {}}); });
    const double s_parallel = seconds([&] { parallel_log = simulate(cfg, catalog, nullptr, {Execution::parallel, {}}); });
    std::printf("simulate  users=%d items=%d T=%d serial=%.3fs parallel=%.3fs speedup=%.2f identical=%s\n", users,
                n_items, steps, s_serial, s_parallel, s_serial / s_parallel,
                to_jsonl(serial_log) == to_jsonl(parallel_log) ? "yes" : "NO");
    return 0;
}
