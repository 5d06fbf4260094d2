#pragma once
// Helpers shared by the unit tests and the acceptance runner.

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <vector>
#include <unistd.h>

#include "artai/classify.hpp"
#include "artai/simulate.hpp"

namespace artai::testing {

inline std::filesystem::path fixture_dir() { return ARTAI_FIXTURE_DIR; }

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("artai-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string item_id(std::size_t i) {
    std::string s = std::to_string(i);
    return "i" + std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

// n items assigned round-robin over the user categories (or per `cats`).
inline CategorizedCatalog make_catalog(const Taxonomy& taxonomy, std::size_t n_items,
                                       std::vector<std::size_t> cats = {}) {
    std::vector<ItemRecord> items;
    Classification cls;
    for (std::size_t i = 0; i < n_items; ++i) {
        const std::size_t c = cats.empty() ? i % taxonomy.user_size() : cats[i];
        items.push_back({item_id(i), "", std::nullopt});
        cls[item_id(i)] = {item_id(i), taxonomy.name(c), 1.0, {}, LabelSource::external_label};
    }
    return categorize(items, cls, taxonomy);
}

inline Taxonomy toy_taxonomy() { return Taxonomy({"news", "sports", "music", "harmful"}); }

inline CohortSpec point_cohort(const std::string& name, int64_t size, std::vector<double> interest,
                               double p_active = 1.0, int64_t n_hist = 0) {
    CohortSpec s;
    s.name = name;
    s.size = size;
    s.prior = {PriorKind::point, std::move(interest)};
    s.p_active = p_active;
    s.n_hist = n_hist;
    return s;
}

inline CohortSpec dirichlet_cohort(const std::string& name, int64_t size, std::vector<double> alpha,
                                   double p_active = 1.0, int64_t n_hist = 0) {
    CohortSpec s = point_cohort(name, size, std::move(alpha), p_active, n_hist);
    s.prior.kind = PriorKind::dirichlet;
    return s;
}

// Uniform draw from the simplex of dimension n.
inline std::vector<double> random_simplex(std::mt19937_64& gen, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> v(n);
    double sum = 0.0;
    for (auto& x : v) sum += (x = e(gen));
    for (auto& x : v) x /= sum;
    return v;
}

}  // namespace artai::testing
