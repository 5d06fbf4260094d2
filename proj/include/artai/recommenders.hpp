#pragma once
// Recommendation algorithms under audit. All share one life cycle:
// initialise from seed histories, produce top-k slates, absorb each step's
// chosen items as a single batch.
//
// Items and users are addressed by dense index (CategorizedCatalog order and
// the order of the user list handed to rec_init). Ascending item index is
// ascending item_id, which is the tie-break for every ranked algorithm.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "artai/classify.hpp"
#include "artai/rng.hpp"
#include "artai/synthgen.hpp"
#include "json.hpp"

namespace artai {

struct WorldModel;

enum class RecAlgorithm { random, popularity, item_knn, matrix_factorization };

std::string_view to_string(RecAlgorithm a);
RecAlgorithm parse_rec_algorithm(std::string_view s);

struct RecommenderConfig {
    RecAlgorithm algorithm = RecAlgorithm::popularity;
    int64_t k_neighbors = 20;
    int64_t latent_dim = 16;
    double learning_rate = 0.05;
    double regularization = 0.01;
    int64_t negative_ratio = 4;
    int64_t epochs_init = 5;

    bool operator==(const RecommenderConfig&) const = default;
};

void validate(const RecommenderConfig& config, const std::string& where = "recommender");
nlohmann::ordered_json recommender_config_to_json(const RecommenderConfig& c);
RecommenderConfig recommender_config_from_json(const nlohmann::json& j, const std::string& where = "recommender");

// Item indices in rank order (rank 1 first).
using Slate = std::vector<std::size_t>;

struct StepEvent {
    std::size_t user = 0;
    std::size_t item = 0;
};

class Recommender {
public:
    Recommender(std::size_t n_users, std::size_t n_items);
    virtual ~Recommender() = default;

    Recommender(const Recommender&) = delete;
    Recommender& operator=(const Recommender&) = delete;

    // Read-only; safe to call concurrently for different users. `stream` is
    // consumed only by algorithms that randomise.
    virtual Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const = 0;

    // Single-writer batch update. Marks the events consumed, then lets the
    // algorithm learn from them.
    void update(std::span<const StepEvent> events, uint64_t step);

    virtual RecAlgorithm algorithm() const = 0;

    std::size_t n_users() const { return consumed_.size(); }
    std::size_t n_items() const { return n_items_; }
    bool is_consumed(std::size_t user, std::size_t item) const { return consumed_[user][item]; }
    std::vector<std::size_t> eligible(std::size_t user) const;

protected:
    void mark_consumed(std::size_t user, std::size_t item) { consumed_[user][item] = true; }
    virtual void learn(std::span<const StepEvent> events, uint64_t step) = 0;

private:
    std::size_t n_items_;
    std::vector<std::vector<bool>> consumed_;
};

// Top-k of `candidates` by descending score, ties by ascending index.
Slate top_k_by_score(std::span<const double> scores, std::vector<std::size_t> candidates, std::size_t k);

class RandomRecommender final : public Recommender {
public:
    using Recommender::Recommender;
    Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const override;
    RecAlgorithm algorithm() const override { return RecAlgorithm::random; }

protected:
    void learn(std::span<const StepEvent>, uint64_t) override {}
};

class PopularityRecommender final : public Recommender {
public:
    PopularityRecommender(std::size_t n_users, std::size_t n_items);
    Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const override;
    RecAlgorithm algorithm() const override { return RecAlgorithm::popularity; }

    int64_t count(std::size_t item) const { return counts_[item]; }
    void add_count(std::size_t item, int64_t n = 1) { counts_[item] += n; }

protected:
    void learn(std::span<const StepEvent> events, uint64_t step) override;

private:
    std::vector<int64_t> counts_;
};

// Cosine over binary user-incidence vectors; 0 when either vector is all zero.
double cosine(std::span<const uint8_t> a, std::span<const uint8_t> b);

class ItemKnnRecommender final : public Recommender {
public:
    ItemKnnRecommender(std::size_t n_users, std::size_t n_items, std::size_t k_neighbors);

    Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const override;
    RecAlgorithm algorithm() const override { return RecAlgorithm::item_knn; }

    // Adds `user` to item's incidence vector (no-op if already present).
    void add_incidence(std::size_t user, std::size_t item);
    // Users outside the simulation: `users` extra rows on `item` and `shared`
    // extra rows common to a and b.
    void add_external_users(std::size_t item, int64_t users);
    void add_external_shared(std::size_t a, std::size_t b, int64_t shared);
    void rebuild_neighbors();

    double cosine(std::size_t i, std::size_t j) const;
    int64_t shared_users(std::size_t i, std::size_t j) const;
    int64_t item_users(std::size_t i) const { return norms_[i]; }
    const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t item) const { return neighbors_[item]; }
    std::vector<double> scores(std::size_t user) const;

protected:
    void learn(std::span<const StepEvent> events, uint64_t step) override;

private:
    void rebuild_neighbors(std::size_t item);

    std::size_t k_neighbors_;
    std::vector<int64_t> norms_;  // squared norm = number of incident users
    std::vector<std::unordered_map<std::size_t, int64_t>> shared_;
    std::vector<std::vector<std::size_t>> user_items_;  // distinct, insertion order
    std::vector<std::vector<bool>> incidence_;          // user x item
    std::vector<std::vector<std::pair<std::size_t, double>>> neighbors_;
    std::vector<std::size_t> dirty_;
};

// Loss of one observation: 0.5 * (r - u.v)^2 + 0.5 * lambda * (|u|^2 + |v|^2).
double mf_pair_loss(std::span<const double> u, std::span<const double> v, double r, double lambda);

struct MfGradient {
    std::vector<double> du;
    std::vector<double> dv;
};

// Analytic gradient of mf_pair_loss: du = -e v + lambda u, dv = -e u + lambda v, e = r - u.v.
MfGradient mf_pair_gradient(std::span<const double> u, std::span<const double> v, double r, double lambda);

// u <- u + eta (e v - lambda u), v <- v + eta (e u - lambda v), both from the
// pre-step values.
void mf_sgd_step(std::span<double> u, std::span<double> v, double r, double eta, double lambda);

class MatrixFactorizationRecommender final : public Recommender {
public:
    MatrixFactorizationRecommender(std::size_t n_users, std::size_t n_items, const RecommenderConfig& config,
                                   uint64_t seed);

    Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const override;
    RecAlgorithm algorithm() const override { return RecAlgorithm::matrix_factorization; }

    std::span<const double> user_factors(std::size_t u) const;
    std::span<const double> item_factors(std::size_t i) const;
    std::span<double> user_factors(std::size_t u);
    std::span<double> item_factors(std::size_t i);
    std::size_t dim() const { return dim_; }

    void seed_consumed(std::size_t user, std::size_t item) { mark_consumed(user, item); }
    // One SGD pass over `positives` (user, item) with negative sampling.
    void sgd_pass(std::span<const StepEvent> positives, rng::Stream& stream);

protected:
    void learn(std::span<const StepEvent> events, uint64_t step) override;

private:
    RecommenderConfig config_;
    uint64_t seed_;
    std::size_t dim_;
    std::vector<double> users_;
    std::vector<double> items_;
};

// Recommender plus the user_id <-> index mapping.
class RecState {
public:
    RecState(std::unique_ptr<Recommender> rec, std::vector<std::string> user_ids);

    Recommender& recommender() { return *rec_; }
    const Recommender& recommender() const { return *rec_; }

    std::size_t user_index(const std::string& user_id) const;  // throws NotFoundError

    Slate recommend(std::size_t user, std::size_t k, rng::Stream& stream) const { return rec_->recommend(user, k, stream); }
    Slate recommend(const std::string& user_id, std::size_t k, rng::Stream& stream) const;

    void update(std::span<const StepEvent> events, uint64_t step) { rec_->update(events, step); }
    // (user_id, item_id) pairs; unknown ids throw NotFoundError.
    void update(std::span<const std::pair<std::string, std::string>> events, const CategorizedCatalog& catalog,
                uint64_t step);

private:
    std::unique_ptr<Recommender> rec_;
    std::vector<std::string> user_ids_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Builds the state from seed histories (and ingested co-engagement for
// item_knn when `world` is given). Throws on an empty catalog or history items
// missing from it.
RecState rec_init(const RecommenderConfig& config, const CategorizedCatalog& catalog,
                  std::span<const SyntheticUser> users, const WorldModel* world, uint64_t seed);

}  // namespace artai
