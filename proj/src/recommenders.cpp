#include "artai/recommenders.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "artai/error.hpp"
#include "artai/ingest.hpp"
#include "artai/json_util.hpp"

namespace artai {

namespace {

constexpr uint64_t kMfInit = rng::stable_hash("mf-init");
constexpr uint64_t kMfSgd = rng::stable_hash("mf-sgd");
constexpr uint64_t kMfUpdate = rng::stable_hash("mf-update");

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

std::string_view to_string(RecAlgorithm a) {
    switch (a) {
        case RecAlgorithm::random: return "random";
        case RecAlgorithm::popularity: return "popularity";
        case RecAlgorithm::item_knn: return "item_knn";
        case RecAlgorithm::matrix_factorization: return "matrix_factorization";
    }
    return "random";
}

RecAlgorithm parse_rec_algorithm(std::string_view s) {
    if (s == "random") return RecAlgorithm::random;
    if (s == "popularity") return RecAlgorithm::popularity;
    if (s == "item_knn") return RecAlgorithm::item_knn;
    if (s == "matrix_factorization" || s == "mf") return RecAlgorithm::matrix_factorization;
    throw ValidationError("unknown recommender algorithm '" + std::string(s) + "'");
}

void validate(const RecommenderConfig& c, const std::string& where) {
    auto fail = [&](const std::string& field, const std::string& what) {
        throw ValidationError("field `" + where + "." + field + "` " + what);
    };
    if (c.k_neighbors <= 0) fail("k_neighbors", "must be > 0");
    if (c.latent_dim <= 0) fail("latent_dim", "must be > 0");
    if (!(c.learning_rate > 0.0) || !std::isfinite(c.learning_rate)) fail("learning_rate", "must be > 0");
    if (!(c.regularization >= 0.0) || !std::isfinite(c.regularization)) fail("regularization", "must be >= 0");
    if (c.negative_ratio < 0) fail("negative_ratio", "must be >= 0");
    if (c.epochs_init < 0) fail("epochs_init", "must be >= 0");
}

nlohmann::ordered_json recommender_config_to_json(const RecommenderConfig& c) {
    return nlohmann::ordered_json{{"algorithm", to_string(c.algorithm)},
                                  {"k_neighbors", c.k_neighbors},
                                  {"latent_dim", c.latent_dim},
                                  {"learning_rate", c.learning_rate},
                                  {"regularization", c.regularization},
                                  {"negative_ratio", c.negative_ratio},
                                  {"epochs_init", c.epochs_init}};
}

RecommenderConfig recommender_config_from_json(const nlohmann::json& j, const std::string& where) {
    using namespace jsonx;
    RecommenderConfig c;
    const auto algo = get<std::string>(j, "algorithm", where);
    try {
        c.algorithm = parse_rec_algorithm(algo);
    } catch (const ValidationError& e) {
        throw ValidationError("field `" + join(where, "algorithm") + "`: " + e.what());
    }
    c.k_neighbors = get_or<int64_t>(j, "k_neighbors", c.k_neighbors, where);
    c.latent_dim = get_or<int64_t>(j, "latent_dim", c.latent_dim, where);
    c.learning_rate = get_or<double>(j, "learning_rate", c.learning_rate, where);
    c.regularization = get_or<double>(j, "regularization", c.regularization, where);
    c.negative_ratio = get_or<int64_t>(j, "negative_ratio", c.negative_ratio, where);
    c.epochs_init = get_or<int64_t>(j, "epochs_init", c.epochs_init, where);
    validate(c, where);
    return c;
}

// ---------------------------------------------------------------------------

Recommender::Recommender(std::size_t n_users, std::size_t n_items)
    : n_items_(n_items), consumed_(n_users, std::vector<bool>(n_items, false)) {}

void Recommender::update(std::span<const StepEvent> events, uint64_t step) {
    for (const auto& ev : events) {
        if (ev.user >= n_users() || ev.item >= n_items_)
            throw ValidationError("recommender update references an unknown user or item index");
        mark_consumed(ev.user, ev.item);
    }
    learn(events, step);
}

std::vector<std::size_t> Recommender::eligible(std::size_t user) const {
    std::vector<std::size_t> out;
    const auto& row = consumed_[user];
    out.reserve(n_items_);
    for (std::size_t i = 0; i < n_items_; ++i)
        if (!row[i]) out.push_back(i);
    return out;
}

Slate top_k_by_score(std::span<const double> scores, std::vector<std::size_t> candidates, std::size_t k) {
    const std::size_t n = std::min(k, candidates.size());
    auto better = [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(n), candidates.end(), better);
    candidates.resize(n);
    return candidates;
}

Slate RandomRecommender::recommend(std::size_t user, std::size_t k, rng::Stream& stream) const {
    auto pool = eligible(user);
    const std::size_t n = std::min(k, pool.size());
    for (std::size_t r = 0; r < n; ++r) {
        const auto pick = r + static_cast<std::size_t>(stream.below(pool.size() - r));
        std::swap(pool[r], pool[pick]);
    }
    pool.resize(n);
    return pool;
}

PopularityRecommender::PopularityRecommender(std::size_t n_users, std::size_t n_items)
    : Recommender(n_users, n_items), counts_(n_items, 0) {}

Slate PopularityRecommender::recommend(std::size_t user, std::size_t k, rng::Stream&) const {
    std::vector<double> scores(counts_.begin(), counts_.end());
    return top_k_by_score(scores, eligible(user), k);
}

void PopularityRecommender::learn(std::span<const StepEvent> events, uint64_t) {
    for (const auto& ev : events) ++counts_[ev.item];
}

// ---------------------------------------------------------------------------

double cosine(std::span<const uint8_t> a, std::span<const uint8_t> b) {
    if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
    int64_t ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const int64_t x = a[i] != 0, y = b[i] != 0;
        ab += x * y;
        aa += x;
        bb += y;
    }
    if (aa == 0 || bb == 0) return 0.0;
    return static_cast<double>(ab) / std::sqrt(static_cast<double>(aa) * static_cast<double>(bb));
}

ItemKnnRecommender::ItemKnnRecommender(std::size_t n_users, std::size_t n_items, std::size_t k_neighbors)
    : Recommender(n_users, n_items),
      k_neighbors_(k_neighbors),
      norms_(n_items, 0),
      shared_(n_items),
      user_items_(n_users),
      incidence_(n_users, std::vector<bool>(n_items, false)),
      neighbors_(n_items) {}

void ItemKnnRecommender::add_incidence(std::size_t user, std::size_t item) {
    if (incidence_[user][item]) return;
    incidence_[user][item] = true;
    for (std::size_t other : user_items_[user]) {
        ++shared_[item][other];
        ++shared_[other][item];
    }
    user_items_[user].push_back(item);
    ++norms_[item];
    dirty_.push_back(item);
}

void ItemKnnRecommender::add_external_users(std::size_t item, int64_t users) {
    if (users <= 0) return;
    norms_[item] += users;
    dirty_.push_back(item);
}

void ItemKnnRecommender::add_external_shared(std::size_t a, std::size_t b, int64_t shared) {
    if (a == b || shared <= 0) return;
    shared_[a][b] += shared;
    shared_[b][a] += shared;
    dirty_.push_back(a);
    dirty_.push_back(b);
}

int64_t ItemKnnRecommender::shared_users(std::size_t i, std::size_t j) const {
    auto it = shared_[i].find(j);
    return it == shared_[i].end() ? 0 : it->second;
}

double ItemKnnRecommender::cosine(std::size_t i, std::size_t j) const {
    if (norms_[i] == 0 || norms_[j] == 0) return 0.0;
    const double s = static_cast<double>(i == j ? norms_[i] : shared_users(i, j));
    return s / std::sqrt(static_cast<double>(norms_[i]) * static_cast<double>(norms_[j]));
}

void ItemKnnRecommender::rebuild_neighbors(std::size_t item) {
    auto& out = neighbors_[item];
    out.clear();
    for (const auto& [other, n] : shared_[item]) {
        if (n <= 0) continue;
        const double c = cosine(item, other);
        if (c > 0.0) out.emplace_back(other, c);
    }
    auto better = [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    };
    if (out.size() > k_neighbors_) {
        std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k_neighbors_), out.end(), better);
        out.resize(k_neighbors_);
    } else {
        std::sort(out.begin(), out.end(), better);
    }
}

void ItemKnnRecommender::rebuild_neighbors() {
    // A norm change moves every cosine in that item's row, so the neighbour
    // lists of all its co-engaged items are stale too.
    std::vector<bool> stale(n_items(), false);
    for (std::size_t item : dirty_) {
        stale[item] = true;
        for (const auto& [other, _] : shared_[item]) stale[other] = true;
    }
    dirty_.clear();
    for (std::size_t i = 0; i < n_items(); ++i)
        if (stale[i]) rebuild_neighbors(i);
}

std::vector<double> ItemKnnRecommender::scores(std::size_t user) const {
    std::vector<double> s(n_items(), 0.0);
    for (std::size_t j = 0; j < n_items(); ++j) {
        if (!is_consumed(user, j)) continue;
        for (const auto& [i, c] : neighbors_[j]) s[i] += c;
    }
    return s;
}

Slate ItemKnnRecommender::recommend(std::size_t user, std::size_t k, rng::Stream&) const {
    return top_k_by_score(scores(user), eligible(user), k);
}

void ItemKnnRecommender::learn(std::span<const StepEvent> events, uint64_t) {
    for (const auto& ev : events) add_incidence(ev.user, ev.item);
    rebuild_neighbors();
}

// ---------------------------------------------------------------------------

double mf_pair_loss(std::span<const double> u, std::span<const double> v, double r, double lambda) {
    const double e = r - dot(u, v);
    return 0.5 * e * e + 0.5 * lambda * (dot(u, u) + dot(v, v));
}

MfGradient mf_pair_gradient(std::span<const double> u, std::span<const double> v, double r, double lambda) {
    const double e = r - dot(u, v);
    MfGradient g{std::vector<double>(u.size()), std::vector<double>(v.size())};
    for (std::size_t f = 0; f < u.size(); ++f) {
        g.du[f] = -e * v[f] + lambda * u[f];
        g.dv[f] = -e * u[f] + lambda * v[f];
    }
    return g;
}

void mf_sgd_step(std::span<double> u, std::span<double> v, double r, double eta, double lambda) {
    const double e = r - dot(u, v);
    for (std::size_t f = 0; f < u.size(); ++f) {
        const double uf = u[f];
        const double vf = v[f];
        u[f] = uf + eta * (e * vf - lambda * uf);
        v[f] = vf + eta * (e * uf - lambda * vf);
    }
}

MatrixFactorizationRecommender::MatrixFactorizationRecommender(std::size_t n_users, std::size_t n_items,
                                                               const RecommenderConfig& config, uint64_t seed)
    : Recommender(n_users, n_items),
      config_(config),
      seed_(seed),
      dim_(static_cast<std::size_t>(config.latent_dim)),
      users_(n_users * dim_),
      items_(n_items * dim_) {
    auto stream = rng::derive(seed, {kMfInit});
    const double scale = 0.1 / std::sqrt(static_cast<double>(dim_));
    for (auto& x : items_) x = (2.0 * stream.uniform() - 1.0) * scale;
    for (auto& x : users_) x = (2.0 * stream.uniform() - 1.0) * scale;
}

std::span<const double> MatrixFactorizationRecommender::user_factors(std::size_t u) const {
    return {users_.data() + u * dim_, dim_};
}
std::span<const double> MatrixFactorizationRecommender::item_factors(std::size_t i) const {
    return {items_.data() + i * dim_, dim_};
}
std::span<double> MatrixFactorizationRecommender::user_factors(std::size_t u) { return {users_.data() + u * dim_, dim_}; }
std::span<double> MatrixFactorizationRecommender::item_factors(std::size_t i) { return {items_.data() + i * dim_, dim_}; }

Slate MatrixFactorizationRecommender::recommend(std::size_t user, std::size_t k, rng::Stream&) const {
    std::vector<double> scores(n_items());
    const auto u = user_factors(user);
    for (std::size_t i = 0; i < n_items(); ++i) scores[i] = dot(u, item_factors(i));
    return top_k_by_score(scores, eligible(user), k);
}

void MatrixFactorizationRecommender::sgd_pass(std::span<const StepEvent> positives, rng::Stream& stream) {
    const double eta = config_.learning_rate;
    const double lambda = config_.regularization;
    for (const auto& ev : positives) {
        mf_sgd_step(user_factors(ev.user), item_factors(ev.item), 1.0, eta, lambda);
        if (config_.negative_ratio == 0) continue;
        const auto pool = eligible(ev.user);
        if (pool.empty()) continue;
        for (int64_t n = 0; n < config_.negative_ratio; ++n) {
            const auto neg = pool[stream.below(pool.size())];
            mf_sgd_step(user_factors(ev.user), item_factors(neg), 0.0, eta, lambda);
        }
    }
}

void MatrixFactorizationRecommender::learn(std::span<const StepEvent> events, uint64_t step) {
    auto stream = rng::derive(seed_, {kMfUpdate, step});
    sgd_pass(events, stream);
}

// ---------------------------------------------------------------------------

RecState::RecState(std::unique_ptr<Recommender> rec, std::vector<std::string> user_ids)
    : rec_(std::move(rec)), user_ids_(std::move(user_ids)) {
    for (std::size_t i = 0; i < user_ids_.size(); ++i)
        if (!index_.emplace(user_ids_[i], i).second)
            throw ValidationError("duplicate user id '" + user_ids_[i] + "'");
}

std::size_t RecState::user_index(const std::string& user_id) const {
    auto it = index_.find(user_id);
    if (it == index_.end()) throw NotFoundError("unknown user '" + user_id + "'");
    return it->second;
}

Slate RecState::recommend(const std::string& user_id, std::size_t k, rng::Stream& stream) const {
    return rec_->recommend(user_index(user_id), k, stream);
}

void RecState::update(std::span<const std::pair<std::string, std::string>> events, const CategorizedCatalog& catalog,
                      uint64_t step) {
    std::vector<StepEvent> resolved;
    resolved.reserve(events.size());
    for (const auto& [user, item] : events) {
        auto idx = catalog.find(item);
        if (!idx) throw NotFoundError("unknown item '" + item + "'");
        resolved.push_back({user_index(user), *idx});
    }
    rec_->update(resolved, step);
}

RecState rec_init(const RecommenderConfig& config, const CategorizedCatalog& catalog,
                  std::span<const SyntheticUser> users, const WorldModel* world, uint64_t seed) {
    validate(config);
    if (catalog.size() == 0) throw ValidationError("recommender requires a nonempty catalog");
    const std::size_t n_users = users.size();
    const std::size_t n_items = catalog.size();

    // Seed histories as (user, item) index pairs, in history order.
    std::vector<StepEvent> history;
    std::vector<std::string> ids;
    ids.reserve(n_users);
    for (std::size_t u = 0; u < n_users; ++u) {
        ids.push_back(users[u].user_id);
        for (const auto& item : users[u].history) {
            auto idx = catalog.find(item);
            if (!idx)
                throw ValidationError("user '" + users[u].user_id + "' history references unknown item '" + item + "'");
            history.push_back({u, *idx});
        }
    }

    std::unique_ptr<Recommender> rec;
    switch (config.algorithm) {
        case RecAlgorithm::random: {
            auto r = std::make_unique<RandomRecommender>(n_users, n_items);
            r->update(history, 0);
            rec = std::move(r);
            break;
        }
        case RecAlgorithm::popularity: {
            auto r = std::make_unique<PopularityRecommender>(n_users, n_items);
            r->update(history, 0);
            rec = std::move(r);
            break;
        }
        case RecAlgorithm::item_knn: {
            auto r = std::make_unique<ItemKnnRecommender>(n_users, n_items,
                                                          static_cast<std::size_t>(config.k_neighbors));
            if (world) {
                for (const auto& [item, n] : world->item_users)
                    if (auto idx = catalog.find(item)) r->add_external_users(*idx, n);
                for (const auto& [a, b, n] : world->co_engagement.pairs()) {
                    auto ia = catalog.find(a);
                    auto ib = catalog.find(b);
                    if (ia && ib) r->add_external_shared(*ia, *ib, n);
                }
            }
            r->update(history, 0);
            rec = std::move(r);
            break;
        }
        case RecAlgorithm::matrix_factorization: {
            auto r = std::make_unique<MatrixFactorizationRecommender>(n_users, n_items, config, seed);
            for (const auto& ev : history) r->seed_consumed(ev.user, ev.item);
            for (int64_t epoch = 0; epoch < config.epochs_init; ++epoch) {
                auto stream = rng::derive(seed, {kMfSgd, static_cast<uint64_t>(epoch)});
                r->sgd_pass(history, stream);
            }
            rec = std::move(r);
            break;
        }
    }
    return RecState(std::move(rec), std::move(ids));
}

}  // namespace artai
