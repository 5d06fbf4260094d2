#include "artai/synthgen.hpp"

#include <cmath>

#include "artai/error.hpp"
#include "artai/json_util.hpp"
#include "artai/rng.hpp"
#include "artai/simplex.hpp"

namespace artai {

namespace {

constexpr uint64_t kCohortStream = rng::stable_hash("cohort");

std::size_t draw_category(std::span<const double> weights, rng::Stream& stream) {
    double total = 0.0;
    for (double w : weights) total += w;
    const double u = stream.uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t c = 0; c < weights.size(); ++c) {
        if (weights[c] <= 0.0) continue;
        last_positive = c;
        acc += weights[c];
        if (u < acc) return c;
    }
    return last_positive;
}

SyntheticUser make_user(const CohortSpec& spec, const std::vector<double>& prior, std::optional<std::size_t> target,
                        const CategorizedCatalog& catalog, uint64_t seed, uint64_t index) {
    auto stream = rng::Stream(rng::mix64(seed, {kCohortStream, rng::stable_hash(spec.effective_stream_key()), index}));

    SyntheticUser u;
    u.user_id = spec.name + "-" + std::to_string(index);
    u.cohort = spec.name;
    u.stream_key = spec.effective_stream_key();
    u.index = index;
    u.p_active = spec.p_active;

    if (spec.prior.kind == PriorKind::point) {
        u.interest = prior;
    } else {
        // Very small concentrations can underflow every gamma draw to zero.
        double total = 0.0;
        for (int attempt = 0; total <= 0.0; ++attempt) {
            if (attempt == kMaxCategoryRedraws)
                throw ValidationError("cohort '" + spec.name + "': dirichlet draws underflowed to zero");
            u.interest.assign(prior.size(), 0.0);
            for (std::size_t c = 0; c < prior.size(); ++c) {
                if (prior[c] <= 0.0) continue;
                u.interest[c] = stream.gamma(prior[c]);
                total += u.interest[c];
            }
        }
        for (auto& x : u.interest) x /= total;
    }
    if (target) u.interest = perturb_interest(u.interest, *target, spec.perturbation->delta);

    u.history.reserve(static_cast<std::size_t>(spec.n_hist));
    for (int64_t slot = 0; slot < spec.n_hist; ++slot) {
        int attempts = 0;
        for (;;) {
            const auto c = draw_category(u.interest, stream);
            const auto& items = catalog.items_by_category[c];
            if (!items.empty()) {
                u.history.push_back(catalog.item_ids[items[stream.below(items.size())]]);
                break;
            }
            if (++attempts >= kMaxCategoryRedraws)
                throw ValidationError("cohort '" + spec.name + "': no catalog items in the categories drawn for user " +
                                      std::to_string(index) + " after " + std::to_string(kMaxCategoryRedraws) +
                                      " attempts");
        }
    }
    return u;
}

PriorKind parse_prior_kind(const std::string& s, const std::string& where) {
    if (s == "point") return PriorKind::point;
    if (s == "dirichlet") return PriorKind::dirichlet;
    throw ValidationError("field `" + where + "`: expected `point` or `dirichlet`, got '" + s + "'");
}

}  // namespace

std::vector<double> expand_prior(const InterestPrior& prior, const Taxonomy& taxonomy, const std::string& where) {
    const auto& v = prior.values;
    const std::string path = where + ".values";
    if (v.size() != taxonomy.user_size() && v.size() != taxonomy.size())
        throw ValidationError("field `" + path + "`: expected " + std::to_string(taxonomy.user_size()) + " or " +
                              std::to_string(taxonomy.size()) + " entries, got " + std::to_string(v.size()));
    std::vector<double> out(v);
    if (prior.kind == PriorKind::point) {
        if (!on_simplex(v)) throw ValidationError("field `" + path + "`: point prior must lie on the simplex");
    } else {
        for (double a : v)
            if (!(a > 0.0) || !std::isfinite(a))
                throw ValidationError("field `" + path + "`: dirichlet concentrations must be > 0");
    }
    out.resize(taxonomy.size(), 0.0);
    return out;
}

void validate_cohort_spec(const CohortSpec& spec, const Taxonomy& taxonomy, const std::string& where) {
    if (spec.name.empty()) throw ValidationError("field `" + where + ".name` must be nonempty");
    if (spec.size < 0) throw ValidationError("field `" + where + ".size` must be >= 0");
    if (!(spec.p_active >= 0.0 && spec.p_active <= 1.0))
        throw ValidationError("field `" + where + ".p_active` must be in [0,1]");
    if (spec.n_hist < 0) throw ValidationError("field `" + where + ".n_hist` must be >= 0");
    (void)expand_prior(spec.prior, taxonomy, where + ".prior");
    if (spec.perturbation) {
        if (!taxonomy.contains(spec.perturbation->target))
            throw ValidationError("field `" + where + ".perturbation.target`: category '" + spec.perturbation->target +
                                  "' is not in the taxonomy");
        if (!(spec.perturbation->delta >= 0.0 && spec.perturbation->delta <= 1.0))
            throw ValidationError("field `" + where + ".perturbation.delta` must be in [0,1]");
    }
}

std::vector<double> perturb_interest(std::span<const double> v, std::size_t target, double delta) {
    if (target >= v.size())
        throw ValidationError("perturbation target index " + std::to_string(target) + " out of range");
    if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("perturbation delta must be in [0,1]");
    return convex_shift(v, target, delta);
}

std::vector<SyntheticUser> generate_cohort(const CohortSpec& spec, const CategorizedCatalog& catalog, uint64_t seed,
                                           Execution exec) {
    const auto& taxonomy = catalog.taxonomy;
    validate_cohort_spec(spec, taxonomy);
    if (spec.n_hist > 0 && catalog.size() == 0)
        throw ValidationError("cohort '" + spec.name + "': n_hist > 0 requires a nonempty catalog");

    const auto prior = expand_prior(spec.prior, taxonomy);
    std::optional<std::size_t> target;
    if (spec.perturbation) target = taxonomy.index_of(spec.perturbation->target);

    const auto n = static_cast<std::size_t>(spec.size);
    std::vector<SyntheticUser> users(n);
    ErrorSlots errors(n);
    auto build = [&](std::size_t i) {
        try {
            users[i] = make_user(spec, prior, target, catalog, seed, i);
        } catch (...) {
            errors.capture(i);
        }
    };
    switch (exec) {
        case Execution::serial:
            for (std::size_t i = 0; i < n; ++i) build(i);
            break;
        case Execution::serial_reverse:
            for (std::size_t i = n; i-- > 0;) build(i);
            break;
        case Execution::parallel: {
            const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
            for (std::ptrdiff_t i = 0; i < sn; ++i) build(static_cast<std::size_t>(i));
            break;
        }
    }
    errors.rethrow_first();
    return users;
}

std::pair<CohortSpec, CohortSpec> make_marginal_pair(const CohortSpec& base, const std::string& target, double delta) {
    if (base.perturbation) throw ValidationError("cohort '" + base.name + "' already has a perturbation");
    if (!(delta >= 0.0 && delta <= 1.0)) throw ValidationError("field `delta` must be in [0,1]");
    if (target.empty()) throw ValidationError("field `target` is required");
    CohortSpec ctrl = base;
    CohortSpec perturbed = base;
    ctrl.stream_key = perturbed.stream_key = base.effective_stream_key();
    ctrl.name = base.name + "-ctrl";
    perturbed.name = base.name + "-perturbed";
    perturbed.perturbation = Perturbation{target, delta};
    return {std::move(ctrl), std::move(perturbed)};
}

nlohmann::ordered_json cohort_spec_to_json(const CohortSpec& spec) {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["size"] = spec.size;
    j["prior"] = {{"kind", spec.prior.kind == PriorKind::point ? "point" : "dirichlet"}, {"values", spec.prior.values}};
    j["p_active"] = spec.p_active;
    j["n_hist"] = spec.n_hist;
    if (spec.perturbation)
        j["perturbation"] = {{"target", spec.perturbation->target}, {"delta", spec.perturbation->delta}};
    else
        j["perturbation"] = nullptr;
    if (!spec.stream_key.empty()) j["stream_key"] = spec.stream_key;
    return j;
}

CohortSpec cohort_spec_from_json(const nlohmann::json& j, const std::string& where) {
    using namespace jsonx;
    CohortSpec spec;
    spec.name = get<std::string>(j, "name", where);
    spec.size = get<int64_t>(j, "size", where);
    const auto& prior = require(j, "prior", where);
    const auto prior_where = join(where, "prior");
    spec.prior.kind = parse_prior_kind(get<std::string>(prior, "kind", prior_where), join(prior_where, "kind"));
    const auto& values = require(prior, "values", prior_where);
    if (!values.is_array()) throw ValidationError("field `" + join(prior_where, "values") + "`: expected an array");
    for (std::size_t i = 0; i < values.size(); ++i)
        spec.prior.values.push_back(as<double>(values[i], join(prior_where, "values") + "[" + std::to_string(i) + "]"));
    spec.p_active = get_or<double>(j, "p_active", 1.0, where);
    spec.n_hist = get_or<int64_t>(j, "n_hist", 0, where);
    if (auto it = j.find("perturbation"); it != j.end() && !it->is_null()) {
        const auto pw = join(where, "perturbation");
        spec.perturbation = Perturbation{get<std::string>(*it, "target", pw), get<double>(*it, "delta", pw)};
    }
    spec.stream_key = get_or<std::string>(j, "stream_key", "", where);
    if (spec.name.empty()) throw ValidationError("field `" + join(where, "name") + "` must be nonempty");
    if (spec.size < 0) throw ValidationError("field `" + join(where, "size") + "` must be >= 0");
    if (!(spec.p_active >= 0.0 && spec.p_active <= 1.0))
        throw ValidationError("field `" + join(where, "p_active") + "` must be in [0,1]");
    if (spec.n_hist < 0) throw ValidationError("field `" + join(where, "n_hist") + "` must be >= 0");
    if (spec.perturbation && !(spec.perturbation->delta >= 0.0 && spec.perturbation->delta <= 1.0))
        throw ValidationError("field `" + join(where, "perturbation.delta") + "` must be in [0,1]");
    return spec;
}

nlohmann::ordered_json user_to_json(const SyntheticUser& u) {
    return nlohmann::ordered_json{{"user_id", u.user_id},   {"cohort", u.cohort},     {"stream_key", u.stream_key},
                                  {"index", u.index},       {"interest", u.interest}, {"p_active", u.p_active},
                                  {"history", u.history}};
}

SyntheticUser user_from_json(const nlohmann::json& j) {
    using namespace jsonx;
    SyntheticUser u;
    u.user_id = get<std::string>(j, "user_id", "user");
    u.cohort = get<std::string>(j, "cohort", "user");
    u.stream_key = get_or<std::string>(j, "stream_key", u.cohort, "user");
    u.index = get<uint64_t>(j, "index", "user");
    u.interest = require(j, "interest", "user").get<std::vector<double>>();
    u.p_active = get<double>(j, "p_active", "user");
    u.history = require(j, "history", "user").get<std::vector<std::string>>();
    if (!on_simplex(u.interest)) throw ValidationError("user '" + u.user_id + "': interest is not on the simplex");
    return u;
}

}  // namespace artai
