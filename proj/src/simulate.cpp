#include "artai/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "artai/error.hpp"
#include "artai/ingest.hpp"
#include "artai/json_util.hpp"
#include "artai/simplex.hpp"

namespace artai {

namespace {

constexpr uint64_t kActivity = rng::stable_hash("act");
constexpr uint64_t kChoice = rng::stable_hash("choice");
constexpr uint64_t kRecommend = rng::stable_hash("rec");

std::string_view to_string(ChoiceVariant v) {
    return v == ChoiceVariant::position_cascade ? "position_cascade" : "utility_multinomial";
}

ChoiceVariant parse_choice_variant(const std::string& s, const std::string& where) {
    if (s == "position_cascade") return ChoiceVariant::position_cascade;
    if (s == "utility_multinomial") return ChoiceVariant::utility_multinomial;
    throw ValidationError("field `" + where + "`: expected `position_cascade` or `utility_multinomial`, got '" + s + "'");
}

struct StepOutcome {
    bool active = false;
    Slate slate;
    std::optional<std::size_t> position;
};

}  // namespace

// --- config -----------------------------------------------------------------

void validate(const SimulationConfig& c, const Taxonomy& taxonomy, const std::string& where) {
    auto field = [&](const std::string& f) { return "field `" + where + "." + f + "` "; };
    if (c.steps < 1) throw ValidationError(field("T") + "must be >= 1");
    if (c.slate_size < 1) throw ValidationError(field("k") + "must be >= 1");
    validate(c.recommender, where + ".recommender");
    if (!(c.choice.gamma >= 0.0 && c.choice.gamma <= 1.0)) throw ValidationError(field("choice.gamma") + "must be in [0,1]");
    if (!(c.choice.w0 >= 0.0) || !std::isfinite(c.choice.w0)) throw ValidationError(field("choice.w0") + "must be >= 0");
    if (!(c.dynamics.drift_rate >= 0.0 && c.dynamics.drift_rate <= 1.0))
        throw ValidationError(field("dynamics.drift_rate") + "must be in [0,1]");
    if (c.cohorts.empty()) throw ValidationError(field("cohorts") + "must list at least one cohort");
    std::set<std::string> names;
    bool any_user = false;
    for (std::size_t i = 0; i < c.cohorts.size(); ++i) {
        const auto cw = where + ".cohorts[" + std::to_string(i) + "]";
        validate_cohort_spec(c.cohorts[i], taxonomy, cw);
        if (!names.insert(c.cohorts[i].name).second)
            throw ValidationError("field `" + cw + ".name`: duplicate cohort name '" + c.cohorts[i].name + "'");
        any_user = any_user || c.cohorts[i].size >= 1;
    }
    if (!any_user) throw ValidationError(field("cohorts") + "must contain at least one cohort with size >= 1");
}

nlohmann::ordered_json simulation_config_to_json(const SimulationConfig& c) {
    nlohmann::ordered_json j;
    j["T"] = c.steps;
    j["k"] = c.slate_size;
    j["seed"] = c.seed;
    j["recommender"] = recommender_config_to_json(c.recommender);
    j["choice"] = {{"variant", to_string(c.choice.variant)}, {"gamma", c.choice.gamma}, {"w0", c.choice.w0}};
    j["dynamics"] = {{"drift_rate", c.dynamics.drift_rate}};
    auto& cohorts = j["cohorts"] = nlohmann::ordered_json::array();
    for (const auto& spec : c.cohorts) cohorts.push_back(cohort_spec_to_json(spec));
    return j;
}

SimulationConfig simulation_config_from_json(const nlohmann::json& j, const std::string& where) {
    using namespace jsonx;
    SimulationConfig c;
    c.steps = get<int64_t>(j, "T", where);
    c.slate_size = get<int64_t>(j, "k", where);
    c.seed = get_or<uint64_t>(j, "seed", 0, where);
    c.recommender = recommender_config_from_json(require(j, "recommender", where), join(where, "recommender"));
    if (auto it = j.find("choice"); it != j.end() && !it->is_null()) {
        const auto cw = join(where, "choice");
        c.choice.variant = parse_choice_variant(get_or<std::string>(*it, "variant", "position_cascade", cw), join(cw, "variant"));
        c.choice.gamma = get_or<double>(*it, "gamma", c.choice.gamma, cw);
        c.choice.w0 = get_or<double>(*it, "w0", c.choice.w0, cw);
    }
    if (auto it = j.find("dynamics"); it != j.end() && !it->is_null())
        c.dynamics.drift_rate = get_or<double>(*it, "drift_rate", 0.0, join(where, "dynamics"));
    const auto& cohorts = require(j, "cohorts", where);
    if (!cohorts.is_array()) throw ValidationError("field `" + join(where, "cohorts") + "`: expected an array");
    for (std::size_t i = 0; i < cohorts.size(); ++i)
        c.cohorts.push_back(cohort_spec_from_json(cohorts[i], join(where, "cohorts") + "[" + std::to_string(i) + "]"));

    auto field = [&](const std::string& f) { return "field `" + join(where, f) + "` "; };
    if (c.steps < 1) throw ValidationError(field("T") + "must be >= 1");
    if (c.slate_size < 1) throw ValidationError(field("k") + "must be >= 1");
    if (!(c.choice.gamma >= 0.0 && c.choice.gamma <= 1.0)) throw ValidationError(field("choice.gamma") + "must be in [0,1]");
    if (!(c.choice.w0 >= 0.0)) throw ValidationError(field("choice.w0") + "must be >= 0");
    if (!(c.dynamics.drift_rate >= 0.0 && c.dynamics.drift_rate <= 1.0))
        throw ValidationError(field("dynamics.drift_rate") + "must be in [0,1]");
    return c;
}

std::string config_hash(const SimulationConfig& c) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(rng::stable_hash(simulation_config_to_json(c).dump())));
    return buf;
}

// --- choice models ------------------------------------------------------------

std::optional<std::size_t> choose_position_cascade(std::span<const double> interest,
                                                   std::span<const std::size_t> slate_categories, double gamma,
                                                   rng::Stream& stream) {
    for (std::size_t r = 0; r < slate_categories.size(); ++r) {
        if (stream.bernoulli(interest[slate_categories[r]])) return r;
        if (r + 1 == slate_categories.size() || !stream.bernoulli(gamma)) break;
    }
    return std::nullopt;
}

std::optional<std::size_t> choose_utility_multinomial(std::span<const double> interest,
                                                      std::span<const std::size_t> slate_categories, double gamma,
                                                      double w0, rng::Stream& stream) {
    std::vector<double> weight(slate_categories.size());
    double total = w0;
    double decay = 1.0;
    for (std::size_t r = 0; r < slate_categories.size(); ++r) {
        weight[r] = interest[slate_categories[r]] * decay;
        total += weight[r];
        decay *= gamma;
    }
    if (total <= 0.0) return std::nullopt;
    const double u = stream.uniform() * total;
    double acc = 0.0;
    for (std::size_t r = 0; r < weight.size(); ++r) {
        if (weight[r] <= 0.0) continue;
        acc += weight[r];
        if (u < acc) return r;
    }
    return std::nullopt;
}

std::optional<std::size_t> choose(const ChoiceModelConfig& config, std::span<const double> interest,
                                  std::span<const std::size_t> slate_categories, rng::Stream& stream) {
    if (slate_categories.empty()) return std::nullopt;
    if (config.variant == ChoiceVariant::position_cascade)
        return choose_position_cascade(interest, slate_categories, config.gamma, stream);
    return choose_utility_multinomial(interest, slate_categories, config.gamma, config.w0, stream);
}

std::vector<double> drift_interest(std::span<const double> v, std::size_t consumed_category, double drift_rate) {
    if (consumed_category >= v.size()) throw ValidationError("drift: category index out of range");
    return convex_shift(v, consumed_category, drift_rate);
}

bool is_active(double p_active, rng::Stream& stream) { return stream.bernoulli(p_active); }

rng::Stream user_stream(uint64_t seed, const SyntheticUser& user, int64_t step, StreamPurpose purpose) {
    const uint64_t tag = purpose == StreamPurpose::activity ? kActivity
                         : purpose == StreamPurpose::choice ? kChoice
                                                            : kRecommend;
    return rng::Stream(rng::mix64(seed, {tag, rng::stable_hash(user.stream_key), user.index, static_cast<uint64_t>(step)}));
}

// --- engine ---------------------------------------------------------------------

std::vector<SyntheticUser> generate_users(const SimulationConfig& config, const CategorizedCatalog& catalog,
                                          Execution exec) {
    std::vector<SyntheticUser> users;
    for (const auto& spec : config.cohorts) {
        auto cohort = generate_cohort(spec, catalog, config.seed, exec);
        users.insert(users.end(), std::make_move_iterator(cohort.begin()), std::make_move_iterator(cohort.end()));
    }
    return users;
}

ExposureLog simulate(const SimulationConfig& config, const CategorizedCatalog& catalog, const WorldModel* world,
                     const SimulationOptions& options) {
    validate(config, catalog.taxonomy);
    return simulate_users(config, catalog, generate_users(config, catalog, options.execution), world, options);
}

ExposureLog simulate_users(const SimulationConfig& config, const CategorizedCatalog& catalog,
                           std::vector<SyntheticUser> users, const WorldModel* world,
                           const SimulationOptions& options) {
    const auto& taxonomy = catalog.taxonomy;
    validate(config, taxonomy);

    ExposureLog log;
    auto& header = log.header;
    header.config_hash = config_hash(config);
    header.seed = config.seed;
    header.steps = config.steps;
    header.slate_size = config.slate_size;
    header.recommender = std::string(to_string(config.recommender.algorithm));
    header.taxonomy = taxonomy;
    header.item_ids = catalog.item_ids;
    header.item_category = catalog.category;
    for (const auto& spec : config.cohorts) {
        CohortSummary s;
        s.name = spec.name;
        if (spec.perturbation) {
            s.perturbation_target = spec.perturbation->target;
            s.perturbation_delta = spec.perturbation->delta;
        }
        header.cohorts.push_back(std::move(s));
    }

    std::vector<std::size_t> user_cohort(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        const auto& u = users[i];
        auto ci = header.cohort_index(u.cohort);
        if (!ci) throw ValidationError("user '" + u.user_id + "' belongs to cohort '" + u.cohort + "' not in the config");
        if (u.interest.size() != taxonomy.size() || !on_simplex(u.interest))
            throw ValidationError("user '" + u.user_id + "': interest vector does not match the taxonomy simplex");
        user_cohort[i] = *ci;
        auto& s = header.cohorts[*ci];
        if (s.mean_initial_interest.empty()) s.mean_initial_interest.assign(taxonomy.size(), 0.0);
        for (std::size_t c = 0; c < taxonomy.size(); ++c) s.mean_initial_interest[c] += u.interest[c];
        ++s.size;
    }
    for (auto& s : header.cohorts) {
        for (auto& x : s.mean_initial_interest) x /= static_cast<double>(s.size);
    }

    auto state = rec_init(config.recommender, catalog, users, world, config.seed);
    const auto& rec = state.recommender();
    const auto k = static_cast<std::size_t>(config.slate_size);
    if (options.observer) options.observer(0, users);

    const std::size_t n = users.size();
    std::vector<StepOutcome> outcome(n);
    for (int64_t t = 1; t <= config.steps; ++t) {
        ErrorSlots errors(n);
        auto visit = [&](std::size_t i) {
            try {
                auto& u = users[i];
                auto& out = outcome[i];
                out = StepOutcome{};
                auto act = user_stream(config.seed, u, t, StreamPurpose::activity);
                if (!is_active(u.p_active, act)) return;
                out.active = true;
                auto rec_stream = user_stream(config.seed, u, t, StreamPurpose::recommend);
                out.slate = rec.recommend(i, k, rec_stream);
                if (out.slate.empty()) return;
                std::vector<std::size_t> cats(out.slate.size());
                for (std::size_t r = 0; r < cats.size(); ++r) cats[r] = catalog.category[out.slate[r]];
                auto choice_stream = user_stream(config.seed, u, t, StreamPurpose::choice);
                out.position = choose(config.choice, u.interest, cats, choice_stream);
                if (out.position)
                    u.interest = drift_interest(u.interest, cats[*out.position], config.dynamics.drift_rate);
            } catch (...) {
                errors.capture(i);
            }
        };
        switch (options.execution) {
            case Execution::serial:
                for (std::size_t i = 0; i < n; ++i) visit(i);
                break;
            case Execution::serial_reverse:
                for (std::size_t i = n; i-- > 0;) visit(i);
                break;
            case Execution::parallel: {
                const auto sn = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
                for (std::ptrdiff_t i = 0; i < sn; ++i) visit(static_cast<std::size_t>(i));
                break;
            }
        }
        errors.rethrow_first();

        std::vector<StepEvent> events;
        for (std::size_t i = 0; i < n; ++i) {
            auto& out = outcome[i];
            if (!out.active) continue;
            ExposureRecord r;
            r.t = t;
            r.user = users[i].user_id;
            r.cohort = user_cohort[i];
            if (out.position) {
                r.chosen = ChosenItem{out.slate[*out.position], static_cast<int64_t>(*out.position) + 1};
                events.push_back({i, out.slate[*out.position]});
            }
            r.slate = std::move(out.slate);
            log.records.push_back(std::move(r));
        }
        state.update(events, static_cast<uint64_t>(t));
        if (options.observer) options.observer(t, users);
    }
    return log;
}

}  // namespace artai
