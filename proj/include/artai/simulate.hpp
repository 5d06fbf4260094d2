#pragma once
// Discrete-time engine coupling synthetic cohorts, a recommender under test,
// a user choice model, activity and interest drift.
//
// Per step every user draws activity from its own substream; active users get
// a slate and may choose one item, which drifts their interest. The
// recommender absorbs all of a step's choices after the sweep, so the sweep is
// order-free and runs in parallel with output bit-identical to the serial
// reference.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "artai/classify.hpp"
#include "artai/exec.hpp"
#include "artai/exposure_log.hpp"
#include "artai/recommenders.hpp"
#include "artai/rng.hpp"
#include "artai/synthgen.hpp"
#include "json.hpp"

namespace artai {

struct WorldModel;

enum class ChoiceVariant { position_cascade, utility_multinomial };

struct ChoiceModelConfig {
    ChoiceVariant variant = ChoiceVariant::position_cascade;
    double gamma = 0.9;  // cascade continuation / multinomial positional decay
    double w0 = 0.5;     // no-choice weight (utility_multinomial)

    bool operator==(const ChoiceModelConfig&) const = default;
};

struct DynamicsConfig {
    double drift_rate = 0.0;

    bool operator==(const DynamicsConfig&) const = default;
};

struct SimulationConfig {
    int64_t steps = 1;       // T
    int64_t slate_size = 1;  // k
    uint64_t seed = 0;
    RecommenderConfig recommender;
    ChoiceModelConfig choice;
    DynamicsConfig dynamics;
    std::vector<CohortSpec> cohorts;

    bool operator==(const SimulationConfig&) const = default;
};

void validate(const SimulationConfig& config, const Taxonomy& taxonomy, const std::string& where = "simulation");

nlohmann::ordered_json simulation_config_to_json(const SimulationConfig& c);
SimulationConfig simulation_config_from_json(const nlohmann::json& j, const std::string& where = "simulation");

// Hex FNV-1a of the canonical JSON form.
std::string config_hash(const SimulationConfig& c);

// --- choice models --------------------------------------------------------
// Affinity of slate position r is interest[slate_categories[r]]. Both return
// the 0-based slate position chosen, or nullopt for no choice.

std::optional<std::size_t> choose_position_cascade(std::span<const double> interest,
                                                   std::span<const std::size_t> slate_categories, double gamma,
                                                   rng::Stream& stream);

std::optional<std::size_t> choose_utility_multinomial(std::span<const double> interest,
                                                      std::span<const std::size_t> slate_categories, double gamma,
                                                      double w0, rng::Stream& stream);

std::optional<std::size_t> choose(const ChoiceModelConfig& config, std::span<const double> interest,
                                  std::span<const std::size_t> slate_categories, rng::Stream& stream);

std::vector<double> drift_interest(std::span<const double> v, std::size_t consumed_category, double drift_rate);

bool is_active(double p_active, rng::Stream& stream);

// --- substreams -------------------------------------------------------------

enum class StreamPurpose { activity, choice, recommend };

rng::Stream user_stream(uint64_t seed, const SyntheticUser& user, int64_t step, StreamPurpose purpose);

// --- engine -----------------------------------------------------------------

struct SimulationOptions {
    Execution execution = Execution::parallel;
    // Called after each step's sweep (and once with t = 0 before the first).
    std::function<void(int64_t t, std::span<const SyntheticUser> users)> observer;
};

// Cohorts in config order, users in index order.
std::vector<SyntheticUser> generate_users(const SimulationConfig& config, const CategorizedCatalog& catalog,
                                          Execution exec = Execution::parallel);

ExposureLog simulate(const SimulationConfig& config, const CategorizedCatalog& catalog, const WorldModel* world,
                     const SimulationOptions& options = {});

// Runs with pre-generated users (e.g. loaded from `cohort gen` output); users
// must belong to the config's cohorts.
ExposureLog simulate_users(const SimulationConfig& config, const CategorizedCatalog& catalog,
                           std::vector<SyntheticUser> users, const WorldModel* world,
                           const SimulationOptions& options = {});

}  // namespace artai
