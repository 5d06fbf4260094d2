#pragma once
// Synthetic user cohorts: interest vectors drawn from a prior, optional
// perturbation toward a target category, and seed browsing histories sampled
// from the interest vector.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "artai/classify.hpp"
#include "artai/exec.hpp"
#include "json.hpp"

namespace artai {

enum class PriorKind { point, dirichlet };

struct InterestPrior {
    PriorKind kind = PriorKind::point;
    // point: simplex vector; dirichlet: concentrations. Length is the number of
    // user categories, or that plus one to give `unknown` an explicit entry.
    std::vector<double> values;

    bool operator==(const InterestPrior&) const = default;
};

struct Perturbation {
    std::string target;
    double delta = 0.0;

    bool operator==(const Perturbation&) const = default;
};

struct CohortSpec {
    std::string name;
    int64_t size = 0;
    InterestPrior prior;
    double p_active = 1.0;
    int64_t n_hist = 0;
    std::optional<Perturbation> perturbation;
    // Substream key; defaults to `name`. Marginal pairs share their base name
    // here so user i of each side consumes identical random draws.
    std::string stream_key;

    const std::string& effective_stream_key() const { return stream_key.empty() ? name : stream_key; }
    bool operator==(const CohortSpec&) const = default;
};

struct SyntheticUser {
    std::string user_id;  // "<cohort>-<index>"
    std::string cohort;
    std::string stream_key;
    uint64_t index = 0;
    std::vector<double> interest;  // taxonomy.size() entries
    double p_active = 1.0;
    std::vector<std::string> history;

    bool operator==(const SyntheticUser&) const = default;
};

// Throws ValidationError with a field path (prefixed by `where`) on any
// violated invariant.
void validate_cohort_spec(const CohortSpec& spec, const Taxonomy& taxonomy, const std::string& where = "cohort");

// Prior values expanded to taxonomy.size() entries.
std::vector<double> expand_prior(const InterestPrior& prior, const Taxonomy& taxonomy, const std::string& where = "prior");

std::vector<double> perturb_interest(std::span<const double> v, std::size_t target, double delta);

std::vector<SyntheticUser> generate_cohort(const CohortSpec& spec, const CategorizedCatalog& catalog, uint64_t seed,
                                           Execution exec = Execution::parallel);

std::pair<CohortSpec, CohortSpec> make_marginal_pair(const CohortSpec& base, const std::string& target, double delta);

inline constexpr int kMaxCategoryRedraws = 1000;

nlohmann::ordered_json cohort_spec_to_json(const CohortSpec& spec);
CohortSpec cohort_spec_from_json(const nlohmann::json& j, const std::string& where = "cohort");

nlohmann::ordered_json user_to_json(const SyntheticUser& u);
SyntheticUser user_from_json(const nlohmann::json& j);

}  // namespace artai
