#pragma once
// Risk metrics over an ExposureLog and the audit report built from them.
// Every function here is a pure function of the log.

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "artai/exposure_log.hpp"
#include "json.hpp"

namespace artai {

// Window w (0-based) covers steps [w*window + 1, min((w+1)*window, T)].
int64_t window_count(int64_t steps, int64_t window);
// max(1, ceil(T / 20)): at most 20 time points.
int64_t default_window(int64_t steps);

struct ExposureShareSeries {
    std::string cohort;  // empty = all cohorts
    int64_t window = 1;
    std::vector<int64_t> impressions;                       // per window
    std::vector<std::optional<std::vector<double>>> rows;   // nullopt = no impressions
};

// `cohort` empty aggregates every cohort. Throws NotFoundError for an unknown cohort.
ExposureShareSeries exposure_shares(const ExposureLog& log, const std::string& cohort, int64_t window);

// Shares over the whole run; nullopt when the cohort saw no impressions.
std::optional<std::vector<double>> overall_shares(const ExposureLog& log, const std::string& cohort);

std::vector<double> amplification(std::span<const double> exposure_share, std::span<const double> interest_share,
                                  double epsilon = 1e-6);

// Mean absolute pairwise difference over twice the mean; 0 for all-zero input.
double gini(std::span<const double> values);

// Base-2 Jensen-Shannon divergence, in [0, 1].
double js_divergence(std::span<const double> p, std::span<const double> q);

// Per-window JSD between two cohorts' exposure shares (nullopt where either is empty).
std::vector<std::optional<double>> divergence_trajectory(const ExposureLog& log, const std::string& cohort_a,
                                                         const std::string& cohort_b, int64_t window);
// Cohorts taken from two logs; throws ValidationError on taxonomy mismatch.
std::vector<std::optional<double>> divergence_trajectory(const ExposureLog& log_a, const std::string& cohort_a,
                                                         const ExposureLog& log_b, const std::string& cohort_b,
                                                         int64_t window);

// OLS slope of value on index.
double trend_slope(std::span<const double> series);
// Missing points are skipped; x is the window index. nullopt with < 2 points.
std::optional<double> trend_slope(std::span<const std::optional<double>> series);

struct Incidence {
    double impression_fraction = 0.0;
    double user_fraction = 0.0;
    double chosen_fraction = 0.0;
};

// user_fraction is over all simulated users in scope (from the log header).
// `cohort` empty = whole log. Unknown categories throw ValidationError.
Incidence incidence(const ExposureLog& log, const std::set<std::string>& flagged, const std::string& cohort = "");

// Impressions per catalog item (zero-impression items included) within the
// given window, or over the whole run when window_index is nullopt.
std::vector<double> item_impressions(const ExposureLog& log, int64_t window, std::optional<int64_t> window_index);

struct PermutationNull {
    double observed = 0.0;
    double mean = 0.0;
    double sd = 0.0;
    double upper(double sigmas = 4.0) const { return mean + sigmas * sd; }
};

// Null distribution of the between-cohort JSD in one window, obtained by
// shuffling cohort labels over the users active in that window.
PermutationNull permutation_null(const ExposureLog& log, const std::string& cohort_a, const std::string& cohort_b,
                                 int64_t window, int64_t window_index, int permutations, uint64_t seed);

struct ReportOptions {
    int64_t window = 0;  // 0 = default_window(T)
    std::vector<std::string> flagged;
    std::vector<std::pair<std::string, std::string>> cohort_pairs;  // empty = auto
    double epsilon = 1e-6;
};

nlohmann::ordered_json report_options_to_json(const ReportOptions& o);
ReportOptions report_options_from_json(const nlohmann::json& j, const std::string& where = "report");

// Machine-readable report. When `taxonomy` is given it must match the log's.
nlohmann::ordered_json build_report(const ExposureLog& log, const ReportOptions& options,
                                    const Taxonomy* taxonomy = nullptr);

// Serialized form shared by the cli and the service (pretty-printed, trailing newline).
std::string report_to_string(const nlohmann::ordered_json& report);

// Human-readable markdown tables.
std::string render_report(const nlohmann::json& report);

// csv `cohort,window,category,share`; empty windows are skipped.
std::string timeseries_csv(const ExposureLog& log, const std::string& cohort, int64_t window);

// Throws ValidationError if `report` lacks required fields or has rows that
// do not sum to one.
void validate_report(const nlohmann::json& report);

}  // namespace artai
