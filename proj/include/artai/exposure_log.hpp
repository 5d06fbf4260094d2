#pragma once
// The per-step record of slates shown and choices made. It is the single
// input to every risk metric, so its header carries everything those metrics
// need beyond the records themselves (catalog categories, cohort sizes and
// initial interest).

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "artai/classify.hpp"

namespace artai {

struct CohortSummary {
    std::string name;
    int64_t size = 0;
    std::vector<double> mean_initial_interest;  // taxonomy.size() entries; empty when size == 0
    std::optional<std::string> perturbation_target;
    double perturbation_delta = 0.0;

    bool operator==(const CohortSummary&) const = default;
};

struct LogHeader {
    std::string config_hash;
    uint64_t seed = 0;
    int64_t steps = 0;  // T
    int64_t slate_size = 0;  // k
    std::string recommender;
    Taxonomy taxonomy;
    std::vector<CohortSummary> cohorts;
    std::vector<std::string> item_ids;
    std::vector<std::size_t> item_category;

    std::optional<std::size_t> cohort_index(std::string_view name) const;
    bool operator==(const LogHeader&) const = default;
};

struct ChosenItem {
    std::size_t item = 0;  // index into header.item_ids
    int64_t rank = 0;      // 1-based position in the slate

    bool operator==(const ChosenItem&) const = default;
};

struct ExposureRecord {
    int64_t t = 0;
    std::string user;
    std::size_t cohort = 0;  // index into header.cohorts
    std::vector<std::size_t> slate;
    std::optional<ChosenItem> chosen;

    bool operator==(const ExposureRecord&) const = default;
};

struct ExposureLog {
    LogHeader header;
    std::vector<ExposureRecord> records;

    bool operator==(const ExposureLog&) const = default;
};

// jsonl: one header object, then one record per line with keys
// t, user, cohort, slate:[{item,cat}], chosen:{item,rank}|null.
std::string to_jsonl(const ExposureLog& log);
ExposureLog parse_exposure_log(std::string_view text);

// Structural checks: steps in 1..T, each user at most once per step, chosen
// item present in its slate at the stated rank.
void validate_log(const ExposureLog& log);

}  // namespace artai
