#pragma once
// End-to-end run composition shared by the cli and the service: resolve a run
// configuration document into inputs, simulate, evaluate. Both front ends call
// execute_run so their artifacts are byte-identical for equal configs.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "artai/classify.hpp"
#include "artai/exec.hpp"
#include "artai/ingest.hpp"
#include "artai/riskeval.hpp"
#include "artai/simulate.hpp"
#include "json.hpp"

namespace artai {

// Run configuration document. Relative paths resolve against the directory
// containing the document. Schema (keys):
//   catalog, catalog_format?           catalog file (csv|jsonl, inferred from extension)
//   taxonomy, lexicon?, labels?        or: classification (output of `classify`)
//   interactions?, interactions_format?, column_map?, worldmodel?
//   users? [paths]                     pre-generated users (output of `cohort gen`)
//   simulation {T, k, seed, recommender, choice, dynamics, cohorts}
//     cohorts[i] is an inline cohort spec or a path to a spec file (a single
//     spec, an array of specs, or a {"cohorts": [...]} document)
//   report {window, flagged, cohort_pairs, epsilon}
struct RunConfig {
    std::filesystem::path catalog;
    std::optional<FileFormat> catalog_format;
    std::optional<std::filesystem::path> taxonomy;
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> labels;
    std::optional<std::filesystem::path> classification;
    std::optional<std::filesystem::path> interactions;
    std::optional<FileFormat> interactions_format;
    ColumnMap column_map;
    std::optional<std::filesystem::path> worldmodel;
    std::vector<std::filesystem::path> users;
    SimulationConfig simulation;
    ReportOptions report;
};

RunConfig run_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

// Cohort spec documents: one spec, an array, or {"cohorts": [...]}.
std::vector<CohortSpec> parse_cohort_specs(const nlohmann::json& j, const std::string& where);
std::vector<CohortSpec> load_cohort_specs(const std::filesystem::path& path);

// Classification artifact (`classify` output).
nlohmann::ordered_json classification_to_json(const Classification& c, const Taxonomy& taxonomy);
std::pair<Taxonomy, Classification> classification_from_json(const nlohmann::json& j);

// Users artifact (`cohort gen` output).
nlohmann::ordered_json users_to_json(const std::vector<SyntheticUser>& users, uint64_t seed);
std::vector<SyntheticUser> users_from_json(const nlohmann::json& j);

struct PreparedInputs {
    Taxonomy taxonomy;
    std::vector<ItemRecord> items;
    Classification classification;
    CategorizedCatalog catalog;
    std::optional<WorldModel> world;
};

PreparedInputs prepare_inputs(const RunConfig& config);

ExposureLog run_simulation(const RunConfig& config, const PreparedInputs& inputs,
                           Execution exec = Execution::parallel);

struct RunOutputs {
    std::string log_jsonl;
    std::string report_json;
};

RunOutputs execute_run(const RunConfig& config, Execution exec = Execution::parallel);

// Report text for an already-persisted log.
std::string evaluate_log_text(std::string_view log_jsonl, const ReportOptions& options);

}  // namespace artai
