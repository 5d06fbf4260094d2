#pragma once
// Flat-file artifact store:
//   <root>/datasets/<name>/{catalog.<fmt>, interactions.<fmt>, labels.csv}
//   <root>/taxonomies/<name>/{taxonomy.txt, lexicon.csv}
//   <root>/cohorts/<name>.json
//   <root>/runs/<run_id>/{run.json, log.jsonl, report.json}
//   <root>/runs/index.json
// Every write goes through write-temp-then-rename. run.json is the source of
// truth for a run; the index is rebuilt from the run directories at startup.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "artai/synthgen.hpp"
#include "json.hpp"

namespace artai {

enum class RunStatus { queued, running, done, failed };

std::string_view to_string(RunStatus s);
RunStatus parse_run_status(std::string_view s);

struct RunRecord {
    std::string run_id;
    RunStatus status = RunStatus::queued;
    int64_t submitted_ms = 0;
    std::optional<int64_t> started_ms;
    std::optional<int64_t> finished_ms;
    nlohmann::json config;  // the submitted run document
    std::optional<std::string> error_message;
    std::optional<std::string> log_path;
    std::optional<std::string> report_path;
};

nlohmann::ordered_json run_record_to_json(const RunRecord& r);
RunRecord run_record_from_json(const nlohmann::json& j);

struct DatasetUpload {
    std::string name;
    std::string catalog;
    std::string catalog_format = "csv";
    std::optional<std::string> interactions;
    std::string interactions_format = "csv";
    std::optional<std::string> labels;
};

struct TaxonomyUpload {
    std::string name;
    std::vector<std::string> categories;
    std::string lexicon_csv;  // `category,term` rows
};

class Store {
public:
    // Creates the layout if missing and rebuilds the run index; runs left
    // queued or running by a previous process are marked failed.
    explicit Store(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }

    // Names: [A-Za-z0-9._-]+. Duplicate names throw ConflictError.
    void put_dataset(const DatasetUpload& upload);
    void put_taxonomy(const TaxonomyUpload& upload);
    void put_cohort(const CohortSpec& spec);

    bool has_dataset(const std::string& name) const;
    bool has_taxonomy(const std::string& name) const;
    std::optional<CohortSpec> get_cohort(const std::string& name) const;
    std::vector<std::string> taxonomy_categories(const std::string& name) const;  // NotFoundError

    std::filesystem::path dataset_dir(const std::string& name) const { return root_ / "datasets" / name; }
    std::filesystem::path taxonomy_dir(const std::string& name) const { return root_ / "taxonomies" / name; }
    std::filesystem::path run_dir(const std::string& id) const { return root_ / "runs" / id; }

    // Assigns a fresh run_id and persists the queued record.
    RunRecord create_run(const nlohmann::json& config, int64_t now_ms);
    void save_run(const RunRecord& record);
    std::optional<RunRecord> get_run(const std::string& id) const;
    std::vector<RunRecord> list_runs() const;
    // Removes the run directory; false if unknown.
    bool delete_run(const std::string& id);

    // Writes an artifact into the run directory atomically; returns its path.
    std::filesystem::path write_run_artifact(const std::string& id, const std::string& file, std::string_view contents);

    static void validate_name(const std::string& name, const std::string& field);

private:
    void rebuild_index();
    void write_index_locked();

    std::filesystem::path root_;
    mutable std::mutex mu_;
    std::vector<std::string> run_ids_;  // submission order
    uint64_t counter_ = 0;
};

}  // namespace artai
