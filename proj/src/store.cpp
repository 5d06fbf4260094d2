#include "artai/store.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "artai/classify.hpp"
#include "artai/error.hpp"
#include "artai/ingest.hpp"
#include "artai/io.hpp"
#include "artai/json_util.hpp"
#include "artai/rng.hpp"

namespace artai {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

std::string_view to_string(RunStatus s) {
    switch (s) {
        case RunStatus::queued: return "queued";
        case RunStatus::running: return "running";
        case RunStatus::done: return "done";
        case RunStatus::failed: return "failed";
    }
    return "failed";
}

RunStatus parse_run_status(std::string_view s) {
    if (s == "queued") return RunStatus::queued;
    if (s == "running") return RunStatus::running;
    if (s == "done") return RunStatus::done;
    if (s == "failed") return RunStatus::failed;
    throw ValidationError("unknown run status '" + std::string(s) + "'");
}

ojson run_record_to_json(const RunRecord& r) {
    auto opt = [](const auto& v) { return v ? ojson(*v) : ojson(nullptr); };
    ojson j;
    j["run_id"] = r.run_id;
    j["status"] = to_string(r.status);
    j["submitted_ms"] = r.submitted_ms;
    j["started_ms"] = opt(r.started_ms);
    j["finished_ms"] = opt(r.finished_ms);
    j["error_message"] = opt(r.error_message);
    j["artifacts"] = {{"log", opt(r.log_path)}, {"report", opt(r.report_path)}};
    j["config"] = r.config;
    return j;
}

RunRecord run_record_from_json(const json& j) {
    auto opt_i = [&](const char* k) -> std::optional<int64_t> {
        if (!j.contains(k) || j.at(k).is_null()) return std::nullopt;
        return j.at(k).get<int64_t>();
    };
    auto opt_s = [](const json& o, const char* k) -> std::optional<std::string> {
        if (!o.contains(k) || o.at(k).is_null()) return std::nullopt;
        return o.at(k).get<std::string>();
    };
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.status = parse_run_status(j.at("status").get<std::string>());
    r.submitted_ms = j.at("submitted_ms").get<int64_t>();
    r.started_ms = opt_i("started_ms");
    r.finished_ms = opt_i("finished_ms");
    r.error_message = opt_s(j, "error_message");
    if (j.contains("artifacts")) {
        r.log_path = opt_s(j.at("artifacts"), "log");
        r.report_path = opt_s(j.at("artifacts"), "report");
    }
    r.config = j.value("config", json::object());
    return r;
}

Store::Store(fs::path root) : root_(std::move(root)) {
    for (const char* d : {"datasets", "taxonomies", "cohorts", "runs"}) fs::create_directories(root_ / d);
    rebuild_index();
}

void Store::validate_name(const std::string& name, const std::string& field) {
    if (name.empty() || name.size() > 128 || name == "." || name == ".." ||
        !std::all_of(name.begin(), name.end(), [](unsigned char c) {
            return std::isalnum(c) || c == '-' || c == '_' || c == '.';
        }))
        throw ValidationError("field `" + field + "`: invalid name '" + name + "' (allowed: letters, digits, . _ -)");
}

void Store::put_dataset(const DatasetUpload& u) {
    validate_name(u.name, "name");
    const auto catalog_fmt = parse_file_format(u.catalog_format);
    const auto items = parse_catalog(u.catalog, catalog_fmt);
    if (items.empty()) throw ValidationError("field `catalog`: catalog is empty");
    if (u.interactions) (void)parse_interactions(*u.interactions, parse_file_format(u.interactions_format));
    if (u.labels) (void)parse_external_labels(*u.labels);

    std::lock_guard lock(mu_);
    const auto dir = dataset_dir(u.name);
    if (fs::exists(dir)) throw ConflictError("dataset '" + u.name + "' already exists");
    const auto tmp = root_ / "datasets" / ("." + u.name + ".incoming");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    io::write_file_atomic(tmp / ("catalog." + u.catalog_format), u.catalog);
    if (u.interactions) io::write_file_atomic(tmp / ("interactions." + u.interactions_format), *u.interactions);
    if (u.labels) io::write_file_atomic(tmp / "labels.csv", *u.labels);
    fs::rename(tmp, dir);
}

void Store::put_taxonomy(const TaxonomyUpload& u) {
    validate_name(u.name, "name");
    const Taxonomy taxonomy(u.categories);
    (void)parse_lexicon(u.lexicon_csv, taxonomy);

    std::lock_guard lock(mu_);
    const auto dir = taxonomy_dir(u.name);
    if (fs::exists(dir)) throw ConflictError("taxonomy '" + u.name + "' already exists");
    const auto tmp = root_ / "taxonomies" / ("." + u.name + ".incoming");
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    std::string text;
    for (const auto& c : u.categories) text += c + "\n";
    io::write_file_atomic(tmp / "taxonomy.txt", text);
    io::write_file_atomic(tmp / "lexicon.csv", u.lexicon_csv);
    fs::rename(tmp, dir);
}

void Store::put_cohort(const CohortSpec& spec) {
    validate_name(spec.name, "name");
    std::lock_guard lock(mu_);
    const auto path = root_ / "cohorts" / (spec.name + ".json");
    if (fs::exists(path)) throw ConflictError("cohort '" + spec.name + "' already exists");
    io::write_file_atomic(path, cohort_spec_to_json(spec).dump(2) + "\n");
}

bool Store::has_dataset(const std::string& name) const {
    validate_name(name, "dataset");
    return fs::is_directory(dataset_dir(name));
}

bool Store::has_taxonomy(const std::string& name) const {
    validate_name(name, "taxonomy");
    return fs::is_directory(taxonomy_dir(name));
}

std::optional<CohortSpec> Store::get_cohort(const std::string& name) const {
    validate_name(name, "cohort");
    const auto path = root_ / "cohorts" / (name + ".json");
    if (!fs::exists(path)) return std::nullopt;
    return cohort_spec_from_json(json::parse(io::read_file(path)));
}

std::vector<std::string> Store::taxonomy_categories(const std::string& name) const {
    if (!has_taxonomy(name)) throw NotFoundError("unknown taxonomy '" + name + "'");
    return load_taxonomy(taxonomy_dir(name) / "taxonomy.txt").user_categories();
}

RunRecord Store::create_run(const json& config, int64_t now_ms) {
    std::lock_guard lock(mu_);
    RunRecord r;
    const auto seed = config.contains("simulation") && config["simulation"].is_object()
                          ? config["simulation"].value("seed", json(0)).dump()
                          : std::string("0");
    for (;;) {
        const uint64_t h = rng::mix64(rng::stable_hash(config.dump()),
                                      {rng::stable_hash(seed), static_cast<uint64_t>(now_ms), ++counter_});
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        r.run_id = std::string(buf, 12);
        if (!fs::exists(run_dir(r.run_id))) break;
    }
    r.status = RunStatus::queued;
    r.submitted_ms = now_ms;
    r.config = config;
    fs::create_directories(run_dir(r.run_id));
    io::write_file_atomic(run_dir(r.run_id) / "run.json", run_record_to_json(r).dump(2) + "\n");
    run_ids_.push_back(r.run_id);
    write_index_locked();
    return r;
}

void Store::save_run(const RunRecord& record) {
    std::lock_guard lock(mu_);
    if (!fs::exists(run_dir(record.run_id))) return;  // deleted meanwhile
    io::write_file_atomic(run_dir(record.run_id) / "run.json", run_record_to_json(record).dump(2) + "\n");
    write_index_locked();
}

std::optional<RunRecord> Store::get_run(const std::string& id) const {
    std::lock_guard lock(mu_);
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos) return std::nullopt;
    const auto path = run_dir(id) / "run.json";
    if (!fs::exists(path)) return std::nullopt;
    return run_record_from_json(json::parse(io::read_file(path)));
}

std::vector<RunRecord> Store::list_runs() const {
    std::vector<std::string> ids;
    {
        std::lock_guard lock(mu_);
        ids = run_ids_;
    }
    std::vector<RunRecord> out;
    for (const auto& id : ids)
        if (auto r = get_run(id)) out.push_back(std::move(*r));
    return out;
}

bool Store::delete_run(const std::string& id) {
    std::lock_guard lock(mu_);
    auto it = std::find(run_ids_.begin(), run_ids_.end(), id);
    if (it == run_ids_.end()) return false;
    run_ids_.erase(it);
    write_index_locked();
    fs::remove_all(run_dir(id));
    return true;
}

fs::path Store::write_run_artifact(const std::string& id, const std::string& file, std::string_view contents) {
    const auto path = run_dir(id) / file;
    io::write_file_atomic(path, contents);
    return path;
}

void Store::rebuild_index() {
    std::lock_guard lock(mu_);
    std::vector<RunRecord> records;
    for (const auto& entry : fs::directory_iterator(root_ / "runs")) {
        if (!entry.is_directory()) continue;
        const auto path = entry.path() / "run.json";
        if (!fs::exists(path)) continue;
        RunRecord r;
        try {
            r = run_record_from_json(json::parse(io::read_file(path)));
        } catch (const std::exception&) {
            continue;
        }
        const bool artifacts_missing =
            r.status == RunStatus::done && (!fs::exists(entry.path() / "log.jsonl") || !fs::exists(entry.path() / "report.json"));
        if (r.status == RunStatus::queued || r.status == RunStatus::running || artifacts_missing) {
            r.status = RunStatus::failed;
            r.error_message = "interrupted: service restarted before the run completed";
            r.log_path.reset();
            r.report_path.reset();
            io::write_file_atomic(path, run_record_to_json(r).dump(2) + "\n");
        }
        // Stray temp files from an interrupted atomic write.
        for (const auto& f : fs::directory_iterator(entry.path()))
            if (f.path().filename().string().find(".tmp.") != std::string::npos) fs::remove(f.path());
        records.push_back(std::move(r));
    }
    std::sort(records.begin(), records.end(), [](const RunRecord& a, const RunRecord& b) {
        return a.submitted_ms != b.submitted_ms ? a.submitted_ms < b.submitted_ms : a.run_id < b.run_id;
    });
    run_ids_.clear();
    for (const auto& r : records) run_ids_.push_back(r.run_id);
    write_index_locked();
}

void Store::write_index_locked() {
    ojson index = ojson::array();
    for (const auto& id : run_ids_) index.push_back(id);
    io::write_file_atomic(root_ / "runs" / "index.json", index.dump() + "\n");
}

}  // namespace artai
