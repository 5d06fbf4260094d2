#include "artai/pipeline.hpp"

#include "artai/error.hpp"
#include "artai/io.hpp"
#include "artai/json_util.hpp"

namespace artai {

using nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

json parse_json_document(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + ": malformed JSON: " + e.what());
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

std::optional<fs::path> optional_path(const json& j, const std::string& key, const fs::path& base) {
    auto s = jsonx::get_or<std::string>(j, key, "", "");
    if (s.empty()) return std::nullopt;
    return resolve(base, s);
}

}  // namespace

std::vector<CohortSpec> parse_cohort_specs(const json& j, const std::string& where) {
    std::vector<CohortSpec> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i)
            out.push_back(cohort_spec_from_json(j[i], where + "[" + std::to_string(i) + "]"));
    } else if (j.is_object() && j.contains("cohorts")) {
        return parse_cohort_specs(j.at("cohorts"), jsonx::join(where, "cohorts"));
    } else {
        out.push_back(cohort_spec_from_json(j, where));
    }
    return out;
}

std::vector<CohortSpec> load_cohort_specs(const fs::path& path) {
    return parse_cohort_specs(parse_json_document(io::read_file(path), path.string()), path.filename().string());
}

RunConfig run_config_from_json(const json& j, const fs::path& base_dir) {
    using namespace jsonx;
    require_object(j, "config");
    RunConfig c;
    c.catalog = resolve(base_dir, get<std::string>(j, "catalog", ""));
    if (auto f = get_or<std::string>(j, "catalog_format", "", ""); !f.empty()) c.catalog_format = parse_file_format(f);
    c.taxonomy = optional_path(j, "taxonomy", base_dir);
    c.lexicon = optional_path(j, "lexicon", base_dir);
    c.labels = optional_path(j, "labels", base_dir);
    c.classification = optional_path(j, "classification", base_dir);
    c.interactions = optional_path(j, "interactions", base_dir);
    if (auto f = get_or<std::string>(j, "interactions_format", "", ""); !f.empty())
        c.interactions_format = parse_file_format(f);
    if (auto it = j.find("column_map"); it != j.end() && !it->is_null()) {
        require_object(*it, "column_map");
        for (const auto& [k, v] : it->items()) c.column_map[k] = as<std::string>(v, "column_map." + k);
    }
    c.worldmodel = optional_path(j, "worldmodel", base_dir);
    if (auto it = j.find("users"); it != j.end() && !it->is_null()) {
        for (std::size_t i = 0; i < it->size(); ++i)
            c.users.push_back(resolve(base_dir, as<std::string>((*it)[i], "users[" + std::to_string(i) + "]")));
    }
    if (!c.taxonomy && !c.classification)
        throw ValidationError("field `taxonomy` is required (or `classification`)");

    // Expand cohort file references before parsing the simulation block.
    json sim = require(j, "simulation", "");
    require_object(sim, "simulation");
    if (auto it = sim.find("cohorts"); it != sim.end() && it->is_array()) {
        json expanded = json::array();
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& entry = (*it)[i];
            if (entry.is_string()) {
                for (const auto& spec : load_cohort_specs(resolve(base_dir, entry.get<std::string>())))
                    expanded.push_back(json::parse(cohort_spec_to_json(spec).dump()));
            } else {
                expanded.push_back(entry);
            }
        }
        sim["cohorts"] = std::move(expanded);
    }
    c.simulation = simulation_config_from_json(sim, "simulation");
    if (auto it = j.find("report"); it != j.end()) c.report = report_options_from_json(*it, "report");
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    const auto j = parse_json_document(io::read_file(path), path.string());
    return run_config_from_json(j, path.parent_path());
}

ojson classification_to_json(const Classification& c, const Taxonomy& taxonomy) {
    ojson j;
    j["kind"] = "artai.classification";
    j["taxonomy"] = taxonomy.user_categories();
    auto& results = j["results"] = ojson::array();
    for (const auto& [id, r] : c)
        results.push_back(ojson{{"item_id", r.item_id},
                                {"category", r.category},
                                {"confidence", r.confidence},
                                {"evidence", r.evidence},
                                {"source", to_string(r.source)}});
    return j;
}

std::pair<Taxonomy, Classification> classification_from_json(const json& j) {
    using namespace jsonx;
    if (get_or<std::string>(j, "kind", "", "classification") != "artai.classification")
        throw ValidationError("not a classification document");
    Taxonomy taxonomy(require(j, "taxonomy", "classification").get<std::vector<std::string>>());
    Classification c;
    for (const auto& r : require(j, "results", "classification")) {
        ClassificationResult res;
        res.item_id = get<std::string>(r, "item_id", "classification.results");
        res.category = get<std::string>(r, "category", "classification.results");
        (void)taxonomy.index_of(res.category);
        res.confidence = get<double>(r, "confidence", "classification.results");
        res.evidence = r.value("evidence", std::vector<std::string>{});
        res.source = label_source_from_string(get<std::string>(r, "source", "classification.results"));
        c[res.item_id] = std::move(res);
    }
    return {std::move(taxonomy), std::move(c)};
}

ojson users_to_json(const std::vector<SyntheticUser>& users, uint64_t seed) {
    ojson j;
    j["kind"] = "artai.users";
    j["seed"] = seed;
    auto& arr = j["users"] = ojson::array();
    for (const auto& u : users) arr.push_back(user_to_json(u));
    return j;
}

std::vector<SyntheticUser> users_from_json(const json& j) {
    if (jsonx::get_or<std::string>(j, "kind", "", "users") != "artai.users")
        throw ValidationError("not a users document");
    std::vector<SyntheticUser> users;
    for (const auto& u : jsonx::require(j, "users", "users")) users.push_back(user_from_json(u));
    return users;
}

PreparedInputs prepare_inputs(const RunConfig& config) {
    PreparedInputs in;
    in.items = load_catalog(config.catalog, config.catalog_format.value_or(format_from_path(config.catalog)));
    if (config.classification) {
        auto [tax, cls] = classification_from_json(
            parse_json_document(io::read_file(*config.classification), config.classification->string()));
        in.taxonomy = std::move(tax);
        in.classification = std::move(cls);
    } else {
        in.taxonomy = load_taxonomy(*config.taxonomy);
        validate_catalog_labels(in.items, in.taxonomy);
        const Lexicon lexicon = config.lexicon ? load_lexicon(*config.lexicon, in.taxonomy) : Lexicon{};
        const auto external = config.labels ? load_external_labels(*config.labels) : std::map<std::string, std::string>{};
        in.classification = classify_catalog(in.items, lexicon, in.taxonomy, external);
    }
    in.catalog = categorize(in.items, in.classification, in.taxonomy);

    if (config.worldmodel) {
        in.world = world_model_from_json(parse_json_document(io::read_file(*config.worldmodel), config.worldmodel->string()));
        if (!(in.world->taxonomy == in.taxonomy)) throw ValidationError("worldmodel taxonomy differs from the run taxonomy");
    } else if (config.interactions) {
        const auto events = load_interactions(
            *config.interactions, config.interactions_format.value_or(format_from_path(*config.interactions)),
            config.column_map);
        in.world = build_world_model(in.items, events, labels_of(in.classification), in.taxonomy);
    }
    return in;
}

ExposureLog run_simulation(const RunConfig& config, const PreparedInputs& inputs, Execution exec) {
    SimulationOptions options;
    options.execution = exec;
    const WorldModel* world = inputs.world ? &*inputs.world : nullptr;
    if (config.users.empty()) return simulate(config.simulation, inputs.catalog, world, options);

    std::vector<SyntheticUser> users;
    for (const auto& path : config.users) {
        auto part = users_from_json(parse_json_document(io::read_file(path), path.string()));
        users.insert(users.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    return simulate_users(config.simulation, inputs.catalog, std::move(users), world, options);
}

RunOutputs execute_run(const RunConfig& config, Execution exec) {
    const auto inputs = prepare_inputs(config);
    const auto log = run_simulation(config, inputs, exec);
    RunOutputs out;
    out.log_jsonl = to_jsonl(log);
    out.report_json = report_to_string(build_report(log, config.report, &inputs.taxonomy));
    return out;
}

std::string evaluate_log_text(std::string_view log_jsonl, const ReportOptions& options) {
    const auto log = parse_exposure_log(log_jsonl);
    validate_log(log);
    return report_to_string(build_report(log, options));
}

}  // namespace artai
