// artai command-line front end. Exit codes: 0 ok, 1 usage, 2 validation, 3 runtime.

#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "artai/error.hpp"
#include "artai/io.hpp"
#include "artai/pipeline.hpp"
#include "artai/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace artai;

namespace {

struct ClassifyInputs {
    std::string catalog;
    std::string catalog_format;
    std::string taxonomy;
    std::string lexicon;
    std::string labels;
    std::string classification;
};

void add_classify_inputs(CLI::App* cmd, ClassifyInputs& in, bool allow_classification) {
    cmd->add_option("--catalog", in.catalog, "catalog file (csv or jsonl)")->required();
    cmd->add_option("--catalog-format", in.catalog_format, "csv|jsonl (default: from extension)");
    auto* tax = cmd->add_option("--taxonomy", in.taxonomy, "taxonomy file, one category per line");
    cmd->add_option("--lexicon", in.lexicon, "lexicon csv (category,term)")->needs(tax);
    cmd->add_option("--labels", in.labels, "external label csv (item_id,category)")->needs(tax);
    if (allow_classification) {
        auto* cls = cmd->add_option("--classification", in.classification, "output of `classify`");
        tax->excludes(cls);
    } else {
        tax->required();
    }
}

FileFormat catalog_format(const ClassifyInputs& in) {
    return in.catalog_format.empty() ? format_from_path(in.catalog) : parse_file_format(in.catalog_format);
}

json read_json(const fs::path& path) {
    try {
        return json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError(path.string() + ": malformed JSON: " + e.what());
    }
}

PreparedInputs prepare(const ClassifyInputs& in) {
    RunConfig rc;
    rc.catalog = in.catalog;
    if (!in.catalog_format.empty()) rc.catalog_format = parse_file_format(in.catalog_format);
    if (!in.taxonomy.empty()) rc.taxonomy = in.taxonomy;
    if (!in.lexicon.empty()) rc.lexicon = in.lexicon;
    if (!in.labels.empty()) rc.labels = in.labels;
    if (!in.classification.empty()) rc.classification = in.classification;
    if (!rc.taxonomy && !rc.classification) throw CLI::RequiredError("--taxonomy or --classification");
    return prepare_inputs(rc);
}

void emit(const std::string& out, std::string_view text) {
    if (out.empty() || out == "-")
        std::cout << text;
    else
        io::write_file_atomic(out, text);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"artai: societal-risk evaluation of recommender algorithms"};
    app.require_subcommand(1);

    // ingest
    ClassifyInputs ingest_in;
    std::string ingest_interactions, ingest_format, ingest_out;
    std::vector<std::string> ingest_columns;
    double ingest_smoothing = 1.0;
    int64_t ingest_bin = kDefaultBinSeconds;
    auto* ingest = app.add_subcommand("ingest", "interaction log + catalog -> worldmodel");
    add_classify_inputs(ingest, ingest_in, true);
    ingest->add_option("--interactions", ingest_interactions, "interaction log")->required();
    ingest->add_option("--format", ingest_format, "csv|jsonl (default: from extension)");
    ingest->add_option("--column", ingest_columns, "column mapping canonical=source (repeatable)");
    ingest->add_option("--smoothing", ingest_smoothing, "additive smoothing for interest estimates");
    ingest->add_option("--bin-seconds", ingest_bin, "activity-rate bin width");
    ingest->add_option("--out", ingest_out, "output file (default stdout)");

    // classify
    ClassifyInputs classify_in;
    std::string classify_out;
    bool classify_serial = false;
    auto* classify = app.add_subcommand("classify", "catalog + taxonomy + lexicon -> classification");
    add_classify_inputs(classify, classify_in, false);
    classify->add_option("--out", classify_out, "output file (default stdout)");
    classify->add_flag("--serial", classify_serial, "use the serial reference path");

    // cohort gen / marginal-pair
    auto* cohort = app.add_subcommand("cohort", "cohort tools");
    cohort->require_subcommand(1);
    ClassifyInputs gen_in;
    std::string gen_spec, gen_out;
    uint64_t gen_seed = 0;
    auto* gen = cohort->add_subcommand("gen", "cohort spec + seed -> users");
    gen->add_option("--spec", gen_spec, "cohort spec file (one spec, an array, or {\"cohorts\": [...]})")->required();
    add_classify_inputs(gen, gen_in, true);
    gen->add_option("--seed", gen_seed, "rng seed")->required();
    gen->add_option("--out", gen_out, "output file (default stdout)");

    std::string mp_spec, mp_target, mp_out;
    double mp_delta = 0.0;
    auto* mp = cohort->add_subcommand("marginal-pair", "cohort spec -> ctrl/perturbed pair");
    mp->add_option("--spec", mp_spec, "base cohort spec file")->required();
    mp->add_option("--target", mp_target, "category receiving the shift")->required();
    mp->add_option("--delta", mp_delta, "shift size in [0, 1]")->required();
    mp->add_option("--out", mp_out, "output file (default stdout)");

    // simulate
    std::string sim_config, sim_out, sim_report;
    std::optional<uint64_t> sim_seed;
    bool sim_serial = false;
    auto* sim = app.add_subcommand("simulate", "run config -> exposure log");
    sim->add_option("--config", sim_config, "run configuration file")->required();
    sim->add_option("--seed", sim_seed, "override simulation.seed");
    sim->add_option("--out", sim_out, "exposure log output (default stdout)");
    sim->add_option("--report", sim_report, "also write the risk report here");
    sim->add_flag("--serial", sim_serial, "serial user sweep");

    // evaluate
    std::string ev_log, ev_config, ev_out, ev_timeseries, ev_cohort;
    std::vector<std::string> ev_flagged;
    std::optional<int64_t> ev_window;
    std::optional<double> ev_epsilon;
    auto* ev = app.add_subcommand("evaluate", "exposure log -> risk report");
    ev->add_option("--log", ev_log, "exposure log")->required();
    ev->add_option("--config", ev_config, "run configuration (report options are read from it)");
    ev->add_option("--window", ev_window, "window length in steps");
    ev->add_option("--flag", ev_flagged, "flagged category (repeatable)");
    ev->add_option("--epsilon", ev_epsilon, "amplification denominator floor");
    ev->add_option("--out", ev_out, "report output (default stdout)");
    ev->add_option("--timeseries", ev_timeseries, "also write the share time series csv here");
    ev->add_option("--cohort", ev_cohort, "restrict the time series to one cohort");

    // report render
    auto* report = app.add_subcommand("report", "report tools");
    report->require_subcommand(1);
    std::string render_in, render_out;
    auto* render = report->add_subcommand("render", "report -> human-readable tables");
    render->add_option("--report", render_in, "report file")->required();
    render->add_option("--out", render_out, "output file (default stdout)");

    // serve
    ServiceOptions serve_opts;
    std::string serve_store;
    auto* serve = app.add_subcommand("serve", "start the HTTP service");
    serve->add_option("--store", serve_store, "store root (default $ARTAI_STORE)");
    serve->add_option("--host", serve_opts.host, "bind address");
    serve->add_option("--port", serve_opts.port, "port");
    serve->add_option("--parallelism", serve_opts.parallelism, "concurrent runs")->check(CLI::PositiveNumber);
    serve->add_option("--queue-capacity", serve_opts.queue_capacity, "max queued runs")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        std::cerr << (e.get_exit_code() == 0 ? "" : "\n") << app.help();
        return 1;
    }

    try {
        if (*ingest) {
            auto in = prepare(ingest_in);
            ColumnMap cmap;
            for (const auto& c : ingest_columns) {
                auto eq = c.find('=');
                if (eq == std::string::npos) throw CLI::ValidationError("--column", "expected canonical=source");
                cmap[c.substr(0, eq)] = c.substr(eq + 1);
            }
            const auto fmt = ingest_format.empty() ? format_from_path(ingest_interactions) : parse_file_format(ingest_format);
            const auto events = load_interactions(ingest_interactions, fmt, cmap);
            const auto wm = build_world_model(in.items, events, labels_of(in.classification), in.taxonomy,
                                              WorldModelOptions{ingest_smoothing, ingest_bin});
            emit(ingest_out, world_model_to_json(wm).dump(2) + "\n");
        } else if (*classify) {
            const auto taxonomy = load_taxonomy(classify_in.taxonomy);
            const auto items = load_catalog(classify_in.catalog, catalog_format(classify_in));
            validate_catalog_labels(items, taxonomy);
            const Lexicon lexicon = classify_in.lexicon.empty() ? Lexicon{} : load_lexicon(classify_in.lexicon, taxonomy);
            const auto labels = classify_in.labels.empty() ? std::map<std::string, std::string>{}
                                                           : load_external_labels(classify_in.labels);
            const auto cls = classify_serial ? classify_catalog_serial(items, lexicon, taxonomy, labels)
                                             : classify_catalog(items, lexicon, taxonomy, labels);
            emit(classify_out, classification_to_json(cls, taxonomy).dump(2) + "\n");
        } else if (*gen) {
            const auto in = prepare(gen_in);
            std::vector<SyntheticUser> users;
            for (const auto& spec : load_cohort_specs(gen_spec)) {
                auto part = generate_cohort(spec, in.catalog, gen_seed);
                users.insert(users.end(), part.begin(), part.end());
            }
            emit(gen_out, users_to_json(users, gen_seed).dump(2) + "\n");
        } else if (*mp) {
            const auto specs = load_cohort_specs(mp_spec);
            if (specs.size() != 1) throw ValidationError(mp_spec + ": expected exactly one cohort spec");
            const auto [ctrl, perturbed] = make_marginal_pair(specs[0], mp_target, mp_delta);
            nlohmann::ordered_json out;
            out["cohorts"] = {cohort_spec_to_json(ctrl), cohort_spec_to_json(perturbed)};
            emit(mp_out, out.dump(2) + "\n");
        } else if (*sim) {
            auto rc = load_run_config(sim_config);
            if (sim_seed) rc.simulation.seed = *sim_seed;
            const auto out = execute_run(rc, sim_serial ? Execution::serial : Execution::parallel);
            emit(sim_out, out.log_jsonl);
            if (!sim_report.empty()) io::write_file_atomic(sim_report, out.report_json);
        } else if (*ev) {
            ReportOptions options;
            if (!ev_config.empty()) options = load_run_config(ev_config).report;
            if (ev_window) options.window = *ev_window;
            if (!ev_flagged.empty()) options.flagged = ev_flagged;
            if (ev_epsilon) options.epsilon = *ev_epsilon;
            const auto text = io::read_file(ev_log);
            emit(ev_out, evaluate_log_text(text, options));
            if (!ev_timeseries.empty()) {
                const auto log = parse_exposure_log(text);
                const auto window = options.window > 0 ? options.window : default_window(log.header.steps);
                io::write_file_atomic(ev_timeseries, timeseries_csv(log, ev_cohort, window));
            }
        } else if (*render) {
            const auto report_json = read_json(render_in);
            validate_report(report_json);
            emit(render_out, render_report(report_json));
        } else if (*serve) {
            if (serve_store.empty()) {
                const char* env = std::getenv("ARTAI_STORE");
                if (!env || !*env) throw CLI::RequiredError("--store (or ARTAI_STORE)");
                serve_store = env;
            }
            serve_opts.store_root = serve_store;
            Service service(serve_opts);
            service.run();
        }
    } catch (const CLI::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const NotFoundError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const ConflictError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
