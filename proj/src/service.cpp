#include "artai/service.hpp"

#include <chrono>

#include "artai/error.hpp"
#include "artai/io.hpp"
#include "artai/json_util.hpp"
#include "artai/pipeline.hpp"
#include "httplib.h"

namespace artai {

namespace fs = std::filesystem;
using nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

int64_t now_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

void send_json(httplib::Response& res, int status, const ojson& body) {
    res.status = status;
    res.set_content(body.dump(2) + "\n", "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, ojson{{"error", message}});
}

// Maps the project's exception types onto status codes.
template <class Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const ValidationError& e) {
            send_error(res, 400, e.what());
        } catch (const NotFoundError& e) {
            send_error(res, 404, e.what());
        } catch (const ConflictError& e) {
            send_error(res, 409, e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, std::string("invalid payload: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    };
}

json parse_body(const httplib::Request& req) {
    try {
        auto j = json::parse(req.body);
        if (!j.is_object()) throw ValidationError("request body must be a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("request body is not valid JSON: ") + e.what());
    }
}

std::optional<fs::path> find_with_stem(const fs::path& dir, const std::string& stem) {
    for (const char* ext : {".csv", ".jsonl"}) {
        auto p = dir / (stem + ext);
        if (fs::exists(p)) return p;
    }
    return std::nullopt;
}

ojson run_summary(const RunRecord& r) {
    auto j = run_record_to_json(r);
    j.erase("config");
    return j;
}

RunRecord require_run(const Store& store, const std::string& id) {
    auto r = store.get_run(id);
    if (!r) throw NotFoundError("unknown run id '" + id + "'");
    return *r;
}

RunRecord require_done(const Store& store, const std::string& id) {
    auto r = require_run(store, id);
    if (r.status != RunStatus::done)
        throw ConflictError("run '" + id + "' is " + std::string(to_string(r.status)) + ", not done");
    return r;
}

void check_prior_shape(const CohortSpec& spec) {
    // Length checks need a taxonomy and happen at run time.
    if (spec.prior.kind == PriorKind::point) {
        double sum = 0.0;
        for (double v : spec.prior.values) {
            if (v < 0.0) throw ValidationError("field `prior.values`: entries must be >= 0");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("field `prior.values`: point prior must sum to 1");
    } else {
        for (double v : spec.prior.values)
            if (!(v > 0.0)) throw ValidationError("field `prior.values`: dirichlet concentrations must be > 0");
    }
}

}  // namespace

json resolve_run_document(const Store& store, const json& doc) {
    using namespace jsonx;
    require_object(doc, "");
    const auto dataset = get<std::string>(doc, "dataset", "");
    const auto taxonomy = get<std::string>(doc, "taxonomy", "");
    if (!store.has_dataset(dataset)) throw ValidationError("field `dataset`: unknown dataset '" + dataset + "'");
    if (!store.has_taxonomy(taxonomy)) throw ValidationError("field `taxonomy`: unknown taxonomy '" + taxonomy + "'");

    const auto ddir = store.dataset_dir(dataset);
    const auto tdir = store.taxonomy_dir(taxonomy);
    json cfg;
    const auto catalog = find_with_stem(ddir, "catalog");
    if (!catalog) throw ValidationError("dataset '" + dataset + "' has no catalog");
    cfg["catalog"] = fs::absolute(*catalog).string();
    if (auto inter = find_with_stem(ddir, "interactions")) cfg["interactions"] = fs::absolute(*inter).string();
    if (fs::exists(ddir / "labels.csv")) cfg["labels"] = fs::absolute(ddir / "labels.csv").string();
    cfg["taxonomy"] = fs::absolute(tdir / "taxonomy.txt").string();
    cfg["lexicon"] = fs::absolute(tdir / "lexicon.csv").string();

    json sim = require(doc, "simulation", "");
    require_object(sim, "simulation");
    json cohorts = json::array();
    if (auto it = doc.find("cohorts"); it != doc.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field `cohorts`: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& entry = (*it)[i];
            if (entry.is_string()) {
                auto spec = store.get_cohort(entry.get<std::string>());
                if (!spec)
                    throw ValidationError("field `cohorts[" + std::to_string(i) + "]`: unknown cohort '" +
                                          entry.get<std::string>() + "'");
                cohorts.push_back(json::parse(cohort_spec_to_json(*spec).dump()));
            } else {
                cohorts.push_back(entry);
            }
        }
    } else if (sim.contains("cohorts")) {
        cohorts = sim["cohorts"];
    }
    sim["cohorts"] = std::move(cohorts);
    cfg["simulation"] = std::move(sim);
    if (doc.contains("report")) cfg["report"] = doc["report"];
    return cfg;
}

// --- executor -----------------------------------------------------------------

RunExecutor::RunExecutor(Store& store, std::size_t parallelism, std::size_t queue_capacity)
    : store_(store), queue_capacity_(queue_capacity) {
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    for (std::size_t i = 0; i < parallelism; ++i) workers_.emplace_back([this] { worker_loop(); });
}

RunExecutor::~RunExecutor() { shutdown(); }

bool RunExecutor::enqueue(const std::string& run_id) {
    {
        std::lock_guard lock(mu_);
        if (queue_.size() >= queue_capacity_) return false;
        queue_.push_back(run_id);
    }
    cv_.notify_one();
    return true;
}

bool RunExecutor::cancel(const std::string& run_id) {
    std::lock_guard lock(mu_);
    auto it = std::find(queue_.begin(), queue_.end(), run_id);
    if (it == queue_.end()) return false;
    queue_.erase(it);
    idle_cv_.notify_all();
    return true;
}

bool RunExecutor::is_running(const std::string& run_id) const {
    std::lock_guard lock(mu_);
    return std::find(running_.begin(), running_.end(), run_id) != running_.end();
}

void RunExecutor::wait_idle() {
    std::unique_lock lock(mu_);
    idle_cv_.wait(lock, [this] { return queue_.empty() && running_.empty(); });
}

void RunExecutor::shutdown() {
    {
        std::lock_guard lock(mu_);
        if (stopping_ && workers_.empty()) return;
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_)
        if (w.joinable()) w.join();
    workers_.clear();
}

void RunExecutor::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mu_);
            cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
            running_.push_back(id);
        }
        execute(id);
        {
            std::lock_guard lock(mu_);
            running_.erase(std::find(running_.begin(), running_.end(), id));
        }
        idle_cv_.notify_all();
    }
}

void RunExecutor::execute(const std::string& run_id) {
    auto record = store_.get_run(run_id);
    if (!record) return;
    record->status = RunStatus::running;
    record->started_ms = now_ms();
    store_.save_run(*record);
    try {
        const auto cfg = run_config_from_json(resolve_run_document(store_, record->config), store_.root());
        const auto out = execute_run(cfg);
        record->log_path = store_.write_run_artifact(run_id, "log.jsonl", out.log_jsonl).string();
        record->report_path = store_.write_run_artifact(run_id, "report.json", out.report_json).string();
        record->status = RunStatus::done;
    } catch (const std::exception& e) {
        record->status = RunStatus::failed;
        record->error_message = e.what();
    } catch (...) {
        record->status = RunStatus::failed;
        record->error_message = "unknown error";
    }
    record->finished_ms = now_ms();
    store_.save_run(*record);
}

// --- http -----------------------------------------------------------------------

Service::Service(ServiceOptions options)
    : options_(std::move(options)),
      store_(options_.store_root),
      executor_(store_, options_.parallelism, options_.queue_capacity),
      server_(std::make_unique<httplib::Server>()) {
    install_routes();
}

Service::~Service() { stop(); }

int Service::bind() {
    if (options_.port == 0)
        port_ = server_->bind_to_any_port(options_.host);
    else
        port_ = server_->bind_to_port(options_.host, options_.port) ? options_.port : -1;
    if (port_ < 0) throw std::runtime_error("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    return port_;
}

int Service::start() {
    bind();
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void Service::run() {
    bind();
    server_->listen_after_bind();
}

void Service::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
    executor_.shutdown();
}

void Service::install_routes() {
    auto& s = *server_;

    s.Post("/datasets", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        DatasetUpload u;
        u.name = jsonx::get<std::string>(body, "name", "");
        u.catalog = jsonx::get<std::string>(body, "catalog", "");
        u.catalog_format = jsonx::get_or<std::string>(body, "catalog_format", "csv", "");
        if (body.contains("interactions") && !body["interactions"].is_null())
            u.interactions = jsonx::get<std::string>(body, "interactions", "");
        u.interactions_format = jsonx::get_or<std::string>(body, "interactions_format", "csv", "");
        if (body.contains("labels") && !body["labels"].is_null()) u.labels = jsonx::get<std::string>(body, "labels", "");
        store_.put_dataset(u);
        send_json(res, 201, ojson{{"name", u.name}});
    }));

    s.Post("/taxonomies", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        TaxonomyUpload u;
        u.name = jsonx::get<std::string>(body, "name", "");
        const auto& cats = jsonx::require(body, "categories", "");
        if (!cats.is_array()) throw ValidationError("field `categories`: expected an array");
        for (std::size_t i = 0; i < cats.size(); ++i)
            u.categories.push_back(jsonx::as<std::string>(cats[i], "categories[" + std::to_string(i) + "]"));
        if (auto it = body.find("lexicon"); it != body.end() && !it->is_null()) {
            if (it->is_string()) {
                u.lexicon_csv = it->get<std::string>();
            } else if (it->is_object()) {
                for (const auto& [cat, terms] : it->items())
                    for (const auto& t : terms) u.lexicon_csv += cat + "," + jsonx::as<std::string>(t, "lexicon." + cat) + "\n";
            } else {
                throw ValidationError("field `lexicon`: expected csv text or {category: [terms]}");
            }
        }
        store_.put_taxonomy(u);
        send_json(res, 201, ojson{{"name", u.name}, {"categories", u.categories}});
    }));

    s.Get(R"(/taxonomies/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string name = req.matches[1];
        auto cats = store_.taxonomy_categories(name);
        auto all = cats;
        all.emplace_back(kUnknownCategory);
        send_json(res, 200, ojson{{"name", name}, {"categories", cats}, {"all_categories", all}});
    }));

    s.Post("/cohorts", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        const auto spec = cohort_spec_from_json(body, "");
        check_prior_shape(spec);
        if (req.has_param("taxonomy")) {
            const Taxonomy taxonomy(store_.taxonomy_categories(req.get_param_value("taxonomy")));
            validate_cohort_spec(spec, taxonomy, "");
        }
        store_.put_cohort(spec);
        send_json(res, 201, cohort_spec_to_json(spec));
    }));

    s.Get(R"(/cohorts/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string name = req.matches[1];
        auto spec = store_.get_cohort(name);
        if (!spec) throw NotFoundError("unknown cohort '" + name + "'");
        send_json(res, 200, cohort_spec_to_json(*spec));
    }));

    s.Post(R"(/cohorts/([^/]+)/marginal-pair)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string name = req.matches[1];
        auto base = store_.get_cohort(name);
        if (!base) throw NotFoundError("unknown cohort '" + name + "'");
        const auto body = parse_body(req);
        auto [ctrl, perturbed] = make_marginal_pair(*base, jsonx::get<std::string>(body, "target", ""),
                                                    jsonx::get<double>(body, "delta", ""));
        if (store_.get_cohort(ctrl.name)) throw ConflictError("cohort '" + ctrl.name + "' already exists");
        if (store_.get_cohort(perturbed.name)) throw ConflictError("cohort '" + perturbed.name + "' already exists");
        store_.put_cohort(ctrl);
        store_.put_cohort(perturbed);
        send_json(res, 201, ojson{{"cohorts", {cohort_spec_to_json(ctrl), cohort_spec_to_json(perturbed)}}});
    }));

    s.Post("/runs", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto body = parse_body(req);
        (void)resolve_run_document(store_, body);
        auto record = store_.create_run(body, now_ms());
        if (!executor_.enqueue(record.run_id)) {
            store_.delete_run(record.run_id);
            send_error(res, 503, "run queue is full; retry later");
            return;
        }
        send_json(res, 202, ojson{{"run_id", record.run_id}, {"status", "queued"}});
    }));

    s.Get("/runs", guarded([this](const httplib::Request&, httplib::Response& res) {
        ojson runs = ojson::array();
        for (const auto& r : store_.list_runs()) runs.push_back(run_summary(r));
        send_json(res, 200, ojson{{"runs", std::move(runs)}});
    }));

    s.Get(R"(/runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        send_json(res, 200, run_record_to_json(require_run(store_, req.matches[1])));
    }));

    s.Get(R"(/runs/([^/]+)/report)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto r = require_done(store_, req.matches[1]);
        const auto text = io::read_file(*r.report_path);
        if (req.get_param_value("format") == "text") {
            res.set_content(render_report(json::parse(text)), "text/markdown");
        } else {
            res.set_content(text, "application/json");
        }
        res.status = 200;
    }));

    s.Get(R"(/runs/([^/]+)/log)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto r = require_done(store_, req.matches[1]);
        res.set_content(io::read_file(*r.log_path), "application/x-ndjson");
        res.status = 200;
    }));

    s.Get(R"(/runs/([^/]+)/timeseries)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const auto r = require_done(store_, req.matches[1]);
        const auto log = parse_exposure_log(io::read_file(*r.log_path));
        int64_t window = 0;
        if (req.has_param("window")) {
            try {
                window = std::stoll(req.get_param_value("window"));
            } catch (const std::exception&) {
                throw ValidationError("field `window`: expected an integer");
            }
            if (window < 1) throw ValidationError("field `window` must be >= 1");
        } else {
            window = jsonx::get_or<int64_t>(r.config.value("report", json::object()), "window", 0, "report");
        }
        const auto cohort = req.get_param_value("cohort");
        res.set_content(timeseries_csv(log, cohort, window), "text/csv");
        res.status = 200;
    }));

    s.Delete(R"(/runs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        const std::string id = req.matches[1];
        (void)require_run(store_, id);
        executor_.cancel(id);
        if (executor_.is_running(id)) throw ConflictError("run '" + id + "' is running and cannot be deleted yet");
        store_.delete_run(id);
        res.status = 204;
    }));
}

}  // namespace artai
