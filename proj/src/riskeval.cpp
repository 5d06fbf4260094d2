#include "artai/riskeval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "artai/error.hpp"
#include "artai/json_util.hpp"
#include "artai/rng.hpp"

namespace artai {

using ojson = nlohmann::ordered_json;

namespace {

std::optional<std::size_t> cohort_filter(const ExposureLog& log, const std::string& cohort) {
    if (cohort.empty()) return std::nullopt;
    auto ci = log.header.cohort_index(cohort);
    if (!ci) throw NotFoundError("unknown cohort '" + cohort + "'");
    return ci;
}

int64_t window_of(int64_t t, int64_t window) { return (t - 1) / window; }

void check_window(int64_t window) {
    if (window < 1) throw ValidationError("window must be >= 1");
}

// counts[w][c]
std::vector<std::vector<int64_t>> category_counts(const ExposureLog& log, std::optional<std::size_t> cohort,
                                                  int64_t window) {
    const auto n_windows = static_cast<std::size_t>(window_count(log.header.steps, window));
    const auto& h = log.header;
    std::vector<std::vector<int64_t>> counts(n_windows, std::vector<int64_t>(h.taxonomy.size(), 0));
    for (const auto& r : log.records) {
        if (cohort && r.cohort != *cohort) continue;
        auto& row = counts[static_cast<std::size_t>(window_of(r.t, window))];
        for (std::size_t item : r.slate) ++row[h.item_category[item]];
    }
    return counts;
}

std::optional<std::vector<double>> normalize(std::span<const int64_t> counts) {
    const int64_t total = std::accumulate(counts.begin(), counts.end(), int64_t{0});
    if (total == 0) return std::nullopt;
    std::vector<double> out(counts.size());
    for (std::size_t c = 0; c < counts.size(); ++c) out[c] = static_cast<double>(counts[c]) / static_cast<double>(total);
    return out;
}

double kl_to_mixture(std::span<const double> p, std::span<const double> m) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) s += p[i] * std::log2(p[i] / m[i]);
    return s;
}

std::string fmt_double(double x, const char* spec = "%.4f") {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

std::string shortest(double x) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, ptr);
}

ojson optional_vector(const std::optional<std::vector<double>>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson optional_number(const std::optional<double>& v) { return v ? ojson(*v) : ojson(nullptr); }

std::vector<std::pair<std::string, std::string>> auto_pairs(const LogHeader& h) {
    std::vector<std::pair<std::string, std::string>> pairs;
    const std::string ctrl = "-ctrl";
    for (const auto& c : h.cohorts) {
        if (c.name.size() <= ctrl.size() || c.name.compare(c.name.size() - ctrl.size(), ctrl.size(), ctrl) != 0)
            continue;
        const auto base = c.name.substr(0, c.name.size() - ctrl.size());
        if (h.cohort_index(base + "-perturbed")) pairs.emplace_back(c.name, base + "-perturbed");
    }
    if (!pairs.empty()) return pairs;
    for (std::size_t a = 0; a < h.cohorts.size(); ++a)
        for (std::size_t b = a + 1; b < h.cohorts.size(); ++b) pairs.emplace_back(h.cohorts[a].name, h.cohorts[b].name);
    return pairs;
}

}  // namespace

int64_t window_count(int64_t steps, int64_t window) {
    check_window(window);
    return steps <= 0 ? 0 : (steps + window - 1) / window;
}

int64_t default_window(int64_t steps) { return std::max<int64_t>(1, (steps + 19) / 20); }

ExposureShareSeries exposure_shares(const ExposureLog& log, const std::string& cohort, int64_t window) {
    check_window(window);
    const auto filter = cohort_filter(log, cohort);
    ExposureShareSeries s;
    s.cohort = cohort;
    s.window = window;
    for (const auto& row : category_counts(log, filter, window)) {
        s.impressions.push_back(std::accumulate(row.begin(), row.end(), int64_t{0}));
        s.rows.push_back(normalize(row));
    }
    return s;
}

std::optional<std::vector<double>> overall_shares(const ExposureLog& log, const std::string& cohort) {
    const auto filter = cohort_filter(log, cohort);
    std::vector<int64_t> counts(log.header.taxonomy.size(), 0);
    for (const auto& r : log.records) {
        if (filter && r.cohort != *filter) continue;
        for (std::size_t item : r.slate) ++counts[log.header.item_category[item]];
    }
    return normalize(counts);
}

std::vector<double> amplification(std::span<const double> exposure_share, std::span<const double> interest_share,
                                  double epsilon) {
    if (exposure_share.size() != interest_share.size()) throw ValidationError("amplification: dimension mismatch");
    if (!(epsilon > 0.0)) throw ValidationError("amplification: epsilon must be > 0");
    std::vector<double> a(exposure_share.size());
    for (std::size_t c = 0; c < a.size(); ++c) a[c] = exposure_share[c] / std::max(interest_share[c], epsilon);
    return a;
}

double gini(std::span<const double> values) {
    if (values.empty()) throw ValidationError("gini: empty input");
    std::vector<double> x(values.begin(), values.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    const double sum = std::accumulate(x.begin(), x.end(), 0.0);
    if (sum <= 0.0) return 0.0;
    // sum_{i,j} |x_i - x_j| = 2 * sum_i (2i - n + 1) x_(i) for ascending x, 0-based i
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (2.0 * static_cast<double>(i) - n + 1.0) * x[i];
    return (2.0 * acc) / (2.0 * n * sum);
}

double js_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) throw ValidationError("js_divergence: dimension mismatch");
    std::vector<double> m(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
    const double js = 0.5 * kl_to_mixture(p, m) + 0.5 * kl_to_mixture(q, m);
    return std::clamp(js, 0.0, 1.0);
}

std::vector<std::optional<double>> divergence_trajectory(const ExposureLog& log, const std::string& cohort_a,
                                                         const std::string& cohort_b, int64_t window) {
    return divergence_trajectory(log, cohort_a, log, cohort_b, window);
}

std::vector<std::optional<double>> divergence_trajectory(const ExposureLog& log_a, const std::string& cohort_a,
                                                         const ExposureLog& log_b, const std::string& cohort_b,
                                                         int64_t window) {
    if (!(log_a.header.taxonomy == log_b.header.taxonomy))
        throw ValidationError("divergence_trajectory: taxonomy mismatch between logs");
    const auto a = exposure_shares(log_a, cohort_a, window);
    const auto b = exposure_shares(log_b, cohort_b, window);
    const std::size_t n = std::max(a.rows.size(), b.rows.size());
    std::vector<std::optional<double>> out(n);
    for (std::size_t w = 0; w < n; ++w) {
        if (w < a.rows.size() && w < b.rows.size() && a.rows[w] && b.rows[w])
            out[w] = js_divergence(*a.rows[w], *b.rows[w]);
    }
    return out;
}

double trend_slope(std::span<const double> series) {
    if (series.size() < 2) throw ValidationError("trend_slope: need at least 2 points");
    const double n = static_cast<double>(series.size());
    const double mean_x = (n - 1.0) / 2.0;
    const double mean_y = std::accumulate(series.begin(), series.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double dx = static_cast<double>(i) - mean_x;
        sxy += dx * (series[i] - mean_y);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

std::optional<double> trend_slope(std::span<const std::optional<double>> series) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (!series[i]) continue;
        xs.push_back(static_cast<double>(i));
        ys.push_back(*series[i]);
    }
    if (xs.size() < 2) return std::nullopt;
    const double n = static_cast<double>(xs.size());
    const double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    const double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
    }
    return sxy / sxx;
}

Incidence incidence(const ExposureLog& log, const std::set<std::string>& flagged, const std::string& cohort) {
    const auto& h = log.header;
    std::vector<bool> is_flagged(h.taxonomy.size(), false);
    for (const auto& c : flagged) is_flagged[h.taxonomy.index_of(c)] = true;
    const auto filter = cohort_filter(log, cohort);

    int64_t impressions = 0, flagged_impressions = 0, chosen = 0, flagged_chosen = 0;
    std::set<std::string> exposed;
    for (const auto& r : log.records) {
        if (filter && r.cohort != *filter) continue;
        for (std::size_t item : r.slate) {
            ++impressions;
            if (is_flagged[h.item_category[item]]) {
                ++flagged_impressions;
                exposed.insert(r.user);
            }
        }
        if (r.chosen) {
            ++chosen;
            if (is_flagged[h.item_category[r.chosen->item]]) ++flagged_chosen;
        }
    }
    int64_t users = 0;
    for (std::size_t c = 0; c < h.cohorts.size(); ++c)
        if (!filter || *filter == c) users += h.cohorts[c].size;

    Incidence inc;
    if (impressions > 0) inc.impression_fraction = static_cast<double>(flagged_impressions) / static_cast<double>(impressions);
    if (users > 0) inc.user_fraction = static_cast<double>(exposed.size()) / static_cast<double>(users);
    if (chosen > 0) inc.chosen_fraction = static_cast<double>(flagged_chosen) / static_cast<double>(chosen);
    return inc;
}

std::vector<double> item_impressions(const ExposureLog& log, int64_t window, std::optional<int64_t> window_index) {
    check_window(window);
    std::vector<double> counts(log.header.item_ids.size(), 0.0);
    for (const auto& r : log.records) {
        if (window_index && window_of(r.t, window) != *window_index) continue;
        for (std::size_t item : r.slate) counts[item] += 1.0;
    }
    return counts;
}

PermutationNull permutation_null(const ExposureLog& log, const std::string& cohort_a, const std::string& cohort_b,
                                 int64_t window, int64_t window_index, int permutations, uint64_t seed) {
    check_window(window);
    const auto a = *cohort_filter(log, cohort_a);
    const auto b = *cohort_filter(log, cohort_b);
    const std::size_t k = log.header.taxonomy.size();

    // Per-user category counts for users of either cohort with impressions in the window.
    std::map<std::string, std::pair<bool, std::vector<int64_t>>> per_user;
    for (const auto& r : log.records) {
        if ((r.cohort != a && r.cohort != b) || window_of(r.t, window) != window_index) continue;
        auto [it, _] = per_user.try_emplace(r.user, r.cohort == a, std::vector<int64_t>(k, 0));
        for (std::size_t item : r.slate) ++it->second.second[log.header.item_category[item]];
    }
    std::vector<std::vector<int64_t>> units;
    std::vector<bool> labels;
    for (auto& [_, v] : per_user) {
        labels.push_back(v.first);
        units.push_back(std::move(v.second));
    }

    auto jsd_for = [&](const std::vector<bool>& lab) -> std::optional<double> {
        std::vector<int64_t> ca(k, 0), cb(k, 0);
        for (std::size_t u = 0; u < units.size(); ++u)
            for (std::size_t c = 0; c < k; ++c) (lab[u] ? ca : cb)[c] += units[u][c];
        auto pa = normalize(ca);
        auto pb = normalize(cb);
        if (!pa || !pb) return std::nullopt;
        return js_divergence(*pa, *pb);
    };

    PermutationNull result;
    result.observed = jsd_for(labels).value_or(0.0);
    if (permutations <= 0) return result;
    auto stream = rng::derive(seed, {rng::stable_hash("permutation-null"), static_cast<uint64_t>(window_index)});
    std::vector<double> null;
    null.reserve(static_cast<std::size_t>(permutations));
    auto shuffled = labels;
    for (int p = 0; p < permutations; ++p) {
        for (std::size_t i = shuffled.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(stream.below(i));
            const bool tmp = shuffled[i - 1];
            shuffled[i - 1] = shuffled[j];
            shuffled[j] = tmp;
        }
        if (auto v = jsd_for(shuffled)) null.push_back(*v);
    }
    if (null.empty()) return result;
    const double n = static_cast<double>(null.size());
    result.mean = std::accumulate(null.begin(), null.end(), 0.0) / n;
    double var = 0.0;
    for (double v : null) var += (v - result.mean) * (v - result.mean);
    result.sd = null.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    return result;
}

// --- report -------------------------------------------------------------------

nlohmann::ordered_json report_options_to_json(const ReportOptions& o) {
    ojson j;
    j["window"] = o.window;
    j["flagged"] = o.flagged;
    auto& pairs = j["cohort_pairs"] = ojson::array();
    for (const auto& [a, b] : o.cohort_pairs) pairs.push_back(ojson::array({a, b}));
    j["epsilon"] = o.epsilon;
    return j;
}

ReportOptions report_options_from_json(const nlohmann::json& j, const std::string& where) {
    using namespace jsonx;
    ReportOptions o;
    if (j.is_null()) return o;
    o.window = get_or<int64_t>(j, "window", 0, where);
    o.epsilon = get_or<double>(j, "epsilon", o.epsilon, where);
    if (auto it = j.find("flagged"); it != j.end() && !it->is_null()) {
        if (!it->is_array()) throw ValidationError("field `" + join(where, "flagged") + "`: expected an array");
        for (std::size_t i = 0; i < it->size(); ++i)
            o.flagged.push_back(as<std::string>((*it)[i], join(where, "flagged") + "[" + std::to_string(i) + "]"));
    }
    if (auto it = j.find("cohort_pairs"); it != j.end() && !it->is_null()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& p = (*it)[i];
            const auto pw = join(where, "cohort_pairs") + "[" + std::to_string(i) + "]";
            if (!p.is_array() || p.size() != 2) throw ValidationError("field `" + pw + "`: expected [cohort_a, cohort_b]");
            o.cohort_pairs.emplace_back(as<std::string>(p[0], pw + "[0]"), as<std::string>(p[1], pw + "[1]"));
        }
    }
    if (o.window < 0) throw ValidationError("field `" + join(where, "window") + "` must be >= 0 (0 = default)");
    if (!(o.epsilon > 0.0)) throw ValidationError("field `" + join(where, "epsilon") + "` must be > 0");
    return o;
}

nlohmann::ordered_json build_report(const ExposureLog& log, const ReportOptions& options, const Taxonomy* taxonomy) {
    const auto& h = log.header;
    if (taxonomy && !(*taxonomy == h.taxonomy)) throw ValidationError("report taxonomy does not match the log's");
    const int64_t window = options.window > 0 ? options.window : default_window(h.steps);
    const int64_t n_windows = window_count(h.steps, window);
    const std::set<std::string> flagged(options.flagged.begin(), options.flagged.end());
    for (const auto& f : flagged) (void)h.taxonomy.index_of(f);
    const auto& cats = h.taxonomy.names();

    ojson report;
    report["kind"] = "artai.risk_report";
    report["version"] = 1;
    report["metadata"] = {{"config_hash", h.config_hash},
                          {"seed", h.seed},
                          {"T", h.steps},
                          {"k", h.slate_size},
                          {"recommender", h.recommender},
                          {"window", window},
                          {"n_windows", n_windows},
                          {"epsilon", options.epsilon},
                          {"flagged", options.flagged}};
    report["taxonomy"] = cats;
    report["no_activity"] = log.records.empty();
    report["notes"] = ojson::array(
        {"Exposure shares count impressions: every appearance of an item in a slate, by its category.",
         "Amplification = cohort exposure share / cohort mean initial interest share (denominator floored at epsilon).",
         "Divergence is the base-2 Jensen-Shannon divergence between two cohorts' per-window exposure shares.",
         "Trend slopes are least-squares slopes of share against window index over non-empty windows.",
         "Marginal pairs differ only by a convex interest shift toward the target category; histories differ only "
         "through that shifted sampling distribution.",
         "These metrics operationalise exposure proportion, change over time and flagged-content incidence; they "
         "are descriptive, not causal."});

    auto& cohorts = report["cohorts"] = ojson::array();
    for (const auto& c : h.cohorts) {
        ojson cj;
        cj["name"] = c.name;
        cj["size"] = c.size;
        cj["mean_initial_interest"] = c.mean_initial_interest;
        cj["perturbation"] = c.perturbation_target ? ojson{{"target", *c.perturbation_target}, {"delta", c.perturbation_delta}}
                                                   : ojson(nullptr);
        const auto series = exposure_shares(log, c.name, window);
        int64_t total = 0;
        auto& sj = cj["series"] = ojson::array();
        for (std::size_t w = 0; w < series.rows.size(); ++w) {
            const int64_t first = static_cast<int64_t>(w) * window + 1;
            sj.push_back(ojson{{"window", w},
                               {"steps", {first, std::min(first + window - 1, h.steps)}},
                               {"impressions", series.impressions[w]},
                               {"shares", optional_vector(series.rows[w])}});
            total += series.impressions[w];
        }
        cj["impressions"] = total;
        const auto overall = overall_shares(log, c.name);
        cj["overall_shares"] = optional_vector(overall);

        ojson amp;
        if (overall && !c.mean_initial_interest.empty()) {
            amp["overall"] = amplification(*overall, c.mean_initial_interest, options.epsilon);
            std::optional<std::vector<double>> final_row;
            for (auto it = series.rows.rbegin(); it != series.rows.rend(); ++it)
                if (*it) {
                    final_row = *it;
                    break;
                }
            amp["final_window"] =
                final_row ? ojson(amplification(*final_row, c.mean_initial_interest, options.epsilon)) : ojson(nullptr);
            auto& novel = amp["novel_exposure"] = ojson::array();
            for (std::size_t k = 0; k < cats.size(); ++k)
                if ((*overall)[k] > 0.0 && c.mean_initial_interest[k] < options.epsilon) novel.push_back(cats[k]);
        } else {
            amp = {{"overall", nullptr}, {"final_window", nullptr}, {"novel_exposure", ojson::array()}};
        }
        cj["amplification"] = std::move(amp);

        auto& slopes = cj["trend_slopes"] = ojson::object();
        for (std::size_t k = 0; k < cats.size(); ++k) {
            std::vector<std::optional<double>> col;
            for (const auto& row : series.rows) col.push_back(row ? std::optional<double>((*row)[k]) : std::nullopt);
            slopes[cats[k]] = optional_number(trend_slope(col));
        }

        const auto inc = incidence(log, flagged, c.name);
        cj["incidence"] = {{"impression_fraction", inc.impression_fraction},
                           {"user_fraction", inc.user_fraction},
                           {"chosen_fraction", inc.chosen_fraction}};
        cohorts.push_back(std::move(cj));
    }

    ojson overall;
    const auto inc = incidence(log, flagged);
    overall["impressions"] = [&] {
        int64_t n = 0;
        for (const auto& r : log.records) n += static_cast<int64_t>(r.slate.size());
        return n;
    }();
    overall["item_gini"] = h.item_ids.empty() ? 0.0 : gini(item_impressions(log, window, std::nullopt));
    overall["item_gini_final_window"] =
        h.item_ids.empty() || n_windows == 0 ? 0.0 : gini(item_impressions(log, window, n_windows - 1));
    overall["incidence"] = {{"impression_fraction", inc.impression_fraction},
                            {"user_fraction", inc.user_fraction},
                            {"chosen_fraction", inc.chosen_fraction}};
    report["overall"] = std::move(overall);

    if (h.cohorts.size() >= 2) {
        auto pairs = options.cohort_pairs.empty() ? auto_pairs(h) : options.cohort_pairs;
        auto& div = report["divergence"] = ojson::array();
        for (const auto& [a, b] : pairs) {
            const auto traj = divergence_trajectory(log, a, b, window);
            std::optional<double> first, last;
            for (const auto& v : traj)
                if (v) {
                    if (!first) first = v;
                    last = v;
                }
            ojson series = ojson::array();
            for (const auto& v : traj) series.push_back(optional_number(v));
            div.push_back(ojson{{"a", a},
                                {"b", b},
                                {"series", std::move(series)},
                                {"first", optional_number(first)},
                                {"final", optional_number(last)},
                                {"slope", optional_number(trend_slope(traj))}});
        }
    }
    return report;
}

std::string report_to_string(const nlohmann::ordered_json& report) { return report.dump(2) + "\n"; }

std::string render_report(const nlohmann::json& report) {
    validate_report(report);
    const auto& meta = report.at("metadata");
    const auto cats = report.at("taxonomy").get<std::vector<std::string>>();
    std::string out;
    auto line = [&](const std::string& s) {
        out += s;
        out += '\n';
    };
    auto num = [](const nlohmann::json& v) { return v.is_null() ? std::string("-") : fmt_double(v.get<double>()); };

    line("# Recommender risk report");
    line("");
    line("- recommender: " + meta.at("recommender").get<std::string>());
    line("- config hash: " + meta.at("config_hash").get<std::string>() + ", seed " + std::to_string(meta.at("seed").get<uint64_t>()));
    line("- steps: " + std::to_string(meta.at("T").get<int64_t>()) + ", slate size " + std::to_string(meta.at("k").get<int64_t>()) +
         ", window " + std::to_string(meta.at("window").get<int64_t>()) + " steps (" +
         std::to_string(meta.at("n_windows").get<int64_t>()) + " windows)");
    if (report.at("no_activity").get<bool>()) {
        line("");
        line("**No activity:** the log contains no records; every series is empty.");
    }
    const auto& overall = report.at("overall");
    line("- item impression Gini: " + num(overall.at("item_gini")) + " overall, " +
         num(overall.at("item_gini_final_window")) + " in the final window");
    const auto flagged = meta.at("flagged").get<std::vector<std::string>>();
    if (!flagged.empty()) {
        std::string f;
        for (const auto& c : flagged) f += (f.empty() ? "" : ", ") + c;
        const auto& inc = overall.at("incidence");
        line("- flagged categories (" + f + "): impression fraction " + num(inc.at("impression_fraction")) +
             ", users exposed " + num(inc.at("user_fraction")) + ", chosen fraction " + num(inc.at("chosen_fraction")));
    }

    std::string header = "| window | steps | impressions |";
    std::string rule = "|---|---|---|";
    for (const auto& c : cats) {
        header += " " + c + " |";
        rule += "---|";
    }
    for (const auto& c : report.at("cohorts")) {
        line("");
        line("## Cohort `" + c.at("name").get<std::string>() + "` (" + std::to_string(c.at("size").get<int64_t>()) + " users)");
        if (!c.at("perturbation").is_null())
            line("Perturbed toward `" + c.at("perturbation").at("target").get<std::string>() + "` by delta " +
                 num(c.at("perturbation").at("delta")) + ".");
        line("");
        line("Exposure share by window:");
        line("");
        line(header);
        line(rule);
        for (const auto& row : c.at("series")) {
            std::string r = "| " + std::to_string(row.at("window").get<int64_t>()) + " | " +
                            std::to_string(row.at("steps")[0].get<int64_t>()) + "-" +
                            std::to_string(row.at("steps")[1].get<int64_t>()) + " | " +
                            std::to_string(row.at("impressions").get<int64_t>()) + " |";
            for (std::size_t k = 0; k < cats.size(); ++k)
                r += " " + (row.at("shares").is_null() ? std::string("empty") : num(row.at("shares")[k])) + " |";
            line(r);
        }
        line("");
        line("| category | initial interest | overall share | amplification | trend slope |");
        line("|---|---|---|---|---|");
        const auto& amp = c.at("amplification");
        for (std::size_t k = 0; k < cats.size(); ++k) {
            const auto& interest = c.at("mean_initial_interest");
            line("| " + cats[k] + " | " + (interest.empty() ? std::string("-") : num(interest[k])) + " | " +
                 (c.at("overall_shares").is_null() ? std::string("-") : num(c.at("overall_shares")[k])) + " | " +
                 (amp.at("overall").is_null() ? std::string("-") : num(amp.at("overall")[k])) + " | " +
                 num(c.at("trend_slopes").at(cats[k])) + " |");
        }
        if (!amp.at("novel_exposure").empty()) {
            std::string n;
            for (const auto& x : amp.at("novel_exposure")) n += (n.empty() ? "" : ", ") + x.get<std::string>();
            line("");
            line("Novel exposure (recommended despite ~zero initial interest): " + n);
        }
        if (!flagged.empty()) {
            const auto& inc = c.at("incidence");
            line("");
            line("Flagged incidence: impressions " + num(inc.at("impression_fraction")) + ", users exposed " +
                 num(inc.at("user_fraction")) + ", chosen " + num(inc.at("chosen_fraction")));
        }
    }
    if (report.contains("divergence")) {
        line("");
        line("## Cohort divergence (Jensen-Shannon, base 2)");
        for (const auto& d : report.at("divergence")) {
            line("");
            line("`" + d.at("a").get<std::string>() + "` vs `" + d.at("b").get<std::string>() + "`: first " +
                 num(d.at("first")) + ", final " + num(d.at("final")) + ", slope " + num(d.at("slope")));
            line("");
            std::string r = "| window |", rr = "|---|";
            std::string v = "| JSD |";
            for (std::size_t w = 0; w < d.at("series").size(); ++w) {
                r += " " + std::to_string(w) + " |";
                rr += "---|";
                v += " " + num(d.at("series")[w]) + " |";
            }
            line(r);
            line(rr);
            line(v);
        }
    }
    line("");
    line("## Notes");
    line("");
    for (const auto& n : report.at("notes")) line("- " + n.get<std::string>());
    return out;
}

std::string timeseries_csv(const ExposureLog& log, const std::string& cohort, int64_t window) {
    const int64_t w = window > 0 ? window : default_window(log.header.steps);
    std::vector<std::string> cohorts;
    if (cohort.empty())
        for (const auto& c : log.header.cohorts) cohorts.push_back(c.name);
    else
        cohorts.push_back(cohort);
    std::string out = "cohort,window,category,share\n";
    for (const auto& c : cohorts) {
        const auto series = exposure_shares(log, c, w);
        for (std::size_t i = 0; i < series.rows.size(); ++i) {
            if (!series.rows[i]) continue;
            for (std::size_t k = 0; k < series.rows[i]->size(); ++k)
                out += c + "," + std::to_string(i) + "," + log.header.taxonomy.name(k) + "," + shortest((*series.rows[i])[k]) + "\n";
        }
    }
    return out;
}

void validate_report(const nlohmann::json& report) {
    try {
        if (report.at("kind") != "artai.risk_report") throw ValidationError("report: wrong kind");
        const auto& meta = report.at("metadata");
        for (const char* key : {"config_hash", "seed", "T", "k", "window", "n_windows", "epsilon", "flagged"})
            if (!meta.contains(key)) throw ValidationError(std::string("report: metadata.") + key + " missing");
        const auto n_cats = report.at("taxonomy").size();
        const auto n_windows = meta.at("n_windows").get<std::size_t>();
        (void)report.at("no_activity").get<bool>();
        for (const auto& c : report.at("cohorts")) {
            if (c.at("series").size() != n_windows) throw ValidationError("report: series length mismatch");
            for (const auto& row : c.at("series")) {
                if (row.at("shares").is_null()) continue;
                const auto shares = row.at("shares").get<std::vector<double>>();
                if (shares.size() != n_cats) throw ValidationError("report: share row has wrong width");
                const double sum = std::accumulate(shares.begin(), shares.end(), 0.0);
                if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("report: share row does not sum to 1");
            }
            (void)c.at("amplification");
            (void)c.at("trend_slopes");
            (void)c.at("incidence");
        }
        (void)report.at("overall").at("item_gini");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report: ") + e.what());
    }
}

}  // namespace artai
