#include "artai/exposure_log.hpp"

#include <set>
#include <unordered_map>

#include "artai/error.hpp"
#include "artai/io.hpp"
#include "artai/json_util.hpp"

namespace artai {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

namespace {
constexpr std::string_view kLogKind = "artai.exposure_log";
}

std::optional<std::size_t> LogHeader::cohort_index(std::string_view name) const {
    for (std::size_t i = 0; i < cohorts.size(); ++i)
        if (cohorts[i].name == name) return i;
    return std::nullopt;
}

std::string to_jsonl(const ExposureLog& log) {
    const auto& h = log.header;
    ojson header;
    header["kind"] = kLogKind;
    header["version"] = 1;
    header["config_hash"] = h.config_hash;
    header["seed"] = h.seed;
    header["T"] = h.steps;
    header["k"] = h.slate_size;
    header["recommender"] = h.recommender;
    header["taxonomy"] = h.taxonomy.user_categories();
    auto& cohorts = header["cohorts"] = ojson::array();
    for (const auto& c : h.cohorts) {
        ojson e{{"name", c.name}, {"size", c.size}, {"mean_initial_interest", c.mean_initial_interest}};
        if (c.perturbation_target)
            e["perturbation"] = {{"target", *c.perturbation_target}, {"delta", c.perturbation_delta}};
        else
            e["perturbation"] = nullptr;
        cohorts.push_back(std::move(e));
    }
    auto& items = header["items"] = ojson::array();
    for (std::size_t i = 0; i < h.item_ids.size(); ++i)
        items.push_back(ojson::array({h.item_ids[i], h.taxonomy.name(h.item_category[i])}));

    std::string out = header.dump();
    out.push_back('\n');
    for (const auto& r : log.records) {
        ojson rec;
        rec["t"] = r.t;
        rec["user"] = r.user;
        rec["cohort"] = h.cohorts[r.cohort].name;
        auto& slate = rec["slate"] = ojson::array();
        for (std::size_t item : r.slate)
            slate.push_back(ojson{{"item", h.item_ids[item]}, {"cat", h.taxonomy.name(h.item_category[item])}});
        if (r.chosen)
            rec["chosen"] = ojson{{"item", h.item_ids[r.chosen->item]}, {"rank", r.chosen->rank}};
        else
            rec["chosen"] = nullptr;
        out += rec.dump();
        out.push_back('\n');
    }
    return out;
}

ExposureLog parse_exposure_log(std::string_view text) {
    using namespace jsonx;
    const auto lines = io::split_lines(text);
    if (lines.empty()) throw ValidationError("exposure log: missing header line");

    auto parse = [](std::pair<std::size_t, std::string_view> line) {
        try {
            return json::parse(line.second);
        } catch (const json::parse_error& e) {
            throw ValidationError("exposure log line " + std::to_string(line.first) + ": " + e.what());
        }
    };

    ExposureLog log;
    auto& h = log.header;
    const auto hj = parse(lines[0]);
    if (get_or<std::string>(hj, "kind", "", "header") != kLogKind)
        throw ValidationError("exposure log: first line is not an exposure-log header");
    h.config_hash = get<std::string>(hj, "config_hash", "header");
    h.seed = get<uint64_t>(hj, "seed", "header");
    h.steps = get<int64_t>(hj, "T", "header");
    h.slate_size = get<int64_t>(hj, "k", "header");
    h.recommender = get_or<std::string>(hj, "recommender", "", "header");
    h.taxonomy = Taxonomy(require(hj, "taxonomy", "header").get<std::vector<std::string>>());
    for (const auto& c : require(hj, "cohorts", "header")) {
        CohortSummary s;
        s.name = get<std::string>(c, "name", "header.cohorts");
        s.size = get<int64_t>(c, "size", "header.cohorts");
        s.mean_initial_interest = require(c, "mean_initial_interest", "header.cohorts").get<std::vector<double>>();
        if (auto p = c.find("perturbation"); p != c.end() && !p->is_null()) {
            s.perturbation_target = get<std::string>(*p, "target", "header.cohorts.perturbation");
            s.perturbation_delta = get<double>(*p, "delta", "header.cohorts.perturbation");
        }
        h.cohorts.push_back(std::move(s));
    }
    std::unordered_map<std::string, std::size_t> item_index;
    for (const auto& e : require(hj, "items", "header")) {
        auto id = e.at(0).get<std::string>();
        item_index.emplace(id, h.item_ids.size());
        h.item_ids.push_back(std::move(id));
        h.item_category.push_back(h.taxonomy.index_of(e.at(1).get<std::string>()));
    }

    log.records.reserve(lines.size() - 1);
    for (std::size_t l = 1; l < lines.size(); ++l) {
        const auto j = parse(lines[l]);
        const std::string where = "exposure log line " + std::to_string(lines[l].first);
        auto item_of = [&](const std::string& id) {
            auto it = item_index.find(id);
            if (it == item_index.end()) throw ValidationError(where + ": unknown item '" + id + "'");
            return it->second;
        };
        ExposureRecord r;
        r.t = get<int64_t>(j, "t", where);
        r.user = get<std::string>(j, "user", where);
        const auto cohort = get<std::string>(j, "cohort", where);
        auto ci = h.cohort_index(cohort);
        if (!ci) throw ValidationError(where + ": unknown cohort '" + cohort + "'");
        r.cohort = *ci;
        for (const auto& s : require(j, "slate", where)) r.slate.push_back(item_of(get<std::string>(s, "item", where)));
        if (auto c = j.find("chosen"); c != j.end() && !c->is_null())
            r.chosen = ChosenItem{item_of(get<std::string>(*c, "item", where)), get<int64_t>(*c, "rank", where)};
        log.records.push_back(std::move(r));
    }
    return log;
}

void validate_log(const ExposureLog& log) {
    std::set<std::pair<int64_t, std::string>> seen;
    for (const auto& r : log.records) {
        if (r.t < 1 || r.t > log.header.steps)
            throw ValidationError("record for user '" + r.user + "' has step " + std::to_string(r.t) + " outside 1.." +
                                  std::to_string(log.header.steps));
        if (!seen.emplace(r.t, r.user).second)
            throw ValidationError("user '" + r.user + "' appears twice in step " + std::to_string(r.t));
        if (r.chosen) {
            const auto rank = r.chosen->rank;
            if (rank < 1 || rank > static_cast<int64_t>(r.slate.size()) ||
                r.slate[static_cast<std::size_t>(rank - 1)] != r.chosen->item)
                throw ValidationError("user '" + r.user + "' step " + std::to_string(r.t) +
                                      ": chosen item is not at the stated slate rank");
        }
    }
}

}  // namespace artai
