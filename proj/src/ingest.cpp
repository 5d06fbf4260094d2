#include "artai/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "artai/error.hpp"
#include "artai/io.hpp"

namespace artai {

using nlohmann::json;

namespace {

const std::vector<std::string> kInteractionFields = {"user_id", "item_id", "timestamp", "event_type"};
const std::vector<std::string> kCatalogFields = {"item_id", "title", "category_label"};

std::string line_prefix(std::size_t line) { return "line " + std::to_string(line) + ": "; }

int64_t parse_timestamp(std::string_view s, std::size_t line) {
    int64_t v = 0;
    const auto* first = s.data();
    const auto* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (s.empty() || ec != std::errc{} || ptr != last || v < 0)
        throw ValidationError(line_prefix(line) + "field `timestamp`: expected a non-negative integer, got '" +
                              std::string(s) + "'");
    return v;
}

std::string source_name(const ColumnMap& map, const std::string& canonical) {
    auto it = map.find(canonical);
    return it == map.end() ? canonical : it->second;
}

// Resolves csv column positions. Returns nullopt when the first row is data.
std::optional<std::vector<int>> header_positions(const std::vector<std::string>& first_row,
                                                 const std::vector<std::string>& canonical,
                                                 const ColumnMap& map, std::size_t required) {
    const auto first = source_name(map, canonical[0]);
    if (std::find(first_row.begin(), first_row.end(), first) == first_row.end()) return std::nullopt;
    std::vector<int> pos(canonical.size(), -1);
    for (std::size_t c = 0; c < canonical.size(); ++c) {
        const auto name = source_name(map, canonical[c]);
        auto it = std::find(first_row.begin(), first_row.end(), name);
        if (it != first_row.end()) pos[c] = static_cast<int>(it - first_row.begin());
        else if (c < required) throw ValidationError("unmapped required column '" + canonical[c] + "'");
    }
    return pos;
}

std::vector<int> positional(std::size_t n) {
    std::vector<int> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[i] = static_cast<int>(i);
    return pos;
}

std::string field_at(const io::CsvRow& row, int pos) {
    if (pos < 0 || static_cast<std::size_t>(pos) >= row.fields.size()) return {};
    return row.fields[static_cast<std::size_t>(pos)];
}

std::string json_string_field(const json& obj, const std::string& key, std::size_t line, bool required) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        if (required) throw ValidationError(line_prefix(line) + "missing field `" + key + "`");
        return {};
    }
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number_integer()) return std::to_string(it->get<int64_t>());
    throw ValidationError(line_prefix(line) + "field `" + key + "` must be a string");
}

json parse_json_line(std::string_view content, std::size_t line) {
    try {
        auto j = json::parse(content);
        if (!j.is_object()) throw ValidationError(line_prefix(line) + "expected a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ValidationError(line_prefix(line) + "malformed JSON: " + e.what());
    }
}

InteractionEvent make_event(std::string user, std::string item, std::string_view ts, std::string_view type,
                            std::size_t line) {
    if (user.empty()) throw ValidationError(line_prefix(line) + "field `user_id` is empty");
    if (item.empty()) throw ValidationError(line_prefix(line) + "field `item_id` is empty");
    InteractionEvent ev{std::move(user), std::move(item), parse_timestamp(ts, line), EventType::view};
    try {
        ev.event_type = parse_event_type(type);
    } catch (const ValidationError& e) {
        throw ValidationError(line_prefix(line) + "field `event_type`: " + e.what());
    }
    return ev;
}

void check_simplex_input(const Taxonomy& taxonomy) {
    if (taxonomy.user_size() == 0) throw ValidationError("taxonomy is empty");
}

std::size_t category_of(const std::string& item, const std::map<std::string, std::string>& labels,
                        const Taxonomy& taxonomy) {
    auto it = labels.find(item);
    if (it == labels.end()) return taxonomy.unknown_index();
    return taxonomy.index_of(it->second);
}

}  // namespace

FileFormat parse_file_format(std::string_view s) {
    if (s == "csv") return FileFormat::csv;
    if (s == "jsonl") return FileFormat::jsonl;
    throw ValidationError("unknown format '" + std::string(s) + "' (expected csv or jsonl)");
}

FileFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return FileFormat::csv;
    if (ext == ".jsonl" || ext == ".json") return FileFormat::jsonl;
    throw ValidationError("cannot infer format of '" + path.string() + "' (use .csv or .jsonl)");
}

std::string_view to_string(EventType t) {
    switch (t) {
        case EventType::view: return "view";
        case EventType::like: return "like";
        case EventType::comment: return "comment";
    }
    return "view";
}

EventType parse_event_type(std::string_view s) {
    if (s.empty() || s == "view") return EventType::view;
    if (s == "like") return EventType::like;
    if (s == "comment") return EventType::comment;
    throw ValidationError("unknown event type '" + std::string(s) + "'");
}

std::vector<InteractionEvent> parse_interactions(std::string_view text, FileFormat format,
                                                 const ColumnMap& column_map) {
    for (const auto& [canonical, _] : column_map)
        if (std::find(kInteractionFields.begin(), kInteractionFields.end(), canonical) == kInteractionFields.end())
            throw ValidationError("column_map: unknown field '" + canonical + "'");

    std::vector<InteractionEvent> events;
    if (format == FileFormat::csv) {
        auto rows = io::parse_csv(text);
        if (rows.empty()) return events;
        std::size_t start = 0;
        std::vector<int> pos;
        if (auto hdr = header_positions(rows[0].fields, kInteractionFields, column_map, 3)) {
            pos = *hdr;
            start = 1;
        } else {
            pos = positional(kInteractionFields.size());
        }
        events.reserve(rows.size() - start);
        for (std::size_t r = start; r < rows.size(); ++r) {
            const auto& row = rows[r];
            for (int c = 0; c < 3; ++c)
                if (pos[static_cast<std::size_t>(c)] >= static_cast<int>(row.fields.size()))
                    throw ValidationError(line_prefix(row.line) + "missing field `" + kInteractionFields[static_cast<std::size_t>(c)] + "`");
            events.push_back(make_event(field_at(row, pos[0]), field_at(row, pos[1]), field_at(row, pos[2]),
                                        field_at(row, pos[3]), row.line));
        }
        return events;
    }

    for (const auto& [line, content] : io::split_lines(text)) {
        const auto obj = parse_json_line(content, line);
        auto user = json_string_field(obj, source_name(column_map, "user_id"), line, true);
        auto item = json_string_field(obj, source_name(column_map, "item_id"), line, true);
        const auto ts_key = source_name(column_map, "timestamp");
        auto ts_it = obj.find(ts_key);
        if (ts_it == obj.end()) throw ValidationError(line_prefix(line) + "missing field `timestamp`");
        std::string ts;
        if (ts_it->is_number_unsigned() || ts_it->is_number_integer())
            ts = std::to_string(ts_it->get<int64_t>());
        else if (ts_it->is_string())
            ts = ts_it->get<std::string>();
        else
            ts = ts_it->dump();
        auto type = json_string_field(obj, source_name(column_map, "event_type"), line, false);
        events.push_back(make_event(std::move(user), std::move(item), ts, type, line));
    }
    return events;
}

std::vector<InteractionEvent> load_interactions(const std::filesystem::path& path, FileFormat format,
                                                const ColumnMap& column_map) {
    return parse_interactions(io::read_file(path), format, column_map);
}

std::vector<ItemRecord> parse_catalog(std::string_view text, FileFormat format) {
    std::vector<ItemRecord> items;
    std::set<std::string> seen;
    auto add = [&](ItemRecord rec, std::size_t line) {
        if (rec.item_id.empty()) throw ValidationError(line_prefix(line) + "field `item_id` is empty");
        if (!seen.insert(rec.item_id).second)
            throw ValidationError("duplicate item_id '" + rec.item_id + "' (" + line_prefix(line) + ")");
        items.push_back(std::move(rec));
    };

    if (format == FileFormat::csv) {
        auto rows = io::parse_csv(text);
        if (rows.empty()) return items;
        std::size_t start = 0;
        std::vector<int> pos;
        if (auto hdr = header_positions(rows[0].fields, kCatalogFields, {}, 1)) {
            pos = *hdr;
            start = 1;
        } else {
            pos = positional(kCatalogFields.size());
        }
        for (std::size_t r = start; r < rows.size(); ++r) {
            const auto& row = rows[r];
            ItemRecord rec{field_at(row, pos[0]), field_at(row, pos[1]), std::nullopt};
            if (auto label = field_at(row, pos[2]); !label.empty()) rec.category_label = std::move(label);
            add(std::move(rec), row.line);
        }
        return items;
    }

    for (const auto& [line, content] : io::split_lines(text)) {
        const auto obj = parse_json_line(content, line);
        ItemRecord rec{json_string_field(obj, "item_id", line, true), json_string_field(obj, "title", line, false),
                       std::nullopt};
        if (auto label = json_string_field(obj, "category_label", line, false); !label.empty())
            rec.category_label = std::move(label);
        add(std::move(rec), line);
    }
    return items;
}

std::vector<ItemRecord> load_catalog(const std::filesystem::path& path, FileFormat format) {
    return parse_catalog(io::read_file(path), format);
}

void validate_catalog_labels(const std::vector<ItemRecord>& catalog, const Taxonomy& taxonomy) {
    for (const auto& item : catalog)
        if (item.category_label && !taxonomy.contains(*item.category_label))
            throw ValidationError("item '" + item.item_id + "': category_label '" + *item.category_label +
                                  "' is not in the taxonomy");
}

InterestMap estimate_interest_distribution(std::span<const InteractionEvent> events,
                                           const std::map<std::string, std::string>& labels,
                                           const Taxonomy& taxonomy, double smoothing,
                                           std::span<const std::string> users) {
    check_simplex_input(taxonomy);
    if (!(smoothing >= 0.0)) throw ValidationError("smoothing must be >= 0");
    const std::size_t k = taxonomy.size();
    std::map<std::string, std::vector<double>> counts;
    for (const auto& u : users) counts.try_emplace(u, k, 0.0);
    for (const auto& ev : events) {
        auto [it, _] = counts.try_emplace(ev.user_id, k, 0.0);
        it->second[category_of(ev.item_id, labels, taxonomy)] += 1.0;
    }
    InterestMap out;
    for (auto& [user, c] : counts) {
        // Smoothing covers the declared categories; unknown keeps its raw count.
        double total = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            if (i != taxonomy.unknown_index()) c[i] += smoothing;
            total += c[i];
        }
        if (total <= 0.0) {
            std::fill(c.begin(), c.end(), 1.0 / static_cast<double>(taxonomy.user_size()));
            c[taxonomy.unknown_index()] = 0.0;
        } else {
            for (auto& x : c) x /= total;
        }
        out.emplace(user, std::move(c));
    }
    return out;
}

std::vector<double> compute_category_popularity(std::span<const InteractionEvent> events,
                                                const std::map<std::string, std::string>& labels,
                                                const Taxonomy& taxonomy) {
    check_simplex_input(taxonomy);
    if (events.empty()) throw ValidationError("empty log");
    std::vector<double> shares(taxonomy.size(), 0.0);
    for (const auto& ev : events) shares[category_of(ev.item_id, labels, taxonomy)] += 1.0;
    for (auto& s : shares) s /= static_cast<double>(events.size());
    return shares;
}

int64_t CoEngagement::count(const std::string& a, const std::string& b) const {
    auto r = rows_.find(a);
    if (r == rows_.end()) return 0;
    auto c = r->second.find(b);
    return c == r->second.end() ? 0 : c->second;
}

void CoEngagement::set(const std::string& a, const std::string& b, int64_t n) {
    if (a == b) return;
    if (n == 0) {
        for (auto [x, y] : {std::pair{&a, &b}, std::pair{&b, &a}}) {
            if (auto r = rows_.find(*x); r != rows_.end()) {
                r->second.erase(*y);
                if (r->second.empty()) rows_.erase(r);
            }
        }
        return;
    }
    rows_[a][b] = n;
    rows_[b][a] = n;
}

std::vector<std::tuple<std::string, std::string, int64_t>> CoEngagement::pairs() const {
    std::vector<std::tuple<std::string, std::string, int64_t>> out;
    for (const auto& [a, row] : rows_)
        for (const auto& [b, n] : row)
            if (a < b) out.emplace_back(a, b, n);
    return out;
}

std::size_t CoEngagement::nonzero_pairs() const {
    std::size_t n = 0;
    for (const auto& [_, row] : rows_) n += row.size();
    return n / 2;
}

CoEngagement build_co_engagement(std::span<const InteractionEvent> events) {
    std::map<std::string, std::set<std::string>> items_of_user;
    for (const auto& ev : events) items_of_user[ev.user_id].insert(ev.item_id);

    std::map<std::pair<std::string, std::string>, int64_t> acc;
    for (const auto& [_, items] : items_of_user)
        for (auto a = items.begin(); a != items.end(); ++a)
            for (auto b = std::next(a); b != items.end(); ++b) ++acc[{*a, *b}];

    CoEngagement co;
    for (const auto& [pair, n] : acc) co.set(pair.first, pair.second, n);
    return co;
}

std::map<std::string, int64_t> item_user_counts(std::span<const InteractionEvent> events) {
    std::map<std::string, std::set<std::string>> users_of_item;
    for (const auto& ev : events) users_of_item[ev.item_id].insert(ev.user_id);
    std::map<std::string, int64_t> out;
    for (const auto& [item, users] : users_of_item) out[item] = static_cast<int64_t>(users.size());
    return out;
}

std::map<std::string, double> compute_activity_rate(std::span<const InteractionEvent> events, int64_t bin_seconds) {
    if (bin_seconds <= 0) throw ValidationError("bin_seconds must be > 0");
    struct Span {
        int64_t first = 0, last = 0, n = 0;
    };
    std::map<std::string, Span> spans;
    for (const auto& ev : events) {
        auto [it, fresh] = spans.try_emplace(ev.user_id, Span{ev.timestamp, ev.timestamp, 0});
        auto& s = it->second;
        s.first = std::min(s.first, ev.timestamp);
        s.last = std::max(s.last, ev.timestamp);
        ++s.n;
    }
    std::map<std::string, double> out;
    for (const auto& [user, s] : spans) {
        const int64_t bins = s.last / bin_seconds - s.first / bin_seconds + 1;
        out[user] = static_cast<double>(s.n) / static_cast<double>(bins);
    }
    return out;
}

WorldModel build_world_model(std::vector<ItemRecord> catalog, std::span<const InteractionEvent> events,
                             const std::map<std::string, std::string>& labels, const Taxonomy& taxonomy,
                             const WorldModelOptions& options) {
    validate_catalog_labels(catalog, taxonomy);
    WorldModel wm;
    wm.taxonomy = taxonomy;
    wm.catalog = std::move(catalog);
    if (!events.empty()) wm.category_popularity = compute_category_popularity(events, labels, taxonomy);
    wm.user_interest_estimates = estimate_interest_distribution(events, labels, taxonomy, options.smoothing);
    wm.co_engagement = build_co_engagement(events);
    wm.item_users = item_user_counts(events);
    wm.activity_rate = compute_activity_rate(events, options.bin_seconds);
    return wm;
}

nlohmann::ordered_json world_model_to_json(const WorldModel& wm) {
    nlohmann::ordered_json j;
    j["kind"] = "artai.worldmodel";
    j["taxonomy"] = wm.taxonomy.user_categories();
    auto& cat = j["catalog"] = nlohmann::ordered_json::array();
    for (const auto& item : wm.catalog) {
        nlohmann::ordered_json e{{"item_id", item.item_id}, {"title", item.title}};
        if (item.category_label) e["category_label"] = *item.category_label;
        cat.push_back(std::move(e));
    }
    j["category_popularity"] = wm.category_popularity;
    j["user_interest_estimates"] = wm.user_interest_estimates;
    auto& co = j["co_engagement"] = nlohmann::ordered_json::array();
    for (const auto& [a, b, n] : wm.co_engagement.pairs()) co.push_back({a, b, n});
    j["item_users"] = wm.item_users;
    j["activity_rate"] = wm.activity_rate;
    return j;
}

WorldModel world_model_from_json(const json& j) {
    try {
        WorldModel wm;
        wm.taxonomy = Taxonomy(j.at("taxonomy").get<std::vector<std::string>>());
        for (const auto& e : j.at("catalog")) {
            ItemRecord rec{e.at("item_id").get<std::string>(), e.value("title", std::string{}), std::nullopt};
            if (e.contains("category_label")) rec.category_label = e.at("category_label").get<std::string>();
            wm.catalog.push_back(std::move(rec));
        }
        validate_catalog_labels(wm.catalog, wm.taxonomy);
        wm.category_popularity = j.at("category_popularity").get<std::vector<double>>();
        wm.user_interest_estimates = j.at("user_interest_estimates").get<InterestMap>();
        for (const auto& p : j.at("co_engagement"))
            wm.co_engagement.set(p.at(0).get<std::string>(), p.at(1).get<std::string>(), p.at(2).get<int64_t>());
        wm.item_users = j.value("item_users", std::map<std::string, int64_t>{});
        wm.activity_rate = j.at("activity_rate").get<std::map<std::string, double>>();
        return wm;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("worldmodel: ") + e.what());
    }
}

}  // namespace artai
