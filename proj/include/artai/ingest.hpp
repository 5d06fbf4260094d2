#pragma once
// Interaction-log and catalog loading, plus the empirical distributions that
// seed cohort generation and recommender initialisation.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "artai/classify.hpp"
#include "artai/ingest_types.hpp"
#include "json.hpp"

namespace artai {

enum class FileFormat { csv, jsonl };

FileFormat parse_file_format(std::string_view s);
// Infers from the extension (.csv / .jsonl / .json); throws on anything else.
FileFormat format_from_path(const std::filesystem::path& path);

std::string_view to_string(EventType t);
EventType parse_event_type(std::string_view s);

// canonical field name (user_id, item_id, timestamp, event_type) -> source column name
using ColumnMap = std::map<std::string, std::string>;

// A csv file may omit the header row; fields are then read positionally as
// user_id,item_id,timestamp[,event_type]. Errors name the 1-based line.
std::vector<InteractionEvent> parse_interactions(std::string_view text, FileFormat format,
                                                 const ColumnMap& column_map = {});
std::vector<InteractionEvent> load_interactions(const std::filesystem::path& path, FileFormat format,
                                                const ColumnMap& column_map = {});

// Header optional as above (item_id,title[,category_label]). Missing title -> "".
std::vector<ItemRecord> parse_catalog(std::string_view text, FileFormat format);
std::vector<ItemRecord> load_catalog(const std::filesystem::path& path, FileFormat format);

// Every present category_label must be a taxonomy member.
void validate_catalog_labels(const std::vector<ItemRecord>& catalog, const Taxonomy& taxonomy);

using InterestMap = std::map<std::string, std::vector<double>>;

// Vectors have taxonomy.size() entries (unknown included). Items missing from
// `labels` count as unknown. Users listed in `users` are included even with no
// events; a user with zero total mass gets the uniform vector.
InterestMap estimate_interest_distribution(std::span<const InteractionEvent> events,
                                           const std::map<std::string, std::string>& labels,
                                           const Taxonomy& taxonomy, double smoothing = 1.0,
                                           std::span<const std::string> users = {});

std::vector<double> compute_category_popularity(std::span<const InteractionEvent> events,
                                                const std::map<std::string, std::string>& labels,
                                                const Taxonomy& taxonomy);

// Sparse symmetric item x item counts of distinct users who engaged both items.
class CoEngagement {
public:
    int64_t count(const std::string& a, const std::string& b) const;
    void set(const std::string& a, const std::string& b, int64_t n);

    // Each unordered pair once, a < b.
    std::vector<std::tuple<std::string, std::string, int64_t>> pairs() const;
    std::size_t nonzero_pairs() const;
    bool empty() const { return rows_.empty(); }

    const std::map<std::string, std::map<std::string, int64_t>>& rows() const { return rows_; }

private:
    std::map<std::string, std::map<std::string, int64_t>> rows_;
};

CoEngagement build_co_engagement(std::span<const InteractionEvent> events);

// Distinct users per item (the diagonal of the incidence Gram matrix, which
// CoEngagement keeps at zero).
std::map<std::string, int64_t> item_user_counts(std::span<const InteractionEvent> events);

inline constexpr int64_t kDefaultBinSeconds = 86400;

std::map<std::string, double> compute_activity_rate(std::span<const InteractionEvent> events,
                                                    int64_t bin_seconds = kDefaultBinSeconds);

struct WorldModel {
    Taxonomy taxonomy;
    std::vector<ItemRecord> catalog;
    std::vector<double> category_popularity;  // empty when the log has no events
    InterestMap user_interest_estimates;
    CoEngagement co_engagement;
    std::map<std::string, int64_t> item_users;
    std::map<std::string, double> activity_rate;
};

struct WorldModelOptions {
    double smoothing = 1.0;
    int64_t bin_seconds = kDefaultBinSeconds;
};

WorldModel build_world_model(std::vector<ItemRecord> catalog, std::span<const InteractionEvent> events,
                             const std::map<std::string, std::string>& labels, const Taxonomy& taxonomy,
                             const WorldModelOptions& options = {});

nlohmann::ordered_json world_model_to_json(const WorldModel& wm);
WorldModel world_model_from_json(const nlohmann::json& j);

}  // namespace artai
