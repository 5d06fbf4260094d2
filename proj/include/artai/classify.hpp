#pragma once
// Content taxonomy and explainable item classification.
//
// Items are labelled either from an imported label file (any external
// classifier) or by a keyword lexicon over the title. Every result carries the
// evidence that produced it.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "artai/ingest_types.hpp"

namespace artai {

inline constexpr std::string_view kUnknownCategory = "unknown";

// Ordered category vocabulary. `unknown` is always present as the last entry
// and cannot be declared by the user.
class Taxonomy {
public:
    Taxonomy() = default;
    explicit Taxonomy(std::vector<std::string> user_categories);

    // Including `unknown`.
    std::size_t size() const { return names_.size(); }
    std::size_t user_size() const { return names_.size() - 1; }
    std::size_t unknown_index() const { return names_.size() - 1; }

    const std::vector<std::string>& names() const { return names_; }
    const std::string& name(std::size_t idx) const { return names_.at(idx); }

    std::optional<std::size_t> find(std::string_view name) const;
    // Throws ValidationError naming the category.
    std::size_t index_of(std::string_view name) const;
    bool contains(std::string_view name) const { return find(name).has_value(); }

    // User categories only (for writing the taxonomy file back out).
    std::vector<std::string> user_categories() const { return {names_.begin(), names_.end() - 1}; }

    bool operator==(const Taxonomy&) const = default;

private:
    std::vector<std::string> names_;
};

Taxonomy parse_taxonomy(std::string_view text);
Taxonomy load_taxonomy(const std::filesystem::path& path);

struct Lexicon {
    // category -> terms; a term may appear under several categories
    std::map<std::string, std::set<std::string>> terms;
};

Lexicon parse_lexicon(std::string_view csv_text, const Taxonomy& taxonomy);
Lexicon load_lexicon(const std::filesystem::path& path, const Taxonomy& taxonomy);

// csv `item_id,category`; header row optional.
std::map<std::string, std::string> parse_external_labels(std::string_view csv_text);
std::map<std::string, std::string> load_external_labels(const std::filesystem::path& path);

enum class LabelSource { external_label, lexicon, fallback_unknown };

std::string_view to_string(LabelSource s);
LabelSource label_source_from_string(std::string_view s);

struct ClassificationResult {
    std::string item_id;
    std::string category;
    double confidence = 0.0;
    std::vector<std::string> evidence;
    LabelSource source = LabelSource::fallback_unknown;

    bool operator==(const ClassificationResult&) const = default;
};

// Lowercase ASCII, split on runs of non-alphanumeric bytes.
std::vector<std::string> tokenize(std::string_view text);

ClassificationResult classify_item(const ItemRecord& item, const Lexicon& lexicon, const Taxonomy& taxonomy);

using Classification = std::map<std::string, ClassificationResult>;

// Parallel over items; results are identical to classify_catalog_serial.
Classification classify_catalog(const std::vector<ItemRecord>& items, const Lexicon& lexicon,
                                const Taxonomy& taxonomy,
                                const std::map<std::string, std::string>& external);

Classification classify_catalog_serial(const std::vector<ItemRecord>& items, const Lexicon& lexicon,
                                       const Taxonomy& taxonomy,
                                       const std::map<std::string, std::string>& external);

// item_id -> category name, the form consumed by ingest and synthgen.
std::map<std::string, std::string> labels_of(const Classification& classification);

}  // namespace artai

namespace artai {

// Catalog in item_id order with each item's resolved category index.
// Recommenders, cohort generation and the simulator all work on dense indices
// into this structure; ascending index is ascending item_id.
struct CategorizedCatalog {
    Taxonomy taxonomy;
    std::vector<std::string> item_ids;
    std::vector<std::size_t> category;
    std::vector<std::vector<std::size_t>> items_by_category;

    std::size_t size() const { return item_ids.size(); }
    std::optional<std::size_t> find(std::string_view item_id) const;
};

// Items missing from `classification` fall into `unknown`.
CategorizedCatalog categorize(const std::vector<ItemRecord>& catalog, const Classification& classification,
                              const Taxonomy& taxonomy);

}  // namespace artai
