#include "artai/classify.hpp"

#include <algorithm>
#include <cctype>

#include "artai/error.hpp"
#include "artai/io.hpp"

namespace artai {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

bool is_lowercase(std::string_view s) {
    return std::none_of(s.begin(), s.end(), [](unsigned char c) { return std::isupper(c); });
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// term -> taxonomy indices listing it, ascending
using TermIndex = std::unordered_map<std::string, std::vector<std::size_t>>;

TermIndex build_index(const Lexicon& lexicon, const Taxonomy& taxonomy) {
    TermIndex index;
    for (const auto& [category, terms] : lexicon.terms) {
        const std::size_t c = taxonomy.index_of(category);
        for (const auto& t : terms) index[t].push_back(c);
    }
    for (auto& [_, cats] : index) std::sort(cats.begin(), cats.end());
    return index;
}

ClassificationResult classify_with_index(const ItemRecord& item, const TermIndex& index,
                                         const Taxonomy& taxonomy) {
    ClassificationResult r;
    r.item_id = item.item_id;

    const auto tokens = tokenize(item.title);
    std::vector<std::size_t> score(taxonomy.size(), 0);
    std::size_t total = 0;
    for (const auto& tok : tokens) {
        auto it = index.find(tok);
        if (it == index.end()) continue;
        for (std::size_t c : it->second) {
            ++score[c];
            ++total;
        }
    }
    if (total == 0) {
        r.category = std::string(kUnknownCategory);
        r.confidence = 0.0;
        r.source = LabelSource::fallback_unknown;
        return r;
    }
    // First maximum in taxonomy order.
    std::size_t best = 0;
    for (std::size_t c = 1; c < score.size(); ++c)
        if (score[c] > score[best]) best = c;

    r.category = taxonomy.name(best);
    r.confidence = static_cast<double>(score[best]) / static_cast<double>(total);
    r.source = LabelSource::lexicon;
    for (const auto& tok : tokens) {
        auto it = index.find(tok);
        if (it != index.end() && std::binary_search(it->second.begin(), it->second.end(), best))
            r.evidence.push_back(tok);
    }
    return r;
}

ClassificationResult external_result(const std::string& item_id, const std::string& label,
                                     const Taxonomy& taxonomy) {
    if (!taxonomy.contains(label))
        throw ValidationError("item '" + item_id + "': external label '" + label + "' is not in the taxonomy");
    return ClassificationResult{item_id, label, 1.0, {}, LabelSource::external_label};
}

const std::string* external_label_for(const ItemRecord& item, const std::map<std::string, std::string>& external) {
    if (auto it = external.find(item.item_id); it != external.end()) return &it->second;
    if (item.category_label) return &*item.category_label;
    return nullptr;
}

}  // namespace

Taxonomy::Taxonomy(std::vector<std::string> user_categories) {
    if (user_categories.empty()) throw ValidationError("taxonomy must declare at least one category");
    std::set<std::string> seen;
    for (const auto& c : user_categories) {
        if (c.empty()) throw ValidationError("taxonomy: empty category name");
        if (!is_lowercase(c)) throw ValidationError("taxonomy: category '" + c + "' must be lowercase");
        if (c == kUnknownCategory)
            throw ValidationError("taxonomy: category 'unknown' is reserved and may not be declared");
        if (!seen.insert(c).second) throw ValidationError("taxonomy: duplicate category '" + c + "'");
    }
    names_ = std::move(user_categories);
    names_.emplace_back(kUnknownCategory);
}

std::optional<std::size_t> Taxonomy::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

std::size_t Taxonomy::index_of(std::string_view name) const {
    if (auto i = find(name)) return *i;
    throw ValidationError("category '" + std::string(name) + "' is not in the taxonomy");
}

Taxonomy parse_taxonomy(std::string_view text) {
    std::vector<std::string> cats;
    for (const auto& [line, content] : io::split_lines(text)) {
        auto name = trim(content);
        if (!name.empty() && name[0] != '#') cats.push_back(std::move(name));
    }
    return Taxonomy(std::move(cats));
}

Taxonomy load_taxonomy(const std::filesystem::path& path) { return parse_taxonomy(io::read_file(path)); }

Lexicon parse_lexicon(std::string_view csv_text, const Taxonomy& taxonomy) {
    Lexicon lex;
    auto rows = io::parse_csv(csv_text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (i == 0 && row.fields.size() == 2 && row.fields[0] == "category" && row.fields[1] == "term") continue;
        const std::string where = "lexicon line " + std::to_string(row.line) + ": ";
        if (row.fields.size() != 2) throw ValidationError(where + "expected 2 fields `category,term`");
        const auto category = trim(row.fields[0]);
        const auto term = lowercase(trim(row.fields[1]));
        if (!taxonomy.contains(category) || category == kUnknownCategory)
            throw ValidationError(where + "category '" + category + "' is not in the taxonomy");
        if (term.empty()) throw ValidationError(where + "empty term");
        if (std::any_of(term.begin(), term.end(), [](unsigned char c) { return std::isspace(c); }))
            throw ValidationError(where + "term '" + term + "' contains whitespace");
        lex.terms[category].insert(term);
    }
    return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path, const Taxonomy& taxonomy) {
    return parse_lexicon(io::read_file(path), taxonomy);
}

std::map<std::string, std::string> parse_external_labels(std::string_view csv_text) {
    std::map<std::string, std::string> labels;
    auto rows = io::parse_csv(csv_text);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (i == 0 && row.fields.size() == 2 && row.fields[0] == "item_id" && row.fields[1] == "category") continue;
        if (row.fields.size() != 2)
            throw ValidationError("labels line " + std::to_string(row.line) + ": expected `item_id,category`");
        auto id = trim(row.fields[0]);
        if (id.empty()) throw ValidationError("labels line " + std::to_string(row.line) + ": empty item_id");
        labels[id] = trim(row.fields[1]);
    }
    return labels;
}

std::map<std::string, std::string> load_external_labels(const std::filesystem::path& path) {
    return parse_external_labels(io::read_file(path));
}

std::string_view to_string(LabelSource s) {
    switch (s) {
        case LabelSource::external_label: return "external_label";
        case LabelSource::lexicon: return "lexicon";
        case LabelSource::fallback_unknown: return "fallback_unknown";
    }
    return "fallback_unknown";
}

LabelSource label_source_from_string(std::string_view s) {
    if (s == "external_label") return LabelSource::external_label;
    if (s == "lexicon") return LabelSource::lexicon;
    if (s == "fallback_unknown") return LabelSource::fallback_unknown;
    throw ValidationError("unknown label source '" + std::string(s) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

ClassificationResult classify_item(const ItemRecord& item, const Lexicon& lexicon, const Taxonomy& taxonomy) {
    return classify_with_index(item, build_index(lexicon, taxonomy), taxonomy);
}

Classification classify_catalog_serial(const std::vector<ItemRecord>& items, const Lexicon& lexicon,
                                       const Taxonomy& taxonomy,
                                       const std::map<std::string, std::string>& external) {
    const auto index = build_index(lexicon, taxonomy);
    Classification out;
    for (const auto& item : items) {
        if (const auto* label = external_label_for(item, external))
            out[item.item_id] = external_result(item.item_id, *label, taxonomy);
        else
            out[item.item_id] = classify_with_index(item, index, taxonomy);
    }
    return out;
}

Classification classify_catalog(const std::vector<ItemRecord>& items, const Lexicon& lexicon,
                                const Taxonomy& taxonomy,
                                const std::map<std::string, std::string>& external) {
    const auto index = build_index(lexicon, taxonomy);
    // Validate labels up front so errors do not escape the parallel region.
    for (const auto& item : items)
        if (const auto* label = external_label_for(item, external)) (void)external_result(item.item_id, *label, taxonomy);

    std::vector<ClassificationResult> results(items.size());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& item = items[static_cast<std::size_t>(i)];
        if (const auto* label = external_label_for(item, external))
            results[static_cast<std::size_t>(i)] = ClassificationResult{item.item_id, *label, 1.0, {}, LabelSource::external_label};
        else
            results[static_cast<std::size_t>(i)] = classify_with_index(item, index, taxonomy);
    }
    Classification out;
    for (auto& r : results) {
        auto id = r.item_id;
        out.emplace(std::move(id), std::move(r));
    }
    return out;
}

std::map<std::string, std::string> labels_of(const Classification& classification) {
    std::map<std::string, std::string> labels;
    for (const auto& [id, r] : classification) labels[id] = r.category;
    return labels;
}

}  // namespace artai

namespace artai {

std::optional<std::size_t> CategorizedCatalog::find(std::string_view item_id) const {
    auto it = std::lower_bound(item_ids.begin(), item_ids.end(), item_id);
    if (it == item_ids.end() || *it != item_id) return std::nullopt;
    return static_cast<std::size_t>(it - item_ids.begin());
}

CategorizedCatalog categorize(const std::vector<ItemRecord>& catalog, const Classification& classification,
                              const Taxonomy& taxonomy) {
    CategorizedCatalog out;
    out.taxonomy = taxonomy;
    out.item_ids.reserve(catalog.size());
    for (const auto& item : catalog) out.item_ids.push_back(item.item_id);
    std::sort(out.item_ids.begin(), out.item_ids.end());
    if (std::adjacent_find(out.item_ids.begin(), out.item_ids.end()) != out.item_ids.end())
        throw ValidationError("catalog contains duplicate item_ids");
    out.items_by_category.assign(taxonomy.size(), {});
    out.category.reserve(out.item_ids.size());
    for (std::size_t i = 0; i < out.item_ids.size(); ++i) {
        auto it = classification.find(out.item_ids[i]);
        const std::size_t c = it == classification.end() ? taxonomy.unknown_index() : taxonomy.index_of(it->second.category);
        out.category.push_back(c);
        out.items_by_category[c].push_back(i);
    }
    return out;
}

}  // namespace artai
