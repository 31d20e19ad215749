#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlgov/providers.hpp"

namespace sqlgov {

struct KeywordSpec {
    std::string phrase;
    double weight = 1.0;  // in (0, 1]
};

struct IntentCategory {
    std::string id;
    std::string instruction;  // task description used in the modification prompt
    std::vector<KeywordSpec> keywords;
    std::vector<std::string> examples;  // labelled requests for the centroid
    Vector centroid;
};

inline constexpr std::string_view kRealizeSemantics = "REALIZE_SEMANTICS";
inline constexpr std::string_view kExplainSql = "EXPLAIN_SQL";
inline constexpr std::string_view kAdoptSyntax = "ADOPT_SYNTAX";
inline constexpr std::string_view kOther = "OTHER";

struct ModifierConfig {
    double alpha = 0.4;
    double beta_sim = 0.6;
    double theta = 0.35;
    std::size_t top_k_tables = 5;
    bool masking_pathway = false;  // embed the masked request instead of the instructed one

    /// Throws INVALID_ARGUMENT when a field is out of range.
    void validate() const;
};

struct ColumnInfo {
    std::string name;
    std::string description;
};

struct TableInfo {
    std::string name;
    std::string description;
    std::vector<ColumnInfo> columns;
};

/// Keyed by lower-case table name.
using Catalog = std::map<std::string, TableInfo>;

/// {"t": ["a", "b"]} or {"t": {"description": "...", "columns": [{"name": "a",
/// "description": "..."}, "b"]}}.
Catalog parse_catalog(const nlohmann::json& j);
Catalog load_catalog(const std::string& path);

/// Schema text for the given tables; tables missing from the catalog are
/// listed by name only.
std::string render_schema(const std::vector<std::string>& tables, const Catalog& catalog);

struct ModificationContext {
    std::string target_sql;
    std::string surrounding_context;
    std::vector<TableInfo> referenced_metadata;
    std::vector<TableInfo> frequent_tables;
    std::string timestamp;  // ISO 8601, UTC

    std::string metadata_text() const;
    std::string frequent_tables_text() const;
};

std::string iso_timestamp(std::int64_t epoch_seconds);

/// Table access counts from a list of past queries.
std::map<std::string, std::int64_t> table_frequencies(const std::vector<std::string>& history_sql);

ModificationContext prepare_metadata(std::string_view target_sql, std::string_view context, const Catalog& catalog,
                                     const std::map<std::string, std::int64_t>& history, const ModifierConfig& cfg,
                                     std::int64_t now);

/// Mean of matched keyword weights over the category's keyword count;
/// matching is case-insensitive on whole words.
double keyword_score(std::string_view request, const IntentCategory& category);

/// Quoted strings, numbers and names known from the catalog become [MASK].
std::string mask_request(std::string_view request, const Catalog& catalog = {});

/// Text actually embedded for a request under the configured pathway.
std::string embedding_text(std::string_view request, const ModifierConfig& cfg, const Catalog& catalog = {});

struct Classification {
    std::optional<std::string> category;  // nullopt: REJECTED
    double score = 0.0;                   // best F
    std::vector<double> scores;           // F per category, declaration order

    bool rejected() const { return !category.has_value(); }
};

/// F = alpha * keyword score + beta_sim * cosine(request, centroid); argmax
/// with ties to the earlier category; REJECTED below theta.
Classification classify_intent(std::string_view request, const std::vector<IntentCategory>& categories,
                               EmbeddingProvider& embedder, const ModifierConfig& cfg, const Catalog& catalog = {});

/// Same as above with a precomputed request embedding.
Classification classify_embedded(std::string_view request, const Vector& request_embedding,
                                 const std::vector<IntentCategory>& categories, const ModifierConfig& cfg);

/// Centroid = normalised mean of member embeddings. Categories without
/// examples keep their centroid; EMPTY_CATEGORY if they have none.
std::vector<IntentCategory> build_centroids(std::vector<IntentCategory> categories,
                                            const std::vector<std::pair<std::string, std::string>>& labeled,
                                            EmbeddingProvider& embedder, const ModifierConfig& cfg = {});

/// Categories from JSON ({"categories": [...]}) with centroids built from
/// their examples.
std::vector<IntentCategory> parse_categories(const nlohmann::json& j, EmbeddingProvider& embedder,
                                             const ModifierConfig& cfg = {});
std::vector<IntentCategory> load_categories(const std::string& path, EmbeddingProvider& embedder,
                                            const ModifierConfig& cfg = {});
/// The shipped categories.json content.
const nlohmann::ordered_json& default_categories_json();

struct ModifyResult {
    std::string category;
    std::string sql;
    std::string explanation;
};

/// Sends the category's prompt and returns the provider's SQL. For
/// EXPLAIN_SQL the output must templatize like the input once comments are
/// stripped, else CONTRACT_VIOLATION.
ModifyResult modify(std::string_view request, const ModificationContext& ctx, const IntentCategory& category,
                    LlmProvider& llm);

}  // namespace sqlgov
