#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sqlgov/matchers.hpp"
#include "sqlgov/providers.hpp"

namespace sqlgov {

struct Fragment;

enum class Tool { REWRITER, CORRECTOR, MODIFIER, VERIFIER };
enum class RuleStatus { CANDIDATE, VERIFIED, RETIRED };

std::string_view to_string(Tool tool);
std::string_view to_string(RuleStatus status);
Tool parse_tool(std::string_view text);
RuleStatus parse_rule_status(std::string_view text);

inline constexpr Tool kAllTools[] = {Tool::REWRITER, Tool::CORRECTOR, Tool::MODIFIER, Tool::VERIFIER};

struct RuleEntry {
    std::string index;
    std::string description;
    std::optional<Matcher> matcher;  // absent: retrieval-only guidance
    Tool tool = Tool::REWRITER;
    RuleStatus status = RuleStatus::CANDIDATE;
    std::int64_t created_at = 0;  // epoch seconds
    std::optional<std::int64_t> verified_at;

    friend bool operator==(const RuleEntry&, const RuleEntry&) = default;
};

struct HistoricalCase {
    std::string index;
    std::string details;
    std::vector<std::string> tags;  // rule index labels
    std::string sql_template;
    Vector embedding;
    Tool tool = Tool::REWRITER;

    friend bool operator==(const HistoricalCase&, const HistoricalCase&) = default;
};

struct ErrorStrategy {
    std::string index;
    std::string message_pattern;
    bool needs_schema = false;
    bool localized = false;
    std::string guidance;
    Vector embedding;

    friend bool operator==(const ErrorStrategy&, const ErrorStrategy&) = default;
};

struct ToolStats {
    std::int64_t n_current = 0;                // verified rules
    std::vector<std::int64_t> update_times;    // epoch seconds of each verification round

    std::optional<std::int64_t> last_update() const;
    /// Gaps between consecutive update times, in seconds.
    std::vector<double> intervals() const;

    friend bool operator==(const ToolStats&, const ToolStats&) = default;
};

struct KnowledgeSnapshot {
    std::vector<RuleEntry> rules;
    std::vector<HistoricalCase> cases;
    std::vector<ErrorStrategy> strategies;
    std::map<Tool, ToolStats> stats;

    const RuleEntry* find_rule(Tool tool, std::string_view index) const;
    std::size_t count_rules(Tool tool, RuleStatus status) const;

    friend bool operator==(const KnowledgeSnapshot&, const KnowledgeSnapshot&) = default;
};

inline constexpr int kSchemaVersion = 1;
inline constexpr double kDefaultStrategyThreshold = 0.55;
inline constexpr std::size_t kDefaultCaseK = 5;
// Similarities closer than this rank as equal (then by index). Bag-of-token
// embeddings give mathematically equal scores that differ in the last bit.
inline constexpr double kSimilarityTieTolerance = 1e-12;

/// VERIFIED rules of `tool` whose matcher holds on the fragment, sorted by index.
std::vector<RuleEntry> match_rules(const Fragment& fragment, Tool tool, const KnowledgeSnapshot& kb);

struct ScoredCase {
    const HistoricalCase* item = nullptr;
    double similarity = 0.0;
};

struct CaseQuery {
    std::optional<std::vector<std::string>> tag_filter;
    std::size_t k = kDefaultCaseK;
    std::optional<Tool> tool;
};

/// Templatizes and embeds the query, then ranks stored cases by cosine
/// similarity (descending, ties by index). Results point into `kb`.
std::vector<ScoredCase> retrieve_cases(std::string_view query, const KnowledgeSnapshot& kb,
                                       EmbeddingProvider& embedder, const CaseQuery& options = {});

struct ScoredStrategy {
    const ErrorStrategy* item = nullptr;
    double similarity = 0.0;
};

std::optional<ScoredStrategy> retrieve_strategy(std::string_view error_key, const KnowledgeSnapshot& kb,
                                                EmbeddingProvider& embedder,
                                                double threshold = kDefaultStrategyThreshold);

/// Writes rules.jsonl, cases.jsonl, strategies.jsonl and meta.json under `dir`.
void save(const KnowledgeSnapshot& snapshot, const std::string& dir);
KnowledgeSnapshot load(const std::string& dir);

nlohmann::ordered_json to_json(const RuleEntry& rule);
RuleEntry rule_from_json(const nlohmann::ordered_json& j);

/// Writes through a temporary file and rename. Throws IO_FAILURE.
void write_file_atomic(const std::string& path, const std::string& content);

/// Built-in starter content: rewrite rules, correction strategies and a few
/// rewrite cases, with embeddings from `embedder`.
KnowledgeSnapshot seed_snapshot(EmbeddingProvider& embedder, std::int64_t now = 0);

HistoricalCase make_case(std::string index, std::string details, std::vector<std::string> tags,
                         std::string_view sql, Tool tool, EmbeddingProvider& embedder);

}  // namespace sqlgov
