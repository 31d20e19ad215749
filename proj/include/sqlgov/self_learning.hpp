#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqlgov/knowledge_base.hpp"

namespace sqlgov {

struct LearningConfig {
    double lambda = 2.5;
    double beta_time = 1.3;
    double dbscan_eps = 0.25;  // cosine distance
    std::size_t dbscan_min_pts = 2;
    double slow_quantile = 0.9;
    std::size_t min_records_for_quantile = 3;
    std::size_t max_demonstrations = 3;
};

enum class RecordStatus { OK, ERROR, SLOW };
std::string_view to_string(RecordStatus s);
RecordStatus parse_record_status(std::string_view text);

struct ExecutionRecord {
    std::string id;
    std::string sql;
    std::optional<std::string> user_query;
    RecordStatus status = RecordStatus::OK;
    std::optional<std::string> error_log;
    double elapsed = 0.0;  // seconds
    std::optional<std::string> result_digest;

    friend bool operator==(const ExecutionRecord&, const ExecutionRecord&) = default;
};

/// JSONL with fields id, sql, user_query, status, error_log, elapsed,
/// result_digest. Missing ids become "R<line>".
std::vector<ExecutionRecord> load_records(const std::string& path);

struct CandidateRuleBatch {
    std::vector<RuleEntry> rules;                                  // all CANDIDATE
    std::map<std::string, std::vector<std::string>> source_records;  // rule index -> record ids
    std::vector<ExecutionRecord> records;
    std::int64_t generated_at = 0;

    friend bool operator==(const CandidateRuleBatch&, const CandidateRuleBatch&) = default;
};

nlohmann::ordered_json to_json(const CandidateRuleBatch& batch);
CandidateRuleBatch batch_from_json(const nlohmann::ordered_json& j);

/// Linear-interpolation quantile of `values` (q in [0,1]). Empty input gives 0.
double quantile(std::vector<double> values, double q);

/// Keeps ERROR and SLOW records plus those slower than the batch quantile
/// (only with enough records to estimate it); one record per SQL template.
std::vector<ExecutionRecord> filter_records(const std::vector<ExecutionRecord>& records,
                                            const LearningConfig& cfg = {});

/// One rule-generation prompt per record. A malformed answer is retried once
/// with a format reminder, then REJECTED_RESPONSE. Patterns that already
/// exist as active rules of the same tool are skipped.
CandidateRuleBatch generate_rules(const std::vector<ExecutionRecord>& records, const KnowledgeSnapshot& kb,
                                  LlmProvider& llm, std::int64_t now, const LearningConfig& cfg = {});

std::int64_t count_threshold(std::int64_t n_current, const LearningConfig& cfg = {});
/// Throws NO_HISTORY for an empty interval list.
double time_threshold(const std::vector<double>& intervals, const LearningConfig& cfg = {});
bool should_trigger_verification(std::int64_t pending, std::optional<double> elapsed_since_update,
                                 const ToolStats& stats, const LearningConfig& cfg = {});

/// DBSCAN over 1 - cosine similarity. Noise points come back as singletons;
/// members are sorted and clusters are ordered by their first member.
std::vector<std::vector<std::size_t>> dbscan(const std::vector<Vector>& points, double eps, std::size_t min_pts);

std::vector<Vector> embed_descriptions(const std::vector<RuleEntry>& rules, EmbeddingProvider& embedder);

/// Clusters of positions into `rules`.
std::vector<std::vector<std::size_t>> cluster_rules(const std::vector<RuleEntry>& rules, EmbeddingProvider& embedder,
                                                    const LearningConfig& cfg = {});

/// Position of the member minimising the summed Euclidean distance to the
/// others; ties go to the earliest created_at, then the lower position.
std::size_t medoid(const std::vector<Vector>& embeddings, const std::vector<std::int64_t>& created_at);
RuleEntry merge_cluster(const std::vector<RuleEntry>& cluster, const std::vector<Vector>& embeddings);

struct DedupReport {
    std::vector<std::pair<std::string, std::vector<std::string>>> merged;  // survivor, absorbed
};

/// Clusters the VERIFIED rules of each tool, keeps each cluster's medoid,
/// retires the rest and moves their case tags to the survivor.
KnowledgeSnapshot deduplicate(const KnowledgeSnapshot& kb, EmbeddingProvider& embedder, const LearningConfig& cfg = {},
                              DedupReport* report = nullptr);

/// Appends the batch's candidates that are not yet in the snapshot.
KnowledgeSnapshot add_candidates(const KnowledgeSnapshot& kb, const CandidateRuleBatch& batch);

enum class Decision { ACCEPT, REJECT };

struct VerificationDecision {
    Decision decision = Decision::REJECT;
    std::optional<Matcher> matcher;
};

/// Decisions file: {"INDEX": "ACCEPT"} or {"INDEX": {"decision": "ACCEPT",
/// "matcher": ["in_subquery"]}}.
std::map<std::string, VerificationDecision> parse_decisions(const nlohmann::json& j);

/// ACCEPT: VERIFIED, source records become cases tagged with the rule index.
/// REJECT: RETIRED. Undecided candidates stay CANDIDATE. Throws UNKNOWN_RULE
/// for a key that is not in the batch.
KnowledgeSnapshot apply_verification(const KnowledgeSnapshot& kb, const CandidateRuleBatch& batch,
                                     const std::map<std::string, VerificationDecision>& decisions,
                                     EmbeddingProvider& embedder, std::int64_t now);

}  // namespace sqlgov
