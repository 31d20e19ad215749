#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "sqlgov/knowledge_base.hpp"
#include "sqlgov/providers.hpp"

namespace sqlgov {

// ---- benchmark --------------------------------------------------------------

struct BenchPair {
    std::string query_id;
    std::string original;
    std::string rewritten;
};

struct BenchResult {
    std::string query_id;
    double et_pre = 0.0;
    double et_post = 0.0;
    double ets = 0.0;
    std::optional<double> etog;  // percent; absent when et_pre is 0
    std::vector<double> trials_pre;
    std::vector<double> trials_post;
};

struct BenchExclusion {
    std::string query_id;
    std::string side;  // "original" or "rewritten"
    std::string error_log;
};

struct BenchReport {
    std::vector<BenchResult> results;
    std::vector<BenchExclusion> excluded;
    std::optional<double> mean_etog;
    double total_ets = 0.0;
};

inline constexpr std::size_t kDefaultTrials = 3;

/// Median of the timings after dropping the first (warm-up) run; the single
/// run when there is only one.
double steady_time(const std::vector<double>& timings);

BenchResult make_result(std::string query_id, std::vector<double> pre, std::vector<double> post);

/// Runs each side `trials` times, one pair at a time. A pair whose either side
/// errors is excluded and reported.
BenchReport bench(const std::vector<BenchPair>& pairs, Executor& executor, std::size_t trials = kDefaultTrials);

/// JSONL lines of {"id", "original", "rewritten"}; the SQL fields may instead
/// be file paths under "original_file"/"rewritten_file", relative to the list.
std::vector<BenchPair> load_bench_pairs(const std::string& path);

nlohmann::ordered_json to_json(const BenchReport& report);

// ---- routing ------------------------------------------------------------------

enum class IntentHint { NONE, EFFICIENCY, SEMANTIC };

IntentHint parse_hint(std::string_view text);

struct Issue {
    std::string sql;
    std::optional<std::string> request;
    std::optional<std::string> error_log;
    IntentHint hint = IntentHint::NONE;
};

/// True when the request talks about speed or cost.
bool mentions_performance(std::string_view request);

/// Error log → CORRECTOR; efficiency hint, or no hint and a performance
/// request → REWRITER; else MODIFIER.
Tool route(const Issue& issue);

// ---- configuration ------------------------------------------------------------

struct Config {
    std::string kb_dir = ".sqlgov/kb";
    std::string provider = "scripted";  // scripted | permissive
    std::string playbook;
    std::size_t embedding_dimension = 768;
    std::string executor_fixtures;
    std::string catalog;
    std::string categories;
    std::map<std::string, std::string> extra;  // unrecognised keys, kept for callers
};

/// `key = value` lines; '#' starts a comment, [sections] are ignored and
/// values may be quoted. Throws INVALID_ARGUMENT on malformed lines.
Config parse_config(std::string_view text);

/// Reads `path` when it exists (missing file: defaults), then applies
/// SQLGOV_KB_DIR, SQLGOV_PROVIDER and SQLGOV_PLAYBOOK.
Config load_config(const std::optional<std::string>& path);

void apply_env(Config& config);

// ---- tool report ----------------------------------------------------------------

struct ToolReport {
    Tool tool = Tool::REWRITER;
    std::string input_digest;
    nlohmann::ordered_json output = nlohmann::ordered_json::object();
    std::vector<std::string> rules_used;
    std::vector<std::string> cases_used;
    std::vector<std::pair<std::string, double>> timings;  // stage, seconds
};

/// Provenance ids that do not resolve against the snapshot.
std::vector<std::string> unresolved_provenance(const ToolReport& report, const KnowledgeSnapshot& kb);

nlohmann::ordered_json to_json(const ToolReport& report);

}  // namespace sqlgov
