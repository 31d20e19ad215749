#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlgov/fragmenter.hpp"
#include "sqlgov/knowledge_base.hpp"
#include "sqlgov/modifier.hpp"
#include "sqlgov/prompts.hpp"
#include "sqlgov/providers.hpp"

namespace sqlgov {

struct ErrorLocation {
    enum class Kind { LINE_COLUMN, OFFSET, NEAR_TOKEN };
    Kind kind = Kind::LINE_COLUMN;
    std::size_t line = 0;    // 1-based
    std::size_t column = 0;  // 1-based
    std::size_t offset = 0;  // 0-based character offset
    std::string token;       // NEAR_TOKEN; empty means end of input

    friend bool operator==(const ErrorLocation&, const ErrorLocation&) = default;
};

struct ParsedError {
    std::string exception_type;  // "UNKNOWN" when nothing matched
    std::optional<ErrorLocation> location;
    std::string message;
    std::string raw_log;
};

inline constexpr std::string_view kUnknownErrorType = "UNKNOWN";

/// Regex-based extraction of the exception type, location and first
/// descriptive sentence. Never throws on non-blank input.
ParsedError parse_error_log(std::string_view log);

/// Retrieval key: type + ": " + message, numbers as [N], quoted names as [ID].
std::string error_key(const ParsedError& error);

/// Offset of the location inside `query`, if it lands inside it.
std::optional<std::size_t> resolve_offset(const ErrorLocation& location, std::string_view query);

/// One-line description used in the correction prompt.
std::string describe(const ParsedError& error);

enum class CorrectionScope { LOCAL, GLOBAL };
std::string_view to_string(CorrectionScope scope);

struct SchemaSlice {
    enum class Kind { NONE, TABLES, FULL };
    Kind kind = Kind::NONE;
    std::vector<std::string> tables;  // TABLES only
};

struct CorrectionPlan {
    std::optional<ErrorStrategy> strategy;
    double similarity = 0.0;
    CorrectionScope scope = CorrectionScope::GLOBAL;
    SchemaSlice schema;
    std::optional<int> target_fragment;
    std::string guidance;
    std::string error_text;
    std::string fallback_reason;  // set when the plan is the conservative fallback

    bool fallback() const { return !fallback_reason.empty(); }
};

/// Builds a plan from the stored strategies. Misses, and localized strategies
/// without a usable location, degrade to GLOBAL with the full schema.
CorrectionPlan clarify(const ParsedError& error, const FragmentTree& tree, const KnowledgeSnapshot& kb,
                       EmbeddingProvider& embedder, double strategy_threshold = kDefaultStrategyThreshold);

struct CorrectionInputs {
    CorrectionPlan plan;  // downgraded to GLOBAL when the target is missing
    prompts::CorrectSlots slots;
    sql::Span span;  // replaced region of the original query
};

/// LOCAL: the target fragment plus its parent with every child elided.
/// Schema text is resolved against the catalog per the plan's slice.
CorrectionInputs prepare_data(const CorrectionPlan& plan, std::string_view query, const FragmentTree& tree,
                              const Catalog& catalog);

struct CorrectionResult {
    std::string original;
    std::string corrected;
    CorrectionPlan plan;  // of the last round
    int rounds = 1;
};

/// LOCAL answers replace the span, GLOBAL answers the whole query. No
/// validation.
std::string apply_correction(std::string_view query, const CorrectionInputs& inputs, std::string_view answer);

/// Sends the CORRECT prompt and splices the answer in. The result must parse,
/// else STILL_INVALID.
CorrectionResult correct(std::string_view query, const CorrectionInputs& inputs, LlmProvider& llm);

/// Synthetic error log from the fragmenter's own parse diagnostic.
std::optional<std::string> diagnostic_log(const FragmentTree& tree);

class SyntaxCorrector {
public:
    SyntaxCorrector(const KnowledgeSnapshot& kb, LlmProvider& llm, EmbeddingProvider& embedder)
        : kb_(kb), llm_(llm), embedder_(embedder) {}

    /// Clarification, preparation and correction. Later rounds start from the
    /// previous output with the fragmenter's parse diagnostic as the log.
    CorrectionResult fix(std::string_view query, std::string_view error_log, const Catalog& catalog = {},
                         int max_rounds = 1) const;

private:
    const KnowledgeSnapshot& kb_;
    LlmProvider& llm_;
    EmbeddingProvider& embedder_;
};

}  // namespace sqlgov
