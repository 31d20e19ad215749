#pragma once

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sqlgov/providers.hpp"

namespace sqlgov {

struct FieldProvenance {
    std::string output_name;
    std::set<std::string> source_tables;  // base tables, lower-case
    std::string transformation;           // empty for a plain column
    std::vector<std::string> conditions;

    friend bool operator==(const FieldProvenance&, const FieldProvenance&) = default;
};

struct IntentSummary {
    std::vector<FieldProvenance> fields;
    std::set<std::string> base_tables;  // every base table the query reads
    std::string narrative;

    std::size_t arity() const { return fields.size(); }
    /// Deterministic plain-text rendering of `fields`.
    std::string structure_text() const;
};

enum class Verdict { EQUIVALENT, NOT_EQUIVALENT, UNDECIDED };
std::string_view to_string(Verdict v);

struct FieldMatch {
    int left = 0;  // 1-based output positions
    int right = 0;
    bool equivalent = false;
    double confidence = 0.0;
};

struct EquivalenceVerdict {
    Verdict verdict = Verdict::UNDECIDED;
    double confidence = 0.0;
    std::optional<std::vector<FieldMatch>> field_mapping;
    std::optional<std::string> counterexample;
    std::optional<std::string> reason;  // heuristic or short-circuit explanation
};

struct VerifierConfig {
    double confidence_floor = 0.7;
};

/// Output fields, their provenance and the base-table set, read straight from
/// the parse tree (CTE names and aliases resolved). Throws
/// UNSUPPORTED_STATEMENT for non-SELECT statements and UNPARSEABLE otherwise.
IntentSummary structural_intent(std::string_view sql);

/// NOT_EQUIVALENT when arity or base-table sets differ, else nullopt.
std::optional<EquivalenceVerdict> prefilter(const IntentSummary& a, const IntentSummary& b);

class EquivalenceVerifier {
public:
    EquivalenceVerifier(LlmProvider& llm, VerifierConfig config = {}) : llm_(llm), config_(config) {}

    /// Structural intent plus a narrative built innermost-first, one provider
    /// call per fragment.
    IntentSummary extract_intent(std::string_view sql);

    EquivalenceVerdict check_equivalence(std::string_view a, std::string_view b);

private:
    EquivalenceVerdict align(std::string_view a, const IntentSummary& ia, std::string_view b,
                             const IntentSummary& ib);

    LlmProvider& llm_;
    VerifierConfig config_;
};

}  // namespace sqlgov
