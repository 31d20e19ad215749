#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlgov/equivalence_verifier.hpp"
#include "sqlgov/knowledge_base.hpp"
#include "sqlgov/matchers.hpp"

namespace sqlgov {

enum class Scenario { RULE_GUIDED, EXPLORATORY, ALREADY_EFFICIENT };
std::string_view to_string(Scenario s);

struct RewriteSuggestion {
    int fragment_id = 0;
    std::optional<std::string> rule_index;
    std::vector<std::string> other_rules;  // further accepted rules on the same fragment
    std::string action;
    std::string rationale;
    Scenario scenario = Scenario::ALREADY_EFFICIENT;

    bool actionable() const { return scenario != Scenario::ALREADY_EFFICIENT; }
    friend bool operator==(const RewriteSuggestion&, const RewriteSuggestion&) = default;
};

struct RewriteResult {
    std::string original;
    std::string rewritten;
    std::vector<RewriteSuggestion> suggestions_applied;
    std::vector<std::string> cases_consulted;
    std::optional<EquivalenceVerdict> verified;
};

struct RewriterConfig {
    std::size_t case_k = kDefaultCaseK;
    bool parallel = false;  // evaluate fragments concurrently
};

/// True when a fragment with no rule hit needs no further analysis: a single
/// input, no IN or scalar subqueries, no outer-join null filter, no repeated
/// scan and an explicit projection.
bool passes_efficiency_screen(const FragmentFacts& facts);

class Rewriter {
public:
    Rewriter(const KnowledgeSnapshot& kb, LlmProvider& llm, EmbeddingProvider& embedder, RewriterConfig config = {})
        : kb_(kb), llm_(llm), embedder_(embedder), config_(config) {}

    /// One suggestion per fragment, in analysis order. Throws UNPARSEABLE when
    /// the query does not parse.
    std::vector<RewriteSuggestion> evaluate(std::string_view sql);

    /// Throws REJECTED_RESPONSE when the provider's SQL does not parse.
    RewriteResult rewrite(std::string_view sql, const std::vector<RewriteSuggestion>& suggestions);

    /// evaluate + rewrite, optionally followed by an equivalence check.
    RewriteResult run(std::string_view sql, bool verify = false);

private:
    RewriteSuggestion evaluate_fragment(const Fragment& fragment);

    const KnowledgeSnapshot& kb_;
    LlmProvider& llm_;
    EmbeddingProvider& embedder_;
    RewriterConfig config_;
};

}  // namespace sqlgov
