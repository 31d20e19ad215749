#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "sqlgov/sql_ast.hpp"

namespace sqlgov {

struct Fragment;

enum class PredicateKind {
    ContainsOperator,
    SameTableScanned,
    OuterJoinWithNullFilter,
    InSubquery,
    UnionAllUnprojected,
    ScalarSubqueryInSelect,
};

struct Predicate {
    PredicateKind kind = PredicateKind::InSubquery;
    std::string op;     // ContainsOperator: upper-case token sequence, e.g. "NOT IN"
    int min_count = 2;  // SameTableScanned

    std::string to_string() const;
    /// Parses `name` or `name(arg)`. Throws INVALID_ARGUMENT.
    static Predicate parse(std::string_view text);
    friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// Conjunction of predicates evaluated against one fragment.
struct Matcher {
    std::vector<Predicate> all;

    bool matches(const Fragment& fragment) const;
    friend bool operator==(const Matcher&, const Matcher&) = default;
};

/// Facts about a single fragment level (child subqueries and CTE bodies are
/// opaque). Shared by the matchers and the rewriter's efficiency screen.
struct FragmentFacts {
    bool parsed = false;
    std::vector<std::string> tokens;  // upper-cased token texts outside child spans
    std::vector<std::string> scanned_tables;  // base tables, through derived tables in FROM
    int from_inputs = 0;
    bool has_join = false;
    bool has_in_subquery = false;
    bool has_scalar_subquery_in_select = false;
    bool has_outer_join_null_filter = false;
    bool has_select_star = false;
    bool has_union_all_star = false;
    bool has_duplicate_scan(int min_count = 2) const;
};

FragmentFacts analyze_fragment(std::string_view fragment_text);

bool evaluate(const Predicate& p, const FragmentFacts& facts);

}  // namespace sqlgov
