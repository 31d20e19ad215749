#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sqlgov/sql_ast.hpp"

namespace sqlgov {

enum class FragmentKind { MAIN, CTE, SUBQUERY };

enum class ClauseSite { FROM, WHERE, HAVING, SELECT_LIST, ORDER_BY, CTE_BODY, NONE };

std::string_view to_string(FragmentKind kind);
std::string_view to_string(ClauseSite site);

/// One self-contained unit of a query: the main statement, a CTE body, or a
/// parenthesised subquery. Ids follow the analysis order (children first).
struct Fragment {
    int id = 0;
    FragmentKind kind = FragmentKind::MAIN;
    std::string text;
    sql::Span span;
    std::optional<int> parent_id;
    int depth = 1;
    ClauseSite clause_site = ClauseSite::NONE;
    std::vector<int> children;  // in analysis order
};

struct ParseDiagnostic {
    std::size_t offset = 0;
    std::size_t line = 1;
    std::size_t column = 1;
    std::string message;
};

struct FragmentTree {
    std::vector<Fragment> fragments;  // sorted by id, ids are 1..n
    int root_id = 0;
    std::string source;
    /// Set when the query failed to parse; the tree then comes from
    /// bracket-balanced slicing and is best-effort.
    std::optional<ParseDiagnostic> diagnostic;

    bool parsed() const { return !diagnostic.has_value(); }
    const Fragment& get(int id) const;
    const Fragment& root() const { return get(root_id); }
    int max_depth() const;
    std::size_t size() const { return fragments.size(); }
};

/// Splits a query into fragments. Blank input throws EMPTY_QUERY; a query that
/// does not parse still yields a tree, flagged through `diagnostic`.
FragmentTree decompose(std::string_view query);

/// Deepest fragment whose span contains `offset`. Throws OUT_OF_RANGE.
const Fragment& fragment_at(const FragmentTree& tree, std::size_t offset);

/// Rebuilds the source by filling each fragment's child spans with the
/// children's own reassembled text.
std::string reassemble(const FragmentTree& tree);

/// Per-fragment analysis record kept by the tools that walk a tree.
struct Finding {
    std::string rule_label;
    std::string narrative;
    double confidence = 0.0;
};

struct AnalysisResult {
    int fragment_id = 0;
    std::vector<Finding> findings;
};

}  // namespace sqlgov
