#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sqlgov::sql {

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    bool contains(std::size_t offset) const { return offset >= begin && offset < end; }
    std::size_t size() const { return end - begin; }
    friend bool operator==(const Span&, const Span&) = default;
};

struct Query;
using QueryPtr = std::shared_ptr<const Query>;

enum class ExprKind {
    Literal,
    Param,
    Column,
    Star,
    Function,
    Unary,
    Binary,
    IsNull,
    InList,
    InSubquery,
    Exists,
    Between,
    Like,
    Case,
    Cast,
    Subquery,
    Interval,
    Tuple,
};

struct Expr {
    ExprKind kind = ExprKind::Literal;
    /// Literal text, column name, function name, or operator spelling.
    std::string op;
    /// Leading name parts of a column or star (`t` in `t.c`, `t.*`).
    std::vector<std::string> qualifier;
    std::vector<Expr> args;
    QueryPtr subquery;
    bool negated = false;
    bool distinct = false;
    bool has_operand = false;  // simple CASE
    bool has_else = false;
    bool has_window = false;
    std::vector<Expr> window;  // PARTITION BY and ORDER BY expressions
    Span span;
};

struct SelectItem {
    Expr expr;
    std::string alias;
    bool has_alias = false;
    Span span;

    bool is_star() const { return expr.kind == ExprKind::Star; }
};

enum class JoinType { Inner, Left, Right, Full, Cross, Semi, Anti };

struct TableRef {
    enum class Kind { Table, Derived, Join, Function };
    Kind kind = Kind::Table;
    std::vector<std::string> name;  // Table: qualified name parts
    std::string alias;
    QueryPtr derived;
    Expr function;                  // Function: table-valued call
    JoinType join_type = JoinType::Inner;
    bool natural = false;
    std::vector<TableRef> children;  // Join: [left, right]
    std::optional<Expr> condition;
    std::vector<std::string> using_columns;
    Span span;

    /// Name the rest of the query uses for this source: alias, else last name part.
    std::string exposed_name() const;
};

struct SelectCore {
    bool distinct = false;
    std::vector<SelectItem> items;
    std::vector<TableRef> from;
    std::optional<Expr> where;
    std::vector<Expr> group_by;
    std::optional<Expr> having;
    std::optional<Expr> qualify;
    Span span;
};

struct SetArm {
    std::optional<SelectCore> core;
    QueryPtr nested;  // parenthesised arm
};

struct Cte {
    std::string name;
    std::vector<std::string> columns;
    QueryPtr body;
    Span span;
};

struct OrderItem {
    Expr expr;
    bool descending = false;
};

struct Query {
    bool recursive = false;
    std::vector<Cte> ctes;
    std::vector<SetArm> arms;
    std::vector<std::string> set_ops;  // between consecutive arms, e.g. "UNION ALL"
    std::vector<OrderItem> order_by;
    std::optional<Expr> limit;
    std::optional<Expr> offset;
    Span span;

    /// Select list of the first arm (the one that names the output columns).
    const SelectCore* first_core() const;
};

class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t offset, const std::string& message)
        : std::runtime_error(message), offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Parses one SELECT-based statement (optionally WITH-prefixed, optionally
/// terminated by ';'). Throws ParseError with the byte offset of the failure.
QueryPtr parse_query(std::string_view source);

/// Leading keyword of the first statement, upper-cased ("SELECT", "WITH",
/// "INSERT", ...). Empty when the text has no tokens.
std::string statement_keyword(std::string_view source);

}  // namespace sqlgov::sql
