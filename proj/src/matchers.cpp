#include "sqlgov/matchers.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/sql_lexer.hpp"

namespace sqlgov {

using sql::Expr;
using sql::ExprKind;
using sql::Query;
using sql::SelectCore;
using sql::TableRef;

namespace {

struct Names {
    PredicateKind kind;
    std::string_view name;
};

constexpr Names kNames[] = {
    {PredicateKind::ContainsOperator, "contains_operator"},
    {PredicateKind::SameTableScanned, "same_table_scanned"},
    {PredicateKind::OuterJoinWithNullFilter, "outer_join_with_null_filter"},
    {PredicateKind::InSubquery, "in_subquery"},
    {PredicateKind::UnionAllUnprojected, "union_all_unprojected"},
    {PredicateKind::ScalarSubqueryInSelect, "scalar_subquery_in_select"},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string table_key(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& p : parts) {
        if (!out.empty()) out += '.';
        out += sql::to_lower(p);
    }
    return out;
}

// Visits an expression tree without entering subquery bodies.
void walk_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
    fn(e);
    for (const auto& a : e.args) walk_expr(a, fn);
    for (const auto& w : e.window) walk_expr(w, fn);
}

void split_conjuncts(const Expr& e, std::vector<const Expr*>& out) {
    if (e.kind == ExprKind::Binary && e.op == "AND") {
        split_conjuncts(e.args[0], out);
        split_conjuncts(e.args[1], out);
    } else {
        out.push_back(&e);
    }
}

void collect_scans(const Query& q, std::vector<std::string>& out);

void collect_scans(const TableRef& ref, std::vector<std::string>& out) {
    switch (ref.kind) {
        case TableRef::Kind::Table: out.push_back(table_key(ref.name)); break;
        case TableRef::Kind::Derived:
            if (ref.derived) collect_scans(*ref.derived, out);
            break;
        case TableRef::Kind::Join:
            for (const auto& c : ref.children) collect_scans(c, out);
            break;
        case TableRef::Kind::Function: break;
    }
}

void collect_scans(const Query& q, std::vector<std::string>& out) {
    for (const auto& arm : q.arms) {
        if (arm.core) {
            for (const auto& ref : arm.core->from) collect_scans(ref, out);
        } else if (arm.nested) {
            collect_scans(*arm.nested, out);
        }
    }
}

// Exposed names of every source that a LEFT/RIGHT/FULL join may null-extend.
void nullable_sources(const TableRef& ref, bool nullable, std::set<std::string>& out) {
    if (ref.kind != TableRef::Kind::Join) {
        if (nullable) out.insert(sql::to_lower(ref.exposed_name()));
        return;
    }
    const bool left_null = nullable || ref.join_type == sql::JoinType::Right || ref.join_type == sql::JoinType::Full;
    const bool right_null = nullable || ref.join_type == sql::JoinType::Left || ref.join_type == sql::JoinType::Full;
    if (!ref.children.empty()) nullable_sources(ref.children[0], left_null, out);
    if (ref.children.size() > 1) nullable_sources(ref.children[1], right_null, out);
}

void join_conditions(const TableRef& ref, std::vector<const Expr*>& out, bool& has_join) {
    if (ref.kind == TableRef::Kind::Function) out.push_back(&ref.function);
    if (ref.kind != TableRef::Kind::Join) return;
    has_join = true;
    if (ref.condition) out.push_back(&*ref.condition);
    for (const auto& c : ref.children) join_conditions(c, out, has_join);
}

bool core_has_star(const SelectCore& core) {
    return std::any_of(core.items.begin(), core.items.end(), [](const auto& i) { return i.is_star(); });
}

bool query_has_star(const Query& q) {
    for (const auto& arm : q.arms) {
        if (arm.core && core_has_star(*arm.core)) return true;
        if (arm.nested && query_has_star(*arm.nested)) return true;
    }
    return false;
}

class LevelWalker {
public:
    explicit LevelWalker(FragmentFacts& facts) : facts_(facts) {}

    void query(const Query& q) {
        for (const auto& arm : q.arms) {
            if (arm.core) core(*arm.core);
            else if (arm.nested) query(*arm.nested);
        }
        const bool union_all = std::find(q.set_ops.begin(), q.set_ops.end(), "UNION ALL") != q.set_ops.end();
        if (union_all && query_has_star(q)) facts_.has_union_all_star = true;
        for (const auto& o : q.order_by) expr(o.expr, false);
        if (q.limit) expr(*q.limit, false);
    }

private:
    void core(const SelectCore& c) {
        facts_.from_inputs = std::max(facts_.from_inputs, static_cast<int>(c.from.size()));
        for (const auto& item : c.items) {
            if (item.is_star()) facts_.has_select_star = true;
            expr(item.expr, true);
        }
        std::vector<const Expr*> conditions;
        std::set<std::string> nullable;
        for (const auto& ref : c.from) {
            collect_scans(ref, facts_.scanned_tables);
            join_conditions(ref, conditions, facts_.has_join);
            nullable_sources(ref, false, nullable);
        }
        for (const Expr* e : conditions) expr(*e, false);
        if (c.where) {
            expr(*c.where, false);
            std::vector<const Expr*> conjuncts;
            split_conjuncts(*c.where, conjuncts);
            for (const Expr* e : conjuncts) {
                if (e->kind != ExprKind::IsNull || !e->negated || e->op != "NULL") continue;
                const Expr& col = e->args.front();
                if (col.kind != ExprKind::Column || col.qualifier.empty()) continue;
                if (nullable.count(sql::to_lower(col.qualifier.back())) > 0) facts_.has_outer_join_null_filter = true;
            }
        }
        for (const auto& g : c.group_by) expr(g, false);
        if (c.having) expr(*c.having, false);
        if (c.qualify) expr(*c.qualify, false);
    }

    void expr(const Expr& root, bool in_select) {
        walk_expr(root, [&](const Expr& e) {
            if (e.kind == ExprKind::InSubquery) facts_.has_in_subquery = true;
            if (in_select && e.kind == ExprKind::Subquery) facts_.has_scalar_subquery_in_select = true;
        });
    }

    FragmentFacts& facts_;
};

}  // namespace

std::string Predicate::to_string() const {
    std::string name;
    for (const auto& n : kNames) {
        if (n.kind == kind) name = n.name;
    }
    if (kind == PredicateKind::ContainsOperator) return name + "(" + op + ")";
    if (kind == PredicateKind::SameTableScanned) return name + "(" + std::to_string(min_count) + ")";
    return name;
}

Predicate Predicate::parse(std::string_view text) {
    const std::string s = trim(text);
    const auto open = s.find('(');
    const std::string name = trim(s.substr(0, open));
    std::string arg;
    if (open != std::string::npos) {
        const auto close = s.rfind(')');
        if (close == std::string::npos || close < open) {
            throw Error(ErrorCode::INVALID_ARGUMENT, "unbalanced predicate '" + s + "'");
        }
        arg = trim(s.substr(open + 1, close - open - 1));
    }
    for (const auto& n : kNames) {
        if (n.name != name) continue;
        Predicate p;
        p.kind = n.kind;
        if (p.kind == PredicateKind::ContainsOperator) {
            if (arg.empty()) throw Error(ErrorCode::INVALID_ARGUMENT, "contains_operator needs an operator");
            std::string norm;
            for (const auto& t : sql::tokenize(arg)) {
                if (!norm.empty()) norm += ' ';
                norm += sql::to_upper(t.text);
            }
            p.op = norm;
        } else if (p.kind == PredicateKind::SameTableScanned) {
            try {
                p.min_count = arg.empty() ? 2 : std::stoi(arg);
            } catch (const std::exception&) {
                throw Error(ErrorCode::INVALID_ARGUMENT, "bad count in '" + s + "'");
            }
        } else if (!arg.empty()) {
            throw Error(ErrorCode::INVALID_ARGUMENT, name + " takes no argument");
        }
        return p;
    }
    throw Error(ErrorCode::INVALID_ARGUMENT, "unknown predicate '" + name + "'");
}

bool FragmentFacts::has_duplicate_scan(int min_count) const {
    std::map<std::string, int> counts;
    for (const auto& t : scanned_tables) {
        if (++counts[t] >= min_count) return true;
    }
    return false;
}

FragmentFacts analyze_fragment(std::string_view text) {
    FragmentFacts facts;
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos) return facts;

    const FragmentTree tree = decompose(text);
    std::vector<sql::Span> child_spans;
    for (int id : tree.root().children) child_spans.push_back(tree.get(id).span);
    for (const auto& t : sql::tokenize(text)) {
        const bool inside = std::any_of(child_spans.begin(), child_spans.end(),
                                        [&](const sql::Span& s) { return t.begin >= s.begin && t.end <= s.end; });
        if (!inside) facts.tokens.push_back(sql::to_upper(t.text));
    }

    if (!tree.parsed()) return facts;
    const auto q = sql::parse_query(text);
    facts.parsed = true;
    LevelWalker(facts).query(*q);
    return facts;
}

bool evaluate(const Predicate& p, const FragmentFacts& facts) {
    switch (p.kind) {
        case PredicateKind::ContainsOperator: {
            const auto needle = sql::tokenize(p.op);
            if (needle.empty() || needle.size() > facts.tokens.size()) return false;
            for (std::size_t i = 0; i + needle.size() <= facts.tokens.size(); ++i) {
                bool hit = true;
                for (std::size_t j = 0; j < needle.size() && hit; ++j) {
                    hit = facts.tokens[i + j] == sql::to_upper(needle[j].text);
                }
                if (hit) return true;
            }
            return false;
        }
        case PredicateKind::SameTableScanned: return facts.has_duplicate_scan(p.min_count);
        case PredicateKind::OuterJoinWithNullFilter: return facts.has_outer_join_null_filter;
        case PredicateKind::InSubquery: return facts.has_in_subquery;
        case PredicateKind::UnionAllUnprojected: return facts.has_union_all_star;
        case PredicateKind::ScalarSubqueryInSelect: return facts.has_scalar_subquery_in_select;
    }
    return false;
}

bool Matcher::matches(const Fragment& fragment) const {
    if (all.empty()) return false;
    const FragmentFacts facts = analyze_fragment(fragment.text);
    return std::all_of(all.begin(), all.end(), [&](const Predicate& p) { return evaluate(p, facts); });
}

}  // namespace sqlgov
