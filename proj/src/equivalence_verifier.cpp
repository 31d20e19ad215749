#include "sqlgov/equivalence_verifier.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "sqlgov/error.hpp"
#include "sqlgov/fragmenter.hpp"
#include "sqlgov/prompts.hpp"
#include "sqlgov/sql_lexer.hpp"
#include "sqlgov/templatize.hpp"

namespace sqlgov {

using sql::Expr;
using sql::ExprKind;
using sql::Query;
using sql::SelectCore;
using sql::TableRef;

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::EQUIVALENT: return "EQUIVALENT";
        case Verdict::NOT_EQUIVALENT: return "NOT_EQUIVALENT";
        case Verdict::UNDECIDED: return "UNDECIDED";
    }
    return "?";
}

namespace {

using TableSet = std::set<std::string>;
using CteEnv = std::map<std::string, TableSet>;

std::string joined(const TableSet& s) {
    std::string out;
    for (const auto& t : s) {
        if (!out.empty()) out += ", ";
        out += t;
    }
    return out;
}

void walk_expr(const Expr& e, const std::function<void(const Expr&)>& fn) {
    fn(e);
    for (const auto& a : e.args) walk_expr(a, fn);
    for (const auto& w : e.window) walk_expr(w, fn);
}

class Resolver {
public:
    explicit Resolver(std::string_view source) : source_(source) {}

    std::string text(const sql::Span& span) const {
        return normalize_sql(source_.substr(span.begin, span.size()));
    }

    CteEnv with_ctes(const Query& q, CteEnv env) const {
        for (const auto& cte : q.ctes) {
            TableSet tables;
            if (cte.body) {
                // a recursive CTE may name itself; it contributes nothing new
                env[sql::to_lower(cte.name)] = {};
                tables = query_tables(*cte.body, env);
            }
            env[sql::to_lower(cte.name)] = std::move(tables);
        }
        return env;
    }

    TableSet query_tables(const Query& q, const CteEnv& outer) const {
        const CteEnv env = with_ctes(q, outer);
        TableSet out;
        for (const auto& arm : q.arms) {
            if (arm.core) merge(out, core_tables(*arm.core, env));
            else if (arm.nested) merge(out, query_tables(*arm.nested, env));
        }
        for (const auto& o : q.order_by) merge(out, expr_subquery_tables(o.expr, env));
        return out;
    }

    TableSet ref_tables(const TableRef& ref, const CteEnv& env) const {
        TableSet out;
        switch (ref.kind) {
            case TableRef::Kind::Table: {
                if (ref.name.size() == 1) {
                    const auto it = env.find(sql::to_lower(ref.name.front()));
                    if (it != env.end()) return it->second;
                }
                std::string key;
                for (const auto& p : ref.name) key += (key.empty() ? "" : ".") + sql::to_lower(p);
                out.insert(key);
                break;
            }
            case TableRef::Kind::Derived:
                if (ref.derived) out = query_tables(*ref.derived, env);
                break;
            case TableRef::Kind::Join:
                for (const auto& c : ref.children) merge(out, ref_tables(c, env));
                if (ref.condition) merge(out, expr_subquery_tables(*ref.condition, env));
                break;
            case TableRef::Kind::Function: merge(out, expr_subquery_tables(ref.function, env)); break;
        }
        return out;
    }

    TableSet core_tables(const SelectCore& c, const CteEnv& env) const {
        TableSet out;
        for (const auto& ref : c.from) merge(out, ref_tables(ref, env));
        for (const auto& item : c.items) merge(out, expr_subquery_tables(item.expr, env));
        if (c.where) merge(out, expr_subquery_tables(*c.where, env));
        if (c.having) merge(out, expr_subquery_tables(*c.having, env));
        return out;
    }

    TableSet expr_subquery_tables(const Expr& e, const CteEnv& env) const {
        TableSet out;
        walk_expr(e, [&](const Expr& x) {
            if (x.subquery) merge(out, query_tables(*x.subquery, env));
        });
        return out;
    }

    // Exposed name -> base tables for the sources of one SELECT core.
    std::map<std::string, TableSet> sources(const SelectCore& c, const CteEnv& env) const {
        std::map<std::string, TableSet> out;
        std::function<void(const TableRef&)> add = [&](const TableRef& ref) {
            if (ref.kind == TableRef::Kind::Join) {
                for (const auto& ch : ref.children) add(ch);
                return;
            }
            out[sql::to_lower(ref.exposed_name())] = ref_tables(ref, env);
        };
        for (const auto& ref : c.from) add(ref);
        return out;
    }

    void conditions(const SelectCore& c, std::vector<std::string>& out) const {
        std::function<void(const Expr&)> split = [&](const Expr& e) {
            if (e.kind == ExprKind::Binary && e.op == "AND") {
                split(e.args[0]);
                split(e.args[1]);
            } else {
                out.push_back(text(e.span));
            }
        };
        std::function<void(const TableRef&)> joins = [&](const TableRef& ref) {
            if (ref.kind != TableRef::Kind::Join) return;
            for (const auto& ch : ref.children) joins(ch);
            if (ref.condition) split(*ref.condition);
        };
        for (const auto& ref : c.from) joins(ref);
        if (c.where) split(*c.where);
        if (c.having) split(*c.having);
    }

    FieldProvenance field(const sql::SelectItem& item, const SelectCore& core, const CteEnv& env) const {
        FieldProvenance f;
        const Expr& e = item.expr;
        if (item.has_alias) f.output_name = sql::to_lower(item.alias);
        else if (e.kind == ExprKind::Column) f.output_name = sql::to_lower(e.op);
        else f.output_name = text(item.span);

        const auto srcs = sources(core, env);
        auto all_sources = [&] {
            for (const auto& [name, tables] : srcs) merge(f.source_tables, tables);
        };
        bool has_column = false;
        walk_expr(e, [&](const Expr& x) {
            if (x.kind == ExprKind::Column || x.kind == ExprKind::Star) {
                has_column = true;
                if (x.qualifier.empty()) {
                    all_sources();
                    return;
                }
                const std::string q = sql::to_lower(x.qualifier.back());
                const auto it = srcs.find(q);
                if (it != srcs.end()) merge(f.source_tables, it->second);
                else f.source_tables.insert(q);
            }
            if (x.subquery) {
                has_column = true;
                merge(f.source_tables, query_tables(*x.subquery, env));
            }
        });
        if (e.kind != ExprKind::Column && e.kind != ExprKind::Star) {
            f.transformation = (has_column ? "" : "constant ") + text(e.span);
        }
        conditions(core, f.conditions);
        return f;
    }

    static void merge(TableSet& into, const TableSet& from) { into.insert(from.begin(), from.end()); }

private:
    std::string_view source_;
};

void ensure_select(std::string_view sql) {
    const std::string kw = sql::statement_keyword(sql);
    if (kw.empty()) throw Error(ErrorCode::EMPTY_QUERY, "query is blank");
    if (kw != "SELECT" && kw != "WITH") {
        throw Error(ErrorCode::UNSUPPORTED_STATEMENT, kw + " statements are outside the verifier's scope");
    }
}

}  // namespace

std::string IntentSummary::structure_text() const {
    std::string out = "fields: " + std::to_string(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const auto& f = fields[i];
        out += "\n" + std::to_string(i + 1) + ". " + f.output_name + " <- {" + joined(f.source_tables) + "}";
        if (!f.transformation.empty()) out += "\n   transformation: " + f.transformation;
    }
    if (!fields.empty() && !fields.front().conditions.empty()) {
        out += "\nconditions:";
        for (const auto& c : fields.front().conditions) out += "\n- " + c;
    }
    out += "\nbase tables: {" + joined(base_tables) + "}";
    return out;
}

IntentSummary structural_intent(std::string_view sql) {
    ensure_select(sql);
    sql::QueryPtr q;
    try {
        q = sql::parse_query(sql);
    } catch (const sql::ParseError& e) {
        throw Error(ErrorCode::UNPARSEABLE, e.what());
    }
    Resolver r(sql);
    const CteEnv env = r.with_ctes(*q, {});
    IntentSummary s;
    s.base_tables = r.query_tables(*q, {});
    if (const SelectCore* core = q->first_core()) {
        // first_core may sit inside nested arms whose CTEs are already folded into env
        for (const auto& item : core->items) {
            s.fields.push_back(r.field(item, *core, env));
            Resolver::merge(s.base_tables, s.fields.back().source_tables);
        }
    }
    return s;
}

std::optional<EquivalenceVerdict> prefilter(const IntentSummary& a, const IntentSummary& b) {
    if (a.arity() != b.arity()) {
        EquivalenceVerdict v;
        v.verdict = Verdict::NOT_EQUIVALENT;
        v.confidence = 1.0;
        v.reason = "output arity differs: " + std::to_string(a.arity()) + " vs " + std::to_string(b.arity());
        return v;
    }
    if (a.base_tables != b.base_tables) {
        EquivalenceVerdict v;
        v.verdict = Verdict::NOT_EQUIVALENT;
        v.confidence = 1.0;
        v.reason = "base tables differ: {" + joined(a.base_tables) + "} vs {" + joined(b.base_tables) + "}";
        return v;
    }
    return std::nullopt;
}

IntentSummary EquivalenceVerifier::extract_intent(std::string_view sql) {
    IntentSummary summary = structural_intent(sql);
    const FragmentTree tree = decompose(sql);
    std::map<int, std::string> narratives;
    for (const auto& f : tree.fragments) {
        std::vector<prompts::LabeledText> children;
        for (int id : f.children) children.push_back({"Fragment " + std::to_string(id), narratives[id]});
        std::string structure;
        try {
            structure = structural_intent(f.text).structure_text();
        } catch (const Error&) {
            structure = "(not available)";
        }
        const std::string response = llm_.complete(prompts::intent_extract(f.id, f.text, structure, children));
        const auto j = prompts::parse_json_object(response);
        narratives[f.id] = j && j->contains("summary") && (*j)["summary"].is_string()
                               ? (*j)["summary"].get<std::string>()
                               : prompts::trim(response);
    }
    summary.narrative = narratives[tree.root_id];
    return summary;
}

EquivalenceVerdict EquivalenceVerifier::check_equivalence(std::string_view a, std::string_view b) {
    const IntentSummary sa = structural_intent(a);
    const IntentSummary sb = structural_intent(b);
    if (normalize_sql(a) == normalize_sql(b)) {
        EquivalenceVerdict v;
        v.verdict = Verdict::EQUIVALENT;
        v.confidence = 1.0;
        v.reason = "identical after normalization";
        return v;
    }
    if (auto rejected = prefilter(sa, sb)) return *rejected;
    const IntentSummary ia = extract_intent(a);
    const IntentSummary ib = extract_intent(b);
    return align(a, ia, b, ib);
}

EquivalenceVerdict EquivalenceVerifier::align(std::string_view a, const IntentSummary& ia, std::string_view b,
                                              const IntentSummary& ib) {
    auto describe = [](const IntentSummary& s) {
        return s.structure_text() + "\nsummary: " + (s.narrative.empty() ? "(none)" : s.narrative);
    };
    const std::string response = llm_.complete(prompts::alignment(a, describe(ia), b, describe(ib)));
    EquivalenceVerdict v;
    const auto j = prompts::parse_json_object(response);
    if (!j) {
        v.reason = "alignment response was not JSON";
        return v;
    }
    std::vector<FieldMatch> mapping;
    if (j->contains("mapping") && (*j)["mapping"].is_array()) {
        for (const auto& m : (*j)["mapping"]) {
            if (!m.is_object()) continue;
            FieldMatch fm;
            fm.left = m.value("left", 0);
            fm.right = m.value("right", 0);
            fm.equivalent = m.value("equivalent", false);
            fm.confidence = std::clamp(m.value("confidence", 0.0), 0.0, 1.0);
            mapping.push_back(fm);
        }
    }
    if (j->contains("counterexample") && (*j)["counterexample"].is_string() &&
        !prompts::trim((*j)["counterexample"].get<std::string>()).empty()) {
        v.counterexample = (*j)["counterexample"].get<std::string>();
    }

    const std::size_t n = ia.arity();
    std::vector<int> left_seen(n + 1, 0);
    std::vector<int> right_seen(n + 1, 0);
    bool bijection = mapping.size() == n;
    double min_conf = mapping.empty() ? 0.0 : 1.0;
    bool all_confident = true;
    for (const auto& m : mapping) {
        const bool in_range = m.left >= 1 && m.right >= 1 && static_cast<std::size_t>(m.left) <= n &&
                              static_cast<std::size_t>(m.right) <= n;
        if (!in_range || left_seen[static_cast<std::size_t>(m.left)]++ || right_seen[static_cast<std::size_t>(m.right)]++) {
            bijection = false;
            continue;
        }
        min_conf = std::min(min_conf, m.confidence);
        if (!m.equivalent || m.confidence < config_.confidence_floor) all_confident = false;
    }
    v.field_mapping = mapping;
    v.confidence = min_conf;
    if (v.counterexample) {
        v.verdict = Verdict::NOT_EQUIVALENT;
        if (j->contains("confidence") && (*j)["confidence"].is_number()) {
            v.confidence = std::clamp((*j)["confidence"].get<double>(), 0.0, 1.0);
        }
    } else if (bijection && all_confident && n > 0) {
        v.verdict = Verdict::EQUIVALENT;
    } else {
        v.verdict = Verdict::UNDECIDED;
        v.reason = bijection ? "some fields mapped below the confidence floor" : "field mapping is not a bijection";
    }
    return v;
}

}  // namespace sqlgov
