#include <algorithm>
#include <array>

#include "sqlgov/sql_ast.hpp"
#include "sqlgov/sql_lexer.hpp"

namespace sqlgov::sql {

std::string TableRef::exposed_name() const {
    if (!alias.empty()) return alias;
    if (kind == Kind::Table && !name.empty()) return name.back();
    return {};
}

const SelectCore* Query::first_core() const {
    if (arms.empty()) return nullptr;
    const SetArm& arm = arms.front();
    if (arm.core) return &*arm.core;
    return arm.nested ? arm.nested->first_core() : nullptr;
}

namespace {

constexpr std::array kNiladic = {"CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "LOCALTIME",
                                 "LOCALTIMESTAMP", "CURRENT_USER", "SESSION_USER", "SYSDATE"};
constexpr std::array kIntervalUnits = {"YEAR",   "YEARS",   "MONTH",  "MONTHS", "WEEK",  "WEEKS",
                                       "DAY",    "DAYS",    "HOUR",   "HOURS",  "MINUTE", "MINUTES",
                                       "SECOND", "SECONDS", "QUARTER"};
// Reserved words that may still be spelled as function names.
constexpr std::array kKeywordFunctions = {"LEFT", "RIGHT", "IF", "INSERT", "REPLACE"};

template <std::size_t N>
bool contains_upper(const std::array<const char*, N>& set, std::string_view upper) {
    return std::any_of(set.begin(), set.end(), [&](const char* s) { return upper == s; });
}

class Parser {
public:
    explicit Parser(std::string_view source) : source_(source), tokens_(tokenize(source)) {}

    QueryPtr parse_statement() {
        if (tokens_.empty()) fail_at(0, "empty statement");
        const Token& first = peek();
        if (!(first.is_word("SELECT") || first.is_word("WITH") || first.is(TokenKind::LParen))) {
            fail("unsupported statement '" + first.text + "'; only SELECT-based queries are accepted");
        }
        for (const auto& t : tokens_) {
            if (t.unterminated) fail_at(t.begin, "unterminated literal or identifier");
        }
        auto q = parse_query();
        while (at(TokenKind::Semicolon)) ++pos_;
        if (!eof()) fail("unexpected '" + peek().text + "' after end of statement");
        return q;
    }

private:
    // ---- token helpers -------------------------------------------------
    bool eof() const { return pos_ >= tokens_.size(); }
    const Token& peek(std::size_t ahead = 0) const {
        static const Token sentinel{TokenKind::Semicolon, "<end of input>", 0, 0, false};
        return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : sentinel;
    }
    bool at(TokenKind k) const { return !eof() && peek().kind == k; }
    bool at_word(std::string_view w, std::size_t ahead = 0) const {
        return pos_ + ahead < tokens_.size() && peek(ahead).is_word(w);
    }
    bool at_op(std::string_view op) const { return !eof() && peek().is_op(op); }
    bool accept_word(std::string_view w) {
        if (at_word(w)) {
            ++pos_;
            return true;
        }
        return false;
    }
    bool accept(TokenKind k) {
        if (at(k)) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect_word(std::string_view w) {
        if (!accept_word(w)) fail("expected " + std::string(w) + " but found '" + peek().text + "'");
    }
    void expect(TokenKind k, std::string_view what) {
        if (!accept(k)) fail("expected " + std::string(what) + " but found '" + peek().text + "'");
    }
    std::size_t here() const { return eof() ? source_.size() : peek().begin; }
    std::size_t prev_end() const { return pos_ == 0 ? 0 : tokens_[pos_ - 1].end; }

    [[noreturn]] void fail(const std::string& msg) const { fail_at(here(), msg); }
    [[noreturn]] void fail_at(std::size_t offset, const std::string& msg) const {
        const auto lc = line_column(source_, offset);
        throw ParseError(offset, msg + " at line " + std::to_string(lc.line) + ", column " +
                                     std::to_string(lc.column));
    }

    bool is_identifier_token(const Token& t) const {
        return (t.kind == TokenKind::Word && !is_reserved(t.text)) || t.kind == TokenKind::QuotedIdent ||
               t.kind == TokenKind::Placeholder;
    }

    // A '(' that opens a query: skip nested '(' and look for SELECT / WITH.
    bool query_paren_ahead() const {
        std::size_t i = 0;
        while (peek(i).is(TokenKind::LParen) && pos_ + i < tokens_.size()) ++i;
        return i > 0 && (at_word("SELECT", i) || at_word("WITH", i));
    }

    std::string identifier() {
        if (!is_identifier_token(peek()) || eof()) fail("expected identifier but found '" + peek().text + "'");
        return identifier_name(tokens_[pos_++]);
    }

    std::optional<std::string> optional_alias() {
        if (accept_word("AS")) {
            if (at(TokenKind::String)) return tokens_[pos_++].text;
            return identifier();
        }
        if (!eof() && is_identifier_token(peek())) return identifier();
        return std::nullopt;
    }

    // ---- queries -------------------------------------------------------
    QueryPtr parse_query() {
        auto q = std::make_shared<Query>();
        q->span.begin = here();
        if (accept_word("WITH")) {
            q->recursive = accept_word("RECURSIVE");
            do {
                Cte cte;
                cte.span.begin = here();
                cte.name = identifier();
                if (at(TokenKind::LParen)) cte.columns = column_list();
                expect_word("AS");
                if (accept_word("NOT")) expect_word("MATERIALIZED");
                else accept_word("MATERIALIZED");
                cte.body = parenthesized_query();
                cte.span.end = prev_end();
                q->ctes.push_back(std::move(cte));
            } while (accept(TokenKind::Comma));
        }
        q->arms.push_back(parse_arm());
        while (true) {
            std::string op;
            if (accept_word("UNION")) op = "UNION";
            else if (accept_word("INTERSECT")) op = "INTERSECT";
            else if (accept_word("EXCEPT") || accept_word("MINUS")) op = "EXCEPT";
            else break;
            if (accept_word("ALL")) op += " ALL";
            else accept_word("DISTINCT");
            q->set_ops.push_back(op);
            q->arms.push_back(parse_arm());
        }
        if (accept_word("ORDER")) {
            expect_word("BY");
            q->order_by = order_items();
        }
        if (accept_word("LIMIT")) {
            q->limit = parse_expr();
            if (accept(TokenKind::Comma)) {
                q->offset = std::move(q->limit);
                q->limit = parse_expr();
            }
        }
        if (accept_word("OFFSET")) {
            q->offset = parse_expr();
            if (!accept_word("ROWS")) accept_word("ROW");
        }
        if (accept_word("FETCH")) {
            if (!accept_word("FIRST")) expect_word("NEXT");
            if (!at_word("ROWS") && !at_word("ROW")) q->limit = parse_expr();
            if (!accept_word("ROWS")) expect_word("ROW");
            expect_word("ONLY");
        }
        q->span.end = prev_end();
        return q;
    }

    QueryPtr parenthesized_query() {
        expect(TokenKind::LParen, "'('");
        auto q = parse_query();
        expect(TokenKind::RParen, "')'");
        return q;
    }

    SetArm parse_arm() {
        SetArm arm;
        if (at(TokenKind::LParen)) {
            arm.nested = parenthesized_query();
        } else {
            arm.core = parse_core();
        }
        return arm;
    }

    std::vector<std::string> column_list() {
        std::vector<std::string> cols;
        expect(TokenKind::LParen, "'('");
        do cols.push_back(identifier());
        while (accept(TokenKind::Comma));
        expect(TokenKind::RParen, "')'");
        return cols;
    }

    SelectCore parse_core() {
        SelectCore core;
        core.span.begin = here();
        expect_word("SELECT");
        if (accept_word("DISTINCT")) {
            core.distinct = true;
            if (accept_word("ON")) {
                expect(TokenKind::LParen, "'('");
                expr_list();
                expect(TokenKind::RParen, "')'");
            }
        } else {
            accept_word("ALL");
        }
        do core.items.push_back(select_item());
        while (accept(TokenKind::Comma));

        if (accept_word("FROM")) {
            do core.from.push_back(table_ref());
            while (accept(TokenKind::Comma));
        }
        if (accept_word("WHERE")) core.where = parse_expr();
        if (accept_word("GROUP")) {
            expect_word("BY");
            if (at_word("GROUPING") && at_word("SETS", 1)) {
                pos_ += 2;
                core.group_by.push_back(primary());
            } else {
                core.group_by = expr_list();
            }
            if (at_word("WITH") && (at_word("ROLLUP", 1) || at_word("CUBE", 1))) pos_ += 2;
        }
        if (accept_word("HAVING")) core.having = parse_expr();
        if (accept_word("WINDOW")) {
            do {
                identifier();
                expect_word("AS");
                Expr ignored;
                window_spec(ignored);
            } while (accept(TokenKind::Comma));
        }
        if (accept_word("QUALIFY")) core.qualify = parse_expr();
        core.span.end = prev_end();
        return core;
    }

    SelectItem select_item() {
        SelectItem item;
        item.span.begin = here();
        if (at(TokenKind::Comma) || at_word("FROM") || eof() || at(TokenKind::RParen)) {
            fail("expected select expression but found '" + peek().text + "'");
        }
        item.expr = parse_expr();
        if (auto alias = optional_alias()) {
            item.alias = *alias;
            item.has_alias = true;
        }
        item.span.end = prev_end();
        return item;
    }

    std::vector<OrderItem> order_items() {
        std::vector<OrderItem> items;
        do {
            OrderItem item;
            item.expr = parse_expr();
            if (accept_word("DESC")) item.descending = true;
            else accept_word("ASC");
            if (accept_word("NULLS")) {
                if (!accept_word("FIRST")) expect_word("LAST");
            }
            items.push_back(std::move(item));
        } while (accept(TokenKind::Comma));
        return items;
    }

    std::vector<Expr> expr_list() {
        std::vector<Expr> out;
        do out.push_back(parse_expr());
        while (accept(TokenKind::Comma));
        return out;
    }

    // ---- FROM ------------------------------------------------------------
    TableRef table_ref() {
        TableRef left = table_primary();
        while (true) {
            const std::size_t start = left.span.begin;
            bool natural = accept_word("NATURAL");
            JoinType type = JoinType::Inner;
            if (accept_word("INNER")) {
                type = JoinType::Inner;
            } else if (accept_word("LEFT")) {
                type = JoinType::Left;
                if (accept_word("SEMI")) type = JoinType::Semi;
                else if (accept_word("ANTI")) type = JoinType::Anti;
                else accept_word("OUTER");
            } else if (accept_word("RIGHT")) {
                type = JoinType::Right;
                accept_word("OUTER");
            } else if (accept_word("FULL")) {
                type = JoinType::Full;
                accept_word("OUTER");
            } else if (accept_word("CROSS")) {
                type = JoinType::Cross;
            } else if (!at_word("JOIN")) {
                if (natural) fail("expected JOIN after NATURAL");
                break;
            }
            expect_word("JOIN");
            TableRef join;
            join.kind = TableRef::Kind::Join;
            join.join_type = type;
            join.natural = natural;
            join.children.push_back(std::move(left));
            join.children.push_back(table_primary());
            if (accept_word("ON")) {
                join.condition = parse_expr();
            } else if (accept_word("USING")) {
                join.using_columns = column_list();
            }
            join.span = Span{start, prev_end()};
            left = std::move(join);
        }
        return left;
    }

    TableRef table_primary() {
        TableRef ref;
        ref.span.begin = here();
        accept_word("LATERAL");
        if (at(TokenKind::LParen)) {
            if (query_paren_ahead()) {
                ref.kind = TableRef::Kind::Derived;
                ref.derived = parenthesized_query();
            } else {
                ++pos_;
                ref = table_ref();
                expect(TokenKind::RParen, "')'");
                ref.span.end = prev_end();
                return ref;
            }
        } else {
            std::vector<std::string> parts;
            parts.push_back(identifier());
            while (accept(TokenKind::Dot)) parts.push_back(identifier());
            if (at(TokenKind::LParen)) {
                ref.kind = TableRef::Kind::Function;
                ref.function = function_call(join_name(parts), ref.span.begin);
            } else {
                ref.kind = TableRef::Kind::Table;
                ref.name = std::move(parts);
            }
        }
        if (auto alias = optional_alias()) ref.alias = *alias;
        if (!ref.alias.empty() && at(TokenKind::LParen)) column_list();
        ref.span.end = prev_end();
        return ref;
    }

    static std::string join_name(const std::vector<std::string>& parts) {
        std::string out;
        for (const auto& p : parts) {
            if (!out.empty()) out += '.';
            out += p;
        }
        return out;
    }

    // ---- expressions -----------------------------------------------------
    Expr make(ExprKind kind, std::string op, std::size_t begin) const {
        Expr e;
        e.kind = kind;
        e.op = std::move(op);
        e.span = Span{begin, prev_end()};
        return e;
    }

    Expr binary(std::string op, Expr lhs, Expr rhs) const {
        Expr e;
        e.kind = ExprKind::Binary;
        e.op = std::move(op);
        e.span = Span{lhs.span.begin, rhs.span.end};
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

    Expr parse_expr() { return or_expr(); }

    Expr or_expr() {
        Expr lhs = and_expr();
        while (accept_word("OR")) lhs = binary("OR", std::move(lhs), and_expr());
        return lhs;
    }

    Expr and_expr() {
        Expr lhs = not_expr();
        while (accept_word("AND")) lhs = binary("AND", std::move(lhs), not_expr());
        return lhs;
    }

    Expr not_expr() {
        const std::size_t begin = here();
        if (at_word("NOT") && !at_word("EXISTS", 1)) {
            ++pos_;
            Expr inner = not_expr();
            Expr e = make(ExprKind::Unary, "NOT", begin);
            e.args.push_back(std::move(inner));
            e.span.end = prev_end();
            return e;
        }
        return comparison();
    }

    Expr comparison() {
        Expr lhs = additive();
        while (true) {
            const std::size_t begin = lhs.span.begin;
            if (at(TokenKind::Operator)) {
                const std::string& t = peek().text;
                if (t == "=" || t == "==" || t == "<>" || t == "!=" || t == "<" || t == "<=" || t == ">" ||
                    t == ">=" || t == "<=>") {
                    std::string op = t;
                    ++pos_;
                    if (at_word("ANY") || at_word("SOME") || at_word("ALL")) {
                        op += " " + to_upper(peek().text);
                        ++pos_;
                        Expr sub = subquery_expr();
                        lhs = binary(op, std::move(lhs), std::move(sub));
                    } else {
                        lhs = binary(op, std::move(lhs), additive());
                    }
                    continue;
                }
                break;
            }
            if (at_word("IS")) {
                ++pos_;
                const bool negated = accept_word("NOT");
                if (accept_word("DISTINCT")) {
                    expect_word("FROM");
                    Expr rhs = additive();
                    lhs = binary(negated ? "IS NOT DISTINCT FROM" : "IS DISTINCT FROM", std::move(lhs),
                                 std::move(rhs));
                    continue;
                }
                std::string what;
                if (accept_word("NULL")) what = "NULL";
                else if (accept_word("TRUE")) what = "TRUE";
                else if (accept_word("FALSE")) what = "FALSE";
                else if (accept_word("UNKNOWN")) what = "UNKNOWN";
                else fail("expected NULL, TRUE or FALSE after IS");
                Expr e;
                e.kind = ExprKind::IsNull;
                e.op = what;
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                e.span = Span{begin, prev_end()};
                lhs = std::move(e);
                continue;
            }
            bool negated = false;
            if (at_word("NOT") && (at_word("IN", 1) || at_word("BETWEEN", 1) || at_word("LIKE", 1) ||
                                   at_word("ILIKE", 1) || at_word("RLIKE", 1) || at_word("REGEXP", 1) ||
                                   at_word("SIMILAR", 1))) {
                ++pos_;
                negated = true;
            }
            if (accept_word("IN")) {
                Expr e;
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                if (query_paren_ahead()) {
                    e.kind = ExprKind::InSubquery;
                    e.subquery = parenthesized_query();
                } else {
                    e.kind = ExprKind::InList;
                    expect(TokenKind::LParen, "'('");
                    if (!at(TokenKind::RParen)) {
                        for (auto& item : expr_list()) e.args.push_back(std::move(item));
                    }
                    expect(TokenKind::RParen, "')'");
                }
                e.op = "IN";
                e.span = Span{begin, prev_end()};
                lhs = std::move(e);
                continue;
            }
            if (accept_word("BETWEEN")) {
                Expr e;
                e.kind = ExprKind::Between;
                e.op = "BETWEEN";
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                accept_word("SYMMETRIC");
                e.args.push_back(additive());
                expect_word("AND");
                e.args.push_back(additive());
                e.span = Span{begin, prev_end()};
                lhs = std::move(e);
                continue;
            }
            if (at_word("LIKE") || at_word("ILIKE") || at_word("RLIKE") || at_word("REGEXP") || at_word("SIMILAR")) {
                std::string op = to_upper(peek().text);
                ++pos_;
                if (op == "SIMILAR") {
                    expect_word("TO");
                    op = "SIMILAR TO";
                }
                Expr e;
                e.kind = ExprKind::Like;
                e.op = op;
                e.negated = negated;
                e.args.push_back(std::move(lhs));
                e.args.push_back(additive());
                if (accept_word("ESCAPE")) e.args.push_back(additive());
                e.span = Span{begin, prev_end()};
                lhs = std::move(e);
                continue;
            }
            if (negated) fail("unexpected NOT");
            break;
        }
        return lhs;
    }

    Expr additive() {
        Expr lhs = multiplicative();
        while (at_op("+") || at_op("-") || at_op("||")) {
            std::string op = tokens_[pos_++].text;
            lhs = binary(op, std::move(lhs), multiplicative());
        }
        return lhs;
    }

    Expr multiplicative() {
        Expr lhs = unary();
        while (at_op("*") || at_op("/") || at_op("%") || at_op("&") || at_op("|") || at_op("^") ||
               at_word("DIV") || at_word("MOD")) {
            std::string op = to_upper(tokens_[pos_++].text);
            lhs = binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    Expr unary() {
        const std::size_t begin = here();
        if (at_op("-") || at_op("+") || at_op("~")) {
            std::string op = tokens_[pos_++].text;
            Expr inner = unary();
            Expr e = make(ExprKind::Unary, op, begin);
            e.args.push_back(std::move(inner));
            e.span.end = prev_end();
            return e;
        }
        return postfix();
    }

    Expr postfix() {
        Expr e = primary();
        while (at_op("::")) {
            ++pos_;
            const std::size_t begin = e.span.begin;
            Expr cast;
            cast.kind = ExprKind::Cast;
            cast.op = type_name();
            cast.args.push_back(std::move(e));
            cast.span = Span{begin, prev_end()};
            e = std::move(cast);
        }
        return e;
    }

    std::string type_name() {
        std::string name;
        if (eof() || (peek().kind != TokenKind::Word && peek().kind != TokenKind::QuotedIdent)) {
            fail("expected type name but found '" + peek().text + "'");
        }
        name = to_upper(tokens_[pos_++].text);
        while (at(TokenKind::Word) && !is_reserved(peek().text) && !at_word("AS")) {
            // multi-word types: DOUBLE PRECISION, CHARACTER VARYING
            const std::string next = to_upper(peek().text);
            if (next != "PRECISION" && next != "VARYING" && next != "UNSIGNED" && next != "SIGNED") break;
            name += " " + next;
            ++pos_;
        }
        if (at(TokenKind::LParen)) {
            ++pos_;
            name += "(";
            bool first = true;
            while (!at(TokenKind::RParen)) {
                if (eof()) fail("unterminated type parameters");
                if (!first && !at(TokenKind::Comma)) name += " ";
                name += tokens_[pos_++].text;
                first = false;
            }
            ++pos_;
            name += ")";
        }
        if ((at_word("WITH") || at_word("WITHOUT")) && at_word("TIME", 1) && at_word("ZONE", 2)) {
            name += " " + to_upper(peek().text) + " TIME ZONE";
            pos_ += 3;
        }
        return name;
    }

    Expr subquery_expr() {
        const std::size_t begin = here();
        if (!query_paren_ahead()) fail("expected subquery");
        Expr e;
        e.kind = ExprKind::Subquery;
        e.subquery = parenthesized_query();
        e.span = Span{begin, prev_end()};
        return e;
    }

    Expr primary() {
        const std::size_t begin = here();
        if (eof()) fail("unexpected end of input in expression");
        const Token& t = peek();
        switch (t.kind) {
            case TokenKind::Number:
            case TokenKind::String:
            case TokenKind::Placeholder:
                ++pos_;
                return make(ExprKind::Literal, t.text, begin);
            case TokenKind::Param:
                ++pos_;
                return make(ExprKind::Param, t.text, begin);
            case TokenKind::LParen: {
                if (query_paren_ahead()) return subquery_expr();
                ++pos_;
                Expr first = parse_expr();
                if (accept(TokenKind::Comma)) {
                    Expr tuple;
                    tuple.kind = ExprKind::Tuple;
                    tuple.args.push_back(std::move(first));
                    for (auto& item : expr_list()) tuple.args.push_back(std::move(item));
                    expect(TokenKind::RParen, "')'");
                    tuple.span = Span{begin, prev_end()};
                    return tuple;
                }
                expect(TokenKind::RParen, "')'");
                first.span = Span{begin, prev_end()};
                return first;
            }
            case TokenKind::Operator:
                if (t.text == "*") {
                    ++pos_;
                    return make(ExprKind::Star, "*", begin);
                }
                fail("unexpected '" + t.text + "' in expression");
            case TokenKind::Word:
            case TokenKind::QuotedIdent:
                return word_primary(begin);
            default:
                fail("unexpected '" + t.text + "' in expression");
        }
    }

    Expr word_primary(std::size_t begin) {
        const Token& t = peek();
        const std::string upper = t.kind == TokenKind::Word ? to_upper(t.text) : std::string();
        if (t.kind == TokenKind::Word) {
            if (upper == "CASE") return case_expr(begin);
            if (upper == "CAST" || upper == "TRY_CAST") {
                ++pos_;
                expect(TokenKind::LParen, "'('");
                Expr inner = parse_expr();
                expect_word("AS");
                Expr e;
                e.kind = ExprKind::Cast;
                e.op = type_name();
                e.args.push_back(std::move(inner));
                expect(TokenKind::RParen, "')'");
                e.span = Span{begin, prev_end()};
                return e;
            }
            if (upper == "EXISTS" || (upper == "NOT" && at_word("EXISTS", 1))) {
                const bool negated = upper == "NOT";
                pos_ += negated ? 2 : 1;
                Expr e;
                e.kind = ExprKind::Exists;
                e.op = "EXISTS";
                e.negated = negated;
                if (!query_paren_ahead()) fail("expected subquery after EXISTS");
                e.subquery = parenthesized_query();
                e.span = Span{begin, prev_end()};
                return e;
            }
            if (upper == "NULL" || upper == "TRUE" || upper == "FALSE") {
                ++pos_;
                return make(ExprKind::Literal, upper, begin);
            }
            if (upper == "INTERVAL") {
                ++pos_;
                Expr e;
                e.kind = ExprKind::Interval;
                e.op = "INTERVAL";
                e.args.push_back(unary());
                if (at(TokenKind::Word) && contains_upper(kIntervalUnits, to_upper(peek().text))) {
                    e.op += " " + to_upper(peek().text);
                    ++pos_;
                }
                e.span = Span{begin, prev_end()};
                return e;
            }
            if ((upper == "DATE" || upper == "TIME" || upper == "TIMESTAMP") && peek(1).is(TokenKind::String)) {
                pos_ += 2;
                return make(ExprKind::Literal, upper + " " + tokens_[pos_ - 1].text, begin);
            }
            if (upper == "EXTRACT") {
                ++pos_;
                expect(TokenKind::LParen, "'('");
                Expr e;
                e.kind = ExprKind::Function;
                e.op = "EXTRACT";
                if (eof() || peek().kind != TokenKind::Word) fail("expected date part in EXTRACT");
                e.args.push_back(make(ExprKind::Literal, to_upper(tokens_[pos_++].text), here()));
                expect_word("FROM");
                e.args.push_back(parse_expr());
                expect(TokenKind::RParen, "')'");
                e.span = Span{begin, prev_end()};
                return e;
            }
            if (contains_upper(kNiladic, upper) && !peek(1).is(TokenKind::LParen)) {
                ++pos_;
                return make(ExprKind::Function, upper, begin);
            }
            if (is_reserved(t.text)) {
                if (contains_upper(kKeywordFunctions, upper) && peek(1).is(TokenKind::LParen)) {
                    ++pos_;
                    return function_call(upper, begin);
                }
                fail("unexpected keyword '" + t.text + "' in expression");
            }
        }
        // identifier chain, function call, or qualified star
        std::vector<std::string> parts;
        parts.push_back(identifier_name(tokens_[pos_++]));
        while (at(TokenKind::Dot)) {
            ++pos_;
            if (at_op("*")) {
                ++pos_;
                Expr star = make(ExprKind::Star, "*", begin);
                star.qualifier = std::move(parts);
                return star;
            }
            if (!is_identifier_token(peek()) && !(peek().kind == TokenKind::Word)) {
                fail("expected name after '.' but found '" + peek().text + "'");
            }
            parts.push_back(identifier_name(tokens_[pos_++]));
        }
        if (at(TokenKind::LParen)) return function_call(join_name(parts), begin);
        Expr col;
        col.kind = ExprKind::Column;
        col.op = parts.back();
        parts.pop_back();
        col.qualifier = std::move(parts);
        col.span = Span{begin, prev_end()};
        return col;
    }

    Expr function_call(std::string name, std::size_t begin) {
        Expr e;
        e.kind = ExprKind::Function;
        e.op = to_upper(name);
        expect(TokenKind::LParen, "'('");
        if (accept_word("DISTINCT")) e.distinct = true;
        else accept_word("ALL");
        if (at_word("BOTH") || at_word("LEADING") || at_word("TRAILING")) ++pos_;
        if (at_op("*") && peek(1).is(TokenKind::RParen)) {
            ++pos_;
            e.args.push_back(make(ExprKind::Star, "*", prev_end() - 1));
        } else if (!at(TokenKind::RParen)) {
            while (true) {
                if (at_word("FROM") && e.args.empty()) {
                    ++pos_;  // TRIM(FROM x)
                }
                e.args.push_back(parse_expr());
                if (accept(TokenKind::Comma)) continue;
                if (accept_word("FROM") || accept_word("FOR") || accept_word("IN") || accept_word("SEPARATOR")) {
                    continue;
                }
                if (accept_word("USING") || accept_word("AS")) {
                    e.args.push_back(make(ExprKind::Literal, type_name(), here()));
                    if (accept(TokenKind::Comma)) continue;
                }
                if (accept_word("ORDER")) {
                    expect_word("BY");
                    for (auto& item : order_items()) e.window.push_back(std::move(item.expr));
                    if (accept_word("SEPARATOR")) e.args.push_back(parse_expr());
                }
                break;
            }
        }
        expect(TokenKind::RParen, "')'");
        if (at_word("WITHIN") && at_word("GROUP", 1)) {
            pos_ += 2;
            expect(TokenKind::LParen, "'('");
            expect_word("ORDER");
            expect_word("BY");
            for (auto& item : order_items()) e.window.push_back(std::move(item.expr));
            expect(TokenKind::RParen, "')'");
        }
        if (at_word("FILTER") && peek(1).is(TokenKind::LParen)) {
            pos_ += 2;
            expect_word("WHERE");
            e.args.push_back(parse_expr());
            expect(TokenKind::RParen, "')'");
        }
        if ((at_word("IGNORE") || at_word("RESPECT")) && at_word("NULLS", 1)) pos_ += 2;
        if (accept_word("OVER")) {
            e.has_window = true;
            if (at(TokenKind::LParen)) window_spec(e);
            else identifier();
        }
        e.span = Span{begin, prev_end()};
        return e;
    }

    void window_spec(Expr& e) {
        expect(TokenKind::LParen, "'('");
        if (!eof() && is_identifier_token(peek()) && !at_word("PARTITION") && !at_word("ORDER")) ++pos_;
        if (accept_word("PARTITION")) {
            expect_word("BY");
            for (auto& x : expr_list()) e.window.push_back(std::move(x));
        }
        if (accept_word("ORDER")) {
            expect_word("BY");
            for (auto& item : order_items()) e.window.push_back(std::move(item.expr));
        }
        if (at_word("ROWS") || at_word("RANGE") || at_word("GROUPS")) {
            int depth = 0;
            while (!eof() && !(depth == 0 && at(TokenKind::RParen))) {
                if (at(TokenKind::LParen)) ++depth;
                if (at(TokenKind::RParen)) --depth;
                ++pos_;
            }
        }
        expect(TokenKind::RParen, "')'");
    }

    Expr case_expr(std::size_t begin) {
        expect_word("CASE");
        Expr e;
        e.kind = ExprKind::Case;
        e.op = "CASE";
        if (!at_word("WHEN")) {
            e.has_operand = true;
            e.args.push_back(parse_expr());
        }
        if (!at_word("WHEN")) fail("expected WHEN in CASE expression");
        while (accept_word("WHEN")) {
            e.args.push_back(parse_expr());
            expect_word("THEN");
            e.args.push_back(parse_expr());
        }
        if (accept_word("ELSE")) {
            e.has_else = true;
            e.args.push_back(parse_expr());
        }
        expect_word("END");
        e.span = Span{begin, prev_end()};
        return e;
    }

    std::string_view source_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

}  // namespace

QueryPtr parse_query(std::string_view source) { return Parser(source).parse_statement(); }

std::string statement_keyword(std::string_view source) {
    for (const auto& t : tokenize(source)) {
        if (t.kind == TokenKind::LParen) continue;
        return t.kind == TokenKind::Word ? to_upper(t.text) : t.text;
    }
    return {};
}

}  // namespace sqlgov::sql
