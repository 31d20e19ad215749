#include "sqlgov/templatize.hpp"

#include <array>
#include <algorithm>
#include <vector>

#include "sqlgov/sql_lexer.hpp"

namespace sqlgov {

using sql::Token;
using sql::TokenKind;

namespace {

enum class Ctx { Expr, Table, TableExpr, CteName, Cast };

constexpr std::array kBareKeywords = {"CURRENT_DATE", "CURRENT_TIME", "CURRENT_TIMESTAMP", "LOCALTIME",
                                      "LOCALTIMESTAMP", "SYSDATE", "CURRENT_USER", "SESSION_USER"};

bool in_list(const auto& list, std::string_view upper) {
    return std::find(list.begin(), list.end(), upper) != list.end();
}

bool literal_like(const Token* t) {
    if (t == nullptr) return false;
    return t->is(TokenKind::String) || t->is(TokenKind::Number) || t->is(TokenKind::Param) ||
           (t->is(TokenKind::Placeholder) && t->text == "[VAL]");
}

struct Piece {
    std::string text;
    bool glue_before = false;
    bool glue_after = false;
};

std::string render(const std::vector<Piece>& pieces) {
    std::string out;
    bool glue = true;
    for (const auto& p : pieces) {
        if (!glue && !p.glue_before) out += ' ';
        out += p.text;
        glue = p.glue_after;
    }
    return out;
}

std::string canonical(std::string_view sql, bool mask) {
    const auto tokens = sql::tokenize(sql);
    std::vector<Piece> pieces;
    std::vector<Ctx> stack{Ctx::Expr};
    bool type_next = false;

    auto at = [&](std::size_t i) -> const Token* { return i < tokens.size() ? &tokens[i] : nullptr; };

    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Token& t = tokens[i];
        const Token* prev = i > 0 ? &tokens[i - 1] : nullptr;
        const Token* next = at(i + 1);
        Ctx& ctx = stack.back();
        Piece p;

        switch (t.kind) {
            case TokenKind::LParen:
                stack.push_back(prev != nullptr && prev->is_word("CAST") ? Ctx::Cast : Ctx::Expr);
                p.text = "(";
                p.glue_after = true;
                break;
            case TokenKind::RParen:
                if (stack.size() > 1) stack.pop_back();
                p.text = ")";
                p.glue_before = true;
                break;
            case TokenKind::Comma:
                if (ctx == Ctx::TableExpr) ctx = Ctx::Table;
                p.text = ",";
                p.glue_before = true;
                break;
            case TokenKind::Dot:
                p.text = ".";
                p.glue_before = true;
                p.glue_after = true;
                break;
            case TokenKind::Semicolon:
                p.text = ";";
                p.glue_before = true;
                break;
            case TokenKind::String:
            case TokenKind::Number:
            case TokenKind::Param:
                p.text = mask ? "[VAL]" : t.text;
                break;
            case TokenKind::Placeholder:
            case TokenKind::Operator:
            case TokenKind::Comment:
                p.text = t.text;
                break;
            case TokenKind::Word:
            case TokenKind::QuotedIdent: {
                const std::string upper = sql::to_upper(t.text);
                if (sql::is_keyword_token(t)) {
                    p.text = upper;
                    if ((upper == "CAST" || upper == "EXTRACT") && next != nullptr && next->is(TokenKind::LParen)) {
                        p.glue_after = true;
                    }
                    if (upper == "SELECT" || upper == "WHERE" || upper == "GROUP" || upper == "HAVING" ||
                        upper == "ORDER" || upper == "LIMIT" || upper == "OFFSET" || upper == "UNION" ||
                        upper == "EXCEPT" || upper == "INTERSECT" || upper == "MINUS" || upper == "QUALIFY" ||
                        upper == "WINDOW" || upper == "VALUES" || upper == "SET") {
                        ctx = Ctx::Expr;
                    } else if (upper == "FROM" || upper == "JOIN" || upper == "INTO" || upper == "UPDATE") {
                        ctx = Ctx::Table;
                    } else if (upper == "ON") {
                        ctx = Ctx::TableExpr;
                    } else if (upper == "WITH") {
                        ctx = Ctx::CteName;
                    } else if (upper == "AS" && ctx == Ctx::Cast) {
                        type_next = true;
                    }
                    break;
                }
                const bool bare = t.is(TokenKind::Word);
                if (bare && next != nullptr && next->is(TokenKind::LParen)) {
                    p.text = upper;  // function call
                    p.glue_after = true;
                    type_next = false;
                    if (!pieces.empty() && pieces.back().text == ".") p.glue_before = true;
                    break;
                }
                const bool keyword_like =
                    bare && (type_next || in_list(kBareKeywords, upper) || literal_like(next) ||
                             (prev != nullptr && prev->is_op("::")) ||
                             (literal_like(prev) && i >= 2 && tokens[i - 2].is_word("INTERVAL")));
                if (keyword_like) {
                    type_next = false;
                    p.text = upper;
                    break;
                }
                if (!mask) {
                    p.text = t.text;
                    break;
                }
                const bool qualifier = next != nullptr && next->is(TokenKind::Dot);
                const bool table_side = ctx == Ctx::Table || ctx == Ctx::CteName;
                p.text = (qualifier || table_side) ? "[TBL]" : "[COL]";
                break;
            }
        }
        pieces.push_back(std::move(p));
    }
    return render(pieces);
}

}  // namespace

std::string templatize(std::string_view sql) { return canonical(sql, true); }

std::string normalize_sql(std::string_view sql) { return canonical(sql, false); }

std::string strip_comments(std::string_view sql) {
    std::string out;
    std::size_t cursor = 0;
    for (const auto& t : sql::tokenize(sql, {.keep_comments = true})) {
        if (!t.is(TokenKind::Comment)) continue;
        out.append(sql.substr(cursor, t.begin - cursor));
        if (t.text.rfind("/*", 0) == 0) out += ' ';
        cursor = t.end;
    }
    out.append(sql.substr(cursor));
    return out;
}

}  // namespace sqlgov
