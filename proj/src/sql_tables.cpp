#include "sqlgov/sql_tables.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sqlgov/sql_lexer.hpp"

namespace sqlgov {

using sql::Token;
using sql::TokenKind;

namespace {

bool is_name(const Token& t) {
    return t.is(TokenKind::QuotedIdent) || (t.is(TokenKind::Word) && !sql::is_keyword_token(t));
}

bool ends_from_list(const Token& t) {
    for (const char* kw : {"WHERE", "GROUP", "HAVING", "ORDER", "LIMIT", "UNION", "EXCEPT", "INTERSECT", "QUALIFY",
                           "WINDOW", "SELECT"}) {
        if (t.is_word(kw)) return true;
    }
    return false;
}

}  // namespace

std::vector<std::string> referenced_tables(std::string_view source) {
    const auto toks = sql::tokenize(source);
    std::set<std::string> ctes;
    for (std::size_t i = 0; i + 2 < toks.size(); ++i) {
        if (!is_name(toks[i]) || !toks[i + 1].is_word("AS") || !toks[i + 2].is(TokenKind::LParen)) continue;
        if (i == 0) continue;
        const Token& prev = toks[i - 1];
        if (prev.is_word("WITH") || prev.is_word("RECURSIVE") || prev.is(TokenKind::Comma)) {
            ctes.insert(sql::to_lower(sql::identifier_name(toks[i])));
        }
    }

    std::vector<std::string> out;
    std::map<int, bool> in_from;  // paren depth -> inside a FROM list
    int depth = 0;
    bool expect = false;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        const Token& t = toks[i];
        if (t.is(TokenKind::LParen)) {
            ++depth;
            in_from[depth] = false;
            expect = false;
            continue;
        }
        if (t.is(TokenKind::RParen)) {
            in_from.erase(depth);
            depth = std::max(0, depth - 1);
            expect = false;
            continue;
        }
        if (t.is_word("FROM") || t.is_word("JOIN")) {
            in_from[depth] = true;
            expect = true;
            continue;
        }
        if (t.is(TokenKind::Comma) && in_from[depth]) {
            expect = true;
            continue;
        }
        if (ends_from_list(t)) in_from[depth] = false;
        if (!expect) continue;
        expect = false;
        if (!is_name(t)) continue;
        std::string name = sql::identifier_name(t);
        std::size_t j = i;
        while (j + 2 < toks.size() && toks[j + 1].is(TokenKind::Dot) && is_name(toks[j + 2])) {
            name += "." + sql::identifier_name(toks[j + 2]);
            j += 2;
        }
        if (j + 1 < toks.size() && toks[j + 1].is(TokenKind::LParen)) continue;  // table function
        i = j;
        name = sql::to_lower(name);
        if (ctes.count(name) || std::find(out.begin(), out.end(), name) != out.end()) continue;
        out.push_back(name);
    }
    return out;
}

}  // namespace sqlgov
