#include "sqlgov/sql_lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace sqlgov::sql {

namespace {

constexpr std::array kReserved = {
    "ALL",      "AND",       "ANY",      "AS",        "ASC",      "BETWEEN",  "BY",
    "CASE",     "CAST",      "CROSS",    "CURRENT",   "DESC",     "DISTINCT", "ELSE",
    "END",      "EXCEPT",    "EXISTS",   "EXTRACT",   "FALSE",    "FETCH",    "FILTER",
    "FOLLOWING","FOR",       "FROM",     "FULL",      "GROUP",    "HAVING",   "ILIKE",
    "IN",       "INNER",     "INTERSECT","INTERVAL",  "INTO",     "IS",       "JOIN",
    "LATERAL",  "LEFT",      "LIKE",     "LIMIT",     "MINUS",    "NATURAL",  "NOT",
    "NULL",     "NULLS",     "OFFSET",   "ON",        "OR",       "ORDER",    "OUTER",
    "OVER",     "PARTITION", "PRECEDING","QUALIFY",   "RANGE",    "RECURSIVE","REGEXP",
    "RIGHT",    "RLIKE",     "ROWS",     "SELECT",    "SEMI",     "SIMILAR",  "SOME",
    "THEN",     "TRUE",      "UNBOUNDED","UNION",     "USING",    "VALUES",   "WHEN",
    "WHERE",    "WINDOW",    "WITH",     "WITHIN",    "INSERT",   "UPDATE",   "DELETE",
    "CREATE",   "DROP",      "ALTER",    "SET",       "ANTI",
};

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

bool is_placeholder(std::string_view inner) {
    constexpr std::array names = {"TBL", "COL", "VAL", "MASK", "N", "ID"};
    return std::find(names.begin(), names.end(), inner) != names.end();
}

}  // namespace

std::string to_upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_reserved(std::string_view word) {
    const std::string upper = to_upper(word);
    return std::find(kReserved.begin(), kReserved.end(), upper) != kReserved.end();
}

bool Token::is_word(std::string_view upper) const {
    if (kind != TokenKind::Word || text.size() != upper.size()) return false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (std::toupper(static_cast<unsigned char>(text[i])) != upper[i]) return false;
    }
    return true;
}

bool is_keyword_token(const Token& t) { return t.kind == TokenKind::Word && is_reserved(t.text); }

std::string identifier_name(const Token& t) {
    if (t.kind != TokenKind::QuotedIdent || t.text.size() < 2) return t.text;
    const std::size_t trim = t.unterminated ? 1 : 2;
    return t.text.substr(1, t.text.size() - trim);
}

std::vector<Token> tokenize(std::string_view src, LexOptions options) {
    std::vector<Token> out;
    const std::size_t n = src.size();
    std::size_t i = 0;
    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end, bool unterminated = false) {
        if (kind == TokenKind::Comment && !options.keep_comments) return;
        out.push_back(Token{kind, std::string(src.substr(begin, end - begin)), begin, end, unterminated});
    };

    while (i < n) {
        const auto c = static_cast<unsigned char>(src[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (c == '-' && i + 1 < n && src[i + 1] == '-') {
            while (i < n && src[i] != '\n') ++i;
            push(TokenKind::Comment, start, i);
            continue;
        }
        if (c == '/' && i + 1 < n && src[i + 1] == '*') {
            const auto close = src.find("*/", i + 2);
            const bool open = close == std::string_view::npos;
            i = open ? n : close + 2;
            push(TokenKind::Comment, start, i, open);
            continue;
        }
        if (c == '\'') {
            ++i;
            bool closed = false;
            while (i < n) {
                if (src[i] == '\\' && i + 1 < n) {
                    i += 2;
                } else if (src[i] == '\'') {
                    if (i + 1 < n && src[i + 1] == '\'') {
                        i += 2;
                    } else {
                        ++i;
                        closed = true;
                        break;
                    }
                } else {
                    ++i;
                }
            }
            push(TokenKind::String, start, i, !closed);
            continue;
        }
        if (c == '"' || c == '`') {
            const char quote = static_cast<char>(c);
            ++i;
            bool closed = false;
            while (i < n) {
                if (src[i] == quote) {
                    if (i + 1 < n && src[i + 1] == quote) {
                        i += 2;
                        continue;
                    }
                    ++i;
                    closed = true;
                    break;
                }
                ++i;
            }
            push(TokenKind::QuotedIdent, start, i, !closed);
            continue;
        }
        if (c == '[') {
            const auto close = src.find(']', i + 1);
            const auto newline = src.find('\n', i + 1);
            if (close != std::string_view::npos && (newline == std::string_view::npos || close < newline)) {
                const auto inner = src.substr(i + 1, close - i - 1);
                i = close + 1;
                push(is_placeholder(inner) ? TokenKind::Placeholder : TokenKind::QuotedIdent, start, i);
            } else {
                ++i;
                push(TokenKind::Operator, start, i);
            }
            continue;
        }
        if (std::isdigit(c) || (c == '.' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            if (c == '0' && i + 1 < n && (src[i + 1] == 'x' || src[i + 1] == 'X')) {
                i += 2;
                while (i < n && std::isxdigit(static_cast<unsigned char>(src[i]))) ++i;
            } else {
                while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                if (i < n && src[i] == '.') {
                    ++i;
                    while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                }
                if (i < n && (src[i] == 'e' || src[i] == 'E')) {
                    std::size_t j = i + 1;
                    if (j < n && (src[j] == '+' || src[j] == '-')) ++j;
                    if (j < n && std::isdigit(static_cast<unsigned char>(src[j]))) {
                        i = j;
                        while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                    }
                }
            }
            push(TokenKind::Number, start, i);
            continue;
        }
        if (is_word_start(c)) {
            while (i < n && is_word_char(static_cast<unsigned char>(src[i]))) ++i;
            push(TokenKind::Word, start, i);
            continue;
        }
        if (c == '$' && i + 1 < n && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
            ++i;
            while (i < n && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
            push(TokenKind::Param, start, i);
            continue;
        }
        switch (c) {
            case '(': push(TokenKind::LParen, start, ++i); continue;
            case ')': push(TokenKind::RParen, start, ++i); continue;
            case ',': push(TokenKind::Comma, start, ++i); continue;
            case '.': push(TokenKind::Dot, start, ++i); continue;
            case ';': push(TokenKind::Semicolon, start, ++i); continue;
            case '?': push(TokenKind::Param, start, ++i); continue;
            default: break;
        }
        constexpr std::array multi = {"<=>", "->>", "<=", ">=", "<>", "!=", "||", "::", "->", "=="};
        bool matched = false;
        for (std::string_view op : multi) {
            if (src.substr(i, op.size()) == op) {
                i += op.size();
                push(TokenKind::Operator, start, i);
                matched = true;
                break;
            }
        }
        if (!matched) push(TokenKind::Operator, start, ++i);
    }
    return out;
}

LineColumn line_column(std::string_view source, std::size_t offset) {
    LineColumn lc;
    offset = std::min(offset, source.size());
    for (std::size_t i = 0; i < offset; ++i) {
        if (source[i] == '\n') {
            ++lc.line;
            lc.column = 1;
        } else {
            ++lc.column;
        }
    }
    return lc;
}

std::size_t offset_of(std::string_view source, std::size_t line, std::size_t column) {
    std::size_t current = 1;
    std::size_t i = 0;
    while (i < source.size() && current < line) {
        if (source[i] == '\n') ++current;
        ++i;
    }
    const std::size_t line_end = std::min(source.find('\n', i), source.size());
    return std::min(i + (column > 0 ? column - 1 : 0), line_end);
}

}  // namespace sqlgov::sql
