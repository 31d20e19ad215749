#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace sqlgov::sql {

enum class TokenKind {
    Word,         // keyword or bare identifier
    QuotedIdent,  // "x", `x`, [x]
    String,       // 'x'
    Number,
    Placeholder,  // [TBL], [COL], [VAL], [MASK], [N], [ID]
    Param,        // ?, $1
    Operator,
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
    Comment,
};

struct Token {
    TokenKind kind;
    std::string text;
    std::size_t begin = 0;  // byte offset into the source
    std::size_t end = 0;    // one past the last byte
    bool unterminated = false;

    bool is(TokenKind k) const { return kind == k; }
    bool is_op(std::string_view op) const { return kind == TokenKind::Operator && text == op; }
    /// Case-insensitive comparison against an upper-case keyword.
    bool is_word(std::string_view upper) const;
};

struct LexOptions {
    bool keep_comments = false;
};

/// Tokenizes SQL text. Never throws: unterminated strings, quoted identifiers
/// and block comments run to the end of input and are flagged `unterminated`.
std::vector<Token> tokenize(std::string_view source, LexOptions options = {});

std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);

/// Reserved words that can never act as bare identifiers or aliases.
bool is_reserved(std::string_view word);

/// True for a Word token spelling a reserved keyword.
bool is_keyword_token(const Token& t);

/// Identifier text with quoting removed ("a b" -> a b).
std::string identifier_name(const Token& t);

/// 1-based line and column of a byte offset.
struct LineColumn {
    std::size_t line = 1;
    std::size_t column = 1;
};
LineColumn line_column(std::string_view source, std::size_t offset);
/// Byte offset of a 1-based (line, column); clamps to the source length.
std::size_t offset_of(std::string_view source, std::size_t line, std::size_t column);

}  // namespace sqlgov::sql
