#pragma once

#include <string>
#include <string_view>

namespace sqlgov {

/// Masks identifiers and literals: tables become [TBL], columns [COL], literals
/// [VAL]. Keywords are upper-cased and whitespace is canonical. Works on
/// invalid SQL because it only looks at tokens.
std::string templatize(std::string_view sql);

/// Canonical rendering without masking: comments dropped, keywords upper-case,
/// single spacing. Two queries that differ only in layout normalize equally.
std::string normalize_sql(std::string_view sql);

/// Source text with every comment removed (string literals untouched).
std::string strip_comments(std::string_view sql);

}  // namespace sqlgov
