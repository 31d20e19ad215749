#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sqlgov {

enum class ErrorCode {
    EMPTY_QUERY,
    UNPARSEABLE,
    OUT_OF_RANGE,
    PROVIDER_FAILURE,
    MOCK_MISS,
    EMPTY_TEXT,
    DIMENSION_MISMATCH,
    ZERO_VECTOR,
    IO_FAILURE,
    SCHEMA_VERSION_MISMATCH,
    INVALID_ARGUMENT,
    REJECTED_RESPONSE,
    NO_HISTORY,
    UNKNOWN_RULE,
    UNSUPPORTED_STATEMENT,
    EMPTY_CATEGORY,
    CONTRACT_VIOLATION,
    MISSING_FRAGMENT,
    STILL_INVALID,
    EXEC_ERROR,
};

std::string_view to_string(ErrorCode code);

/// Every failure surfaced by the library carries one of the codes above so the
/// CLI can map it to an exit status and a stable machine-readable tag.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace sqlgov
