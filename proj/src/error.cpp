#include "sqlgov/error.hpp"

namespace sqlgov {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::EMPTY_QUERY: return "EMPTY_QUERY";
        case ErrorCode::UNPARSEABLE: return "UNPARSEABLE";
        case ErrorCode::OUT_OF_RANGE: return "OUT_OF_RANGE";
        case ErrorCode::PROVIDER_FAILURE: return "PROVIDER_FAILURE";
        case ErrorCode::MOCK_MISS: return "MOCK_MISS";
        case ErrorCode::EMPTY_TEXT: return "EMPTY_TEXT";
        case ErrorCode::DIMENSION_MISMATCH: return "DIMENSION_MISMATCH";
        case ErrorCode::ZERO_VECTOR: return "ZERO_VECTOR";
        case ErrorCode::IO_FAILURE: return "IO_FAILURE";
        case ErrorCode::SCHEMA_VERSION_MISMATCH: return "SCHEMA_VERSION_MISMATCH";
        case ErrorCode::INVALID_ARGUMENT: return "INVALID_ARGUMENT";
        case ErrorCode::REJECTED_RESPONSE: return "REJECTED_RESPONSE";
        case ErrorCode::NO_HISTORY: return "NO_HISTORY";
        case ErrorCode::UNKNOWN_RULE: return "UNKNOWN_RULE";
        case ErrorCode::UNSUPPORTED_STATEMENT: return "UNSUPPORTED_STATEMENT";
        case ErrorCode::EMPTY_CATEGORY: return "EMPTY_CATEGORY";
        case ErrorCode::CONTRACT_VIOLATION: return "CONTRACT_VIOLATION";
        case ErrorCode::MISSING_FRAGMENT: return "MISSING_FRAGMENT";
        case ErrorCode::STILL_INVALID: return "STILL_INVALID";
        case ErrorCode::EXEC_ERROR: return "EXEC_ERROR";
    }
    return "UNKNOWN";
}

}  // namespace sqlgov
