#include "aca/error.hpp"

namespace aca {

const char* error_code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::MissingFile: return "missing_file";
    case ErrorCode::MalformedRiff: return "malformed_riff";
    case ErrorCode::UnsupportedEncoding: return "unsupported_encoding";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::DimensionMismatch: return "dimension_mismatch";
    case ErrorCode::DuplicateId: return "duplicate_id";
    case ErrorCode::NotFound: return "not_found";
    case ErrorCode::BadFormat: return "bad_format";
    case ErrorCode::ChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::DegenerateInput: return "degenerate_input";
    }
    return "unknown";
}

} // namespace aca
