#pragma once

#include <stdexcept>
#include <string>

namespace aca {

enum class ErrorCode {
    MissingFile,
    MalformedRiff,
    UnsupportedEncoding,
    IoFailure,
    EmptyInput,
    InvalidArgument,
    DimensionMismatch,
    DuplicateId,
    NotFound,
    BadFormat,
    ChecksumMismatch,
    DegenerateInput,
};

const char* error_code_name(ErrorCode code);

/// Library-wide exception. Every failure carries a machine-readable code
/// plus a human-readable detail message.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace aca
