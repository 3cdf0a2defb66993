#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace revprompt {

enum class ErrorCode {
    precondition,
    backend_unreachable,
    backend_error,
    timeout,
    invalid_size,
    unsupported_multi_image,
    dimension_mismatch,
    zero_vector,
    parse_failure,
    config_invalid,
    empty_manifest,
    empty_result,
    not_found,
    io_error,
};

std::string_view to_string(ErrorCode code);

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

// Non-2xx reply from a backend; keeps the status and body for diagnostics.
class BackendError : public Error {
public:
    BackendError(int status, std::string body, const std::string& message)
        : Error(ErrorCode::backend_error, message), status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
    if (!condition) fail(ErrorCode::precondition, message);
}

}  // namespace revprompt
