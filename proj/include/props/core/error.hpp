#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace props {

/// Typed failure categories surfaced by every module. Verification paths do
/// not throw; they report `Reason` codes instead (see verify/reason.hpp).
enum class Errc {
    NonCanonicalValue,
    ParseError,
    Malformed,
    UnknownKey,
    BindFailure,
    ConnectFailure,
    AuthDenied,
    NotFound,
    MalformedFrame,
    Timeout,
    AttestorUnavailable,
    MissingSourceSignature,
    BadSourceSignature,
    ParamSchemaMismatch,
    PathTypeMismatch,
    PathError,
    OutputMismatch,
    LengthMismatch,
    FeaturePathError,
    Overflow,
    InexactConversion,
    UnknownService,
    PinMismatch,
    NotReplicable,
    DecryptFailure,
    ConfigError,
    Exists,
    UnknownAttack,
    IoError,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace props
