#include "props/core/error.hpp"

namespace props {

std::string_view to_string(Errc code) noexcept {
    switch (code) {
        case Errc::NonCanonicalValue: return "NonCanonicalValue";
        case Errc::ParseError: return "ParseError";
        case Errc::Malformed: return "Malformed";
        case Errc::UnknownKey: return "UnknownKey";
        case Errc::BindFailure: return "BindFailure";
        case Errc::ConnectFailure: return "ConnectFailure";
        case Errc::AuthDenied: return "AuthDenied";
        case Errc::NotFound: return "NotFound";
        case Errc::MalformedFrame: return "MalformedFrame";
        case Errc::Timeout: return "Timeout";
        case Errc::AttestorUnavailable: return "AttestorUnavailable";
        case Errc::MissingSourceSignature: return "MissingSourceSignature";
        case Errc::BadSourceSignature: return "BadSourceSignature";
        case Errc::ParamSchemaMismatch: return "ParamSchemaMismatch";
        case Errc::PathTypeMismatch: return "PathTypeMismatch";
        case Errc::PathError: return "PathError";
        case Errc::OutputMismatch: return "OutputMismatch";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::FeaturePathError: return "FeaturePathError";
        case Errc::Overflow: return "Overflow";
        case Errc::InexactConversion: return "InexactConversion";
        case Errc::UnknownService: return "UnknownService";
        case Errc::PinMismatch: return "PinMismatch";
        case Errc::NotReplicable: return "NotReplicable";
        case Errc::DecryptFailure: return "DecryptFailure";
        case Errc::ConfigError: return "ConfigError";
        case Errc::Exists: return "Exists";
        case Errc::UnknownAttack: return "UnknownAttack";
        case Errc::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace props
