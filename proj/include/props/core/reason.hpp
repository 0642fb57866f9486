#pragma once

#include <optional>
#include <string_view>

namespace props {

/// Verification outcome codes. Verification never throws; each check yields
/// `Ok` or exactly one of these.
enum class Reason {
    Ok,
    Malformed,
    BadSignature,
    UntrustedSigner,
    UntrustedSource,
    RecordTypeMismatch,
    Stale,
    FutureTimestamp,
    FilterBadSignature,
    FilterUntrustedSigner,
    FilterNotWhitelisted,
    SpecMismatch,
    LinkageBroken,
    PayloadLinkageBroken,
    MissingInference,
    ModelKindMismatch,
    PinMismatch,
    UntrustedExecutor,
    InsufficientQuorum,
    DuplicateSigner,
    UnknownSigner,
    DeliveryModeMismatch,
    DecryptFailure,
    EnvelopeMismatch,
    ConsensusFailure,
};

std::string_view to_string(Reason r) noexcept;
std::optional<Reason> reason_from_string(std::string_view name) noexcept;

}  // namespace props
