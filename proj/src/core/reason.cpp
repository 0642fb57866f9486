#include "props/core/reason.hpp"

#include <array>
#include <utility>

namespace props {

namespace {
constexpr std::array<std::pair<Reason, std::string_view>, 25> kNames{{
    {Reason::Ok, "Ok"},
    {Reason::Malformed, "Malformed"},
    {Reason::BadSignature, "BadSignature"},
    {Reason::UntrustedSigner, "UntrustedSigner"},
    {Reason::UntrustedSource, "UntrustedSource"},
    {Reason::RecordTypeMismatch, "RecordTypeMismatch"},
    {Reason::Stale, "Stale"},
    {Reason::FutureTimestamp, "FutureTimestamp"},
    {Reason::FilterBadSignature, "FilterBadSignature"},
    {Reason::FilterUntrustedSigner, "FilterUntrustedSigner"},
    {Reason::FilterNotWhitelisted, "FilterNotWhitelisted"},
    {Reason::SpecMismatch, "SpecMismatch"},
    {Reason::LinkageBroken, "LinkageBroken"},
    {Reason::PayloadLinkageBroken, "PayloadLinkageBroken"},
    {Reason::MissingInference, "MissingInference"},
    {Reason::ModelKindMismatch, "ModelKindMismatch"},
    {Reason::PinMismatch, "PinMismatch"},
    {Reason::UntrustedExecutor, "UntrustedExecutor"},
    {Reason::InsufficientQuorum, "InsufficientQuorum"},
    {Reason::DuplicateSigner, "DuplicateSigner"},
    {Reason::UnknownSigner, "UnknownSigner"},
    {Reason::DeliveryModeMismatch, "DeliveryModeMismatch"},
    {Reason::DecryptFailure, "DecryptFailure"},
    {Reason::EnvelopeMismatch, "EnvelopeMismatch"},
    {Reason::ConsensusFailure, "ConsensusFailure"},
}};
}  // namespace

std::string_view to_string(Reason r) noexcept {
    for (const auto& [code, name] : kNames)
        if (code == r) return name;
    return "Unknown";
}

std::optional<Reason> reason_from_string(std::string_view name) noexcept {
    for (const auto& [code, n] : kNames)
        if (n == name) return code;
    return std::nullopt;
}

}  // namespace props
