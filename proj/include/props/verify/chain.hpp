#pragma once

#include <optional>
#include <vector>

#include "props/attest/attestation.hpp"
#include "props/filter/filter.hpp"
#include "props/pinned/model.hpp"
#include "props/verify/seal.hpp"

namespace props {

inline constexpr std::string_view kChainSchema = "props.chain/1";

enum class PayloadKind { Record, Output, Sealed };

std::string_view to_string(PayloadKind k) noexcept;

/// What the consumer receives: X' in the clear, Y in the clear, or either
/// sealed to the consumer's recipient key.
struct Payload {
    PayloadKind kind = PayloadKind::Record;
    std::optional<DataRecord> record;
    std::optional<InferenceOutput> output;
    std::optional<SealedPayload> sealed;

    static Payload of(DataRecord r);
    static Payload of(InferenceOutput y);
    static Payload of(SealedPayload s);

    /// Digest of the delivered plaintext (carried in the clear when sealed).
    Digest digest() const;
    /// "record" or "output".
    std::string content_kind() const;

    Doc to_doc() const;
    static Payload from_doc(const Doc& doc);
    friend bool operator==(const Payload&, const Payload&) = default;
};

/// Source attestation, filter proofs and an optional inference proof,
/// digest-linked and delivered with the payload.
struct PropChain {
    SourceAttestation attestation;
    RequestOpening request_opening;
    std::vector<FilterSpec> filter_specs;
    std::vector<FilterProof> filter_proofs;
    std::optional<InferenceProof> inference_proof;
    Payload payload;
    UnixSeconds created_at = 0;
    /// Digest over every other field, so unsigned metadata is tamper-evident.
    Digest envelope_digest;

    Doc body_doc() const;
    Doc to_doc() const;
    /// Strict decode. Keeps the carried envelope_digest.
    static PropChain from_doc(const Doc& doc);

    Digest compute_envelope() const { return digest_of(body_doc()); }
    void seal_envelope() { envelope_digest = compute_envelope(); }

    /// Digest the payload must match: last link of the chain.
    Digest terminal_digest() const;

    std::string canonical() const { return canonical_encode(to_doc()); }
    friend bool operator==(const PropChain&, const PropChain&) = default;
};

}  // namespace props
