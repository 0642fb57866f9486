#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "props/core/crypto.hpp"
#include "props/core/reason.hpp"
#include "props/core/record.hpp"

namespace props {

enum class AttestationMode { OracleProxy, SourceSigned };

std::string_view to_string(AttestationMode m) noexcept;
AttestationMode attestation_mode_from_string(std::string_view s);

/// Commitment to a fetch request: digest of {credential_digest, record_type,
/// source_id}. The credential itself never leaves the client/attestor.
Digest request_digest(std::string_view source_id, std::string_view record_type,
                      const Digest& credential_digest);

/// The disclosed half of a request commitment. Lets a verifier check the
/// record type without ever seeing the credential.
struct RequestOpening {
    std::string record_type;
    Digest credential_digest;

    Doc to_doc() const;
    static RequestOpening from_doc(const Doc& doc);
    friend bool operator==(const RequestOpening&, const RequestOpening&) = default;
};

/// Signed binding of a fetch session to the digest of the record it served.
struct SourceAttestation {
    AttestationMode mode = AttestationMode::OracleProxy;
    KeyIdentity attestor_identity;
    std::string source_id;
    Digest request_digest;
    Digest content_digest;
    UnixSeconds issued_at = 0;
    Signature signature;

    /// Every field except the signature; the signed payload is its canonical
    /// encoding under DomainTag::Attestation.
    Doc body_doc() const;
    Doc to_doc() const;
    static SourceAttestation from_doc(const Doc& doc);

    friend bool operator==(const SourceAttestation&, const SourceAttestation&) = default;
};

/// Trust roots are matched on the full identity (role, fingerprint and key).
using TrustSet = std::vector<KeyIdentity>;

bool trusted(const TrustSet& trust, const KeyIdentity& id);

/// Ok iff the identity is well formed and matches the mode, the signature
/// verifies, and the signer is in `trust`. Otherwise Malformed,
/// BadSignature or UntrustedSigner, checked in that order.
Reason verify_attestation(const SourceAttestation& att, const TrustSet& trust);

/// Produces a signed attestation body (used by the attestor and by signing
/// sources).
SourceAttestation make_attestation(const SigningKey& key, AttestationMode mode, std::string source_id,
                                   const Digest& request_digest, const Digest& content_digest,
                                   UnixSeconds issued_at);

}  // namespace props
