#include "props/attest/attestation.hpp"

#include <algorithm>

#include "props/core/error.hpp"

namespace props {

std::string_view to_string(AttestationMode m) noexcept {
    return m == AttestationMode::OracleProxy ? "oracle-proxy" : "source-signed";
}

AttestationMode attestation_mode_from_string(std::string_view s) {
    if (s == "oracle-proxy") return AttestationMode::OracleProxy;
    if (s == "source-signed") return AttestationMode::SourceSigned;
    throw Error(Errc::Malformed, "unknown attestation mode '" + std::string(s) + "'");
}

Digest request_digest(std::string_view source_id, std::string_view record_type,
                      const Digest& credential_digest) {
    return digest_of(Doc{{"credential_digest", credential_digest.hex()},
                         {"record_type", std::string(record_type)},
                         {"source_id", std::string(source_id)}});
}

Doc RequestOpening::to_doc() const {
    return Doc{{"credential_digest", credential_digest.hex()}, {"record_type", record_type}};
}

RequestOpening RequestOpening::from_doc(const Doc& doc) {
    ObjectReader r(doc, "request_opening");
    RequestOpening o;
    o.credential_digest = Digest::from_hex(r.string("credential_digest"));
    o.record_type = r.string("record_type");
    r.finish();
    return o;
}

Doc SourceAttestation::body_doc() const {
    return Doc{{"attestor_identity", attestor_identity.to_doc()},
               {"content_digest", content_digest.hex()},
               {"issued_at", issued_at},
               {"mode", std::string(to_string(mode))},
               {"request_digest", request_digest.hex()},
               {"source_id", source_id}};
}

Doc SourceAttestation::to_doc() const {
    Doc d = body_doc();
    d.set("signature", signature.hex());
    return d;
}

SourceAttestation SourceAttestation::from_doc(const Doc& doc) {
    ObjectReader r(doc, "attestation");
    SourceAttestation a;
    a.attestor_identity = KeyIdentity::from_doc(r.get("attestor_identity"));
    a.content_digest = Digest::from_hex(r.string("content_digest"));
    a.issued_at = r.int64("issued_at");
    a.mode = attestation_mode_from_string(r.string("mode"));
    a.request_digest = Digest::from_hex(r.string("request_digest"));
    a.source_id = r.string("source_id");
    a.signature = Signature::from_hex(r.string("signature"));
    r.finish();
    return a;
}

bool trusted(const TrustSet& trust, const KeyIdentity& id) {
    return std::find(trust.begin(), trust.end(), id) != trust.end();
}

Reason verify_attestation(const SourceAttestation& att, const TrustSet& trust) {
    const Role expected = att.mode == AttestationMode::OracleProxy ? Role::Attestor : Role::Source;
    if (!att.attestor_identity.well_formed() || att.attestor_identity.role != expected ||
        att.source_id.empty() || att.issued_at <= 0)
        return Reason::Malformed;
    if (!verify_sig(att.attestor_identity, DomainTag::Attestation, as_bytes(canonical_encode(att.body_doc())),
                    att.signature))
        return Reason::BadSignature;
    if (!trusted(trust, att.attestor_identity)) return Reason::UntrustedSigner;
    return Reason::Ok;
}

SourceAttestation make_attestation(const SigningKey& key, AttestationMode mode, std::string source_id,
                                   const Digest& req_digest, const Digest& content_digest,
                                   UnixSeconds issued_at) {
    SourceAttestation a;
    a.mode = mode;
    a.attestor_identity = key.identity();
    a.source_id = std::move(source_id);
    a.request_digest = req_digest;
    a.content_digest = content_digest;
    a.issued_at = issued_at;
    a.signature = key.sign(DomainTag::Attestation, as_bytes(canonical_encode(a.body_doc())));
    return a;
}

}  // namespace props
