#include "props/verify/chain.hpp"

#include "props/core/error.hpp"

namespace props {

std::string_view to_string(PayloadKind k) noexcept {
    switch (k) {
        case PayloadKind::Record: return "record";
        case PayloadKind::Output: return "output";
        case PayloadKind::Sealed: return "sealed";
    }
    return "?";
}

Payload Payload::of(DataRecord r) {
    Payload p;
    p.kind = PayloadKind::Record;
    p.record = std::move(r);
    return p;
}

Payload Payload::of(InferenceOutput y) {
    Payload p;
    p.kind = PayloadKind::Output;
    p.output = y;
    return p;
}

Payload Payload::of(SealedPayload s) {
    Payload p;
    p.kind = PayloadKind::Sealed;
    p.sealed = std::move(s);
    return p;
}

Digest Payload::digest() const {
    switch (kind) {
        case PayloadKind::Record: return record.value().digest();
        case PayloadKind::Output: return output.value().digest();
        case PayloadKind::Sealed: return sealed.value().plaintext_digest;
    }
    return {};
}

std::string Payload::content_kind() const {
    if (kind == PayloadKind::Sealed) return sealed.value().kind;
    return std::string(to_string(kind));
}

Doc Payload::to_doc() const {
    Doc body;
    switch (kind) {
        case PayloadKind::Record: body = record.value().to_doc(); break;
        case PayloadKind::Output: body = output.value().to_doc(); break;
        case PayloadKind::Sealed: body = sealed.value().to_doc(); break;
    }
    return Doc{{"body", std::move(body)}, {"kind", std::string(to_string(kind))}};
}

Payload Payload::from_doc(const Doc& doc) {
    ObjectReader r(doc, "payload");
    const Doc& body = r.get("body");
    const std::string& kind = r.string("kind");
    r.finish();
    if (kind == "record") return of(DataRecord::from_doc(body));
    if (kind == "output") return of(InferenceOutput::from_doc(body));
    if (kind == "sealed") return of(SealedPayload::from_doc(body));
    throw Error(Errc::Malformed, "payload: kind " + kind);
}

Doc PropChain::body_doc() const {
    Array specs, proofs;
    for (const auto& s : filter_specs) specs.push_back(s.to_doc());
    for (const auto& p : filter_proofs) proofs.push_back(p.to_doc());
    return Doc{{"attestation", attestation.to_doc()},
               {"created_at", created_at},
               {"filter_proofs", std::move(proofs)},
               {"filter_specs", std::move(specs)},
               {"inference_proof", inference_proof ? inference_proof->to_doc() : Doc()},
               {"payload", payload.to_doc()},
               {"request_opening", request_opening.to_doc()},
               {"schema", std::string(kChainSchema)}};
}

Doc PropChain::to_doc() const {
    Doc d = body_doc();
    d.set("envelope_digest", envelope_digest.hex());
    return d;
}

PropChain PropChain::from_doc(const Doc& doc) {
    ObjectReader r(doc, "chain");
    if (r.string("schema") != kChainSchema) throw Error(Errc::Malformed, "chain: unsupported schema");
    PropChain c;
    c.attestation = SourceAttestation::from_doc(r.get("attestation"));
    c.created_at = r.int64("created_at");
    c.envelope_digest = Digest::from_hex(r.string("envelope_digest"));
    for (const Doc& p : r.array("filter_proofs")) c.filter_proofs.push_back(FilterProof::from_doc(p));
    for (const Doc& s : r.array("filter_specs")) c.filter_specs.push_back(FilterSpec::from_doc(s));
    const Doc& inf = r.get("inference_proof");
    if (!inf.is_null()) c.inference_proof = InferenceProof::from_doc(inf);
    c.payload = Payload::from_doc(r.get("payload"));
    c.request_opening = RequestOpening::from_doc(r.get("request_opening"));
    r.finish();
    return c;
}

Digest PropChain::terminal_digest() const {
    if (inference_proof) return inference_proof->output_digest;
    if (!filter_proofs.empty()) return filter_proofs.back().output_digest;
    return attestation.content_digest;
}

}  // namespace props
