#include "props/verify/verifier.hpp"

#include <algorithm>

#include "props/core/error.hpp"

namespace props {

namespace {

Array identities(const TrustSet& ts) {
    Array a;
    for (const auto& id : ts) a.push_back(id.to_doc());
    return a;
}

TrustSet read_identities(const Array& a) {
    TrustSet ts;
    for (const Doc& d : a) ts.push_back(KeyIdentity::from_doc(d));
    return ts;
}

}  // namespace

Digest ModelRequirement::expected_pin() const {
    return kind == Kind::ServiceRef ? ModelSpec::service_ref(service_id).pinned_digest : pinned_digest;
}

Doc ModelRequirement::to_doc() const {
    switch (kind) {
        case Kind::None: return Doc{{"kind", "none"}};
        case Kind::Exact:
            return Doc{{"kind", "exact"},
                       {"pinned_digest", pinned_digest.hex()},
                       {"trusted_executors", identities(trusted_executors)}};
        case Kind::ServiceRef:
            return Doc{{"kind", "service-ref"},
                       {"service_id", service_id},
                       {"trusted_executors", identities(trusted_executors)}};
        case Kind::Committee:
            return Doc{{"committee", committee ? committee->membership_doc() : Doc()},
                       {"kind", "committee"},
                       {"pinned_digest", pinned_digest.hex()}};
    }
    return Doc();
}

ModelRequirement ModelRequirement::from_doc(const Doc& doc) {
    ObjectReader r(doc, "model requirement");
    ModelRequirement m;
    const std::string& kind = r.string("kind");
    if (kind == "none") {
        m.kind = Kind::None;
    } else if (kind == "exact") {
        m.kind = Kind::Exact;
        m.pinned_digest = Digest::from_hex(r.string("pinned_digest"));
        m.trusted_executors = read_identities(r.array("trusted_executors"));
    } else if (kind == "service-ref") {
        m.kind = Kind::ServiceRef;
        m.service_id = r.string("service_id");
        m.trusted_executors = read_identities(r.array("trusted_executors"));
    } else if (kind == "committee") {
        m.kind = Kind::Committee;
        m.committee = CommitteeConfig::from_doc(r.get("committee"));
        m.pinned_digest = Digest::from_hex(r.string("pinned_digest"));
    } else {
        throw Error(Errc::Malformed, "model requirement: kind " + kind);
    }
    r.finish();
    return m;
}

std::string_view to_string(DeliveryRequirement d) noexcept {
    switch (d) {
        case DeliveryRequirement::Any: return "any";
        case DeliveryRequirement::Plaintext: return "plaintext";
        case DeliveryRequirement::Sealed: return "sealed";
    }
    return "?";
}

DeliveryRequirement delivery_from_string(std::string_view s) {
    for (auto d : {DeliveryRequirement::Any, DeliveryRequirement::Plaintext, DeliveryRequirement::Sealed})
        if (to_string(d) == s) return d;
    throw Error(Errc::Malformed, "unknown delivery requirement '" + std::string(s) + "'");
}

Doc VerifierPolicy::to_doc() const {
    Array sources, whitelist;
    for (const auto& s : trusted_sources) sources.emplace_back(s);
    for (const auto& d : filter_whitelist) whitelist.emplace_back(d.hex());
    return Doc{{"consumer", consumer},
               {"delivery", std::string(to_string(delivery))},
               {"filter_whitelist", std::move(whitelist)},
               {"max_age_seconds", max_age_seconds},
               {"model_requirement", model.to_doc()},
               {"recipient", recipient ? Doc(recipient->hex()) : Doc()},
               {"required_record_type", required_record_type},
               {"trusted_attestors", identities(trusted_attestors)},
               {"trusted_sources", std::move(sources)}};
}

VerifierPolicy VerifierPolicy::from_doc(const Doc& doc) {
    ObjectReader r(doc, "policy");
    VerifierPolicy p;
    p.consumer = r.string("consumer");
    p.delivery = delivery_from_string(r.string("delivery"));
    for (const Doc& d : r.array("filter_whitelist")) p.filter_whitelist.insert(Digest::from_hex(d.as_string()));
    p.max_age_seconds = r.int64("max_age_seconds");
    p.model = ModelRequirement::from_doc(r.get("model_requirement"));
    const Doc& rec = r.get("recipient");
    if (!rec.is_null()) p.recipient = Digest::from_hex(rec.as_string());
    p.required_record_type = r.string("required_record_type");
    p.trusted_attestors = read_identities(r.array("trusted_attestors"));
    for (const Doc& s : r.array("trusted_sources")) p.trusted_sources.insert(s.as_string());
    r.finish();
    if (p.max_age_seconds < 0) throw Error(Errc::Malformed, "policy: negative max_age_seconds");
    return p;
}

bool VerificationReport::passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::vector<std::string> VerificationReport::failure_reasons() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
        if (!c.passed) out.push_back(c.reason);
    return out;
}

const CheckResult* VerificationReport::find(std::string_view check_id) const {
    for (const auto& c : checks)
        if (c.check_id == check_id) return &c;
    return nullptr;
}

Doc VerificationReport::to_doc() const {
    Array cs;
    for (const auto& c : checks)
        cs.push_back(Doc{{"check_id", c.check_id}, {"passed", c.passed}, {"reason", c.reason}});
    return Doc{{"checks", std::move(cs)},
               {"schema", std::string(kReportSchema)},
               {"verdict", passed() ? "pass" : "fail"},
               {"verified_at", verified_at}};
}

VerificationReport VerificationReport::from_doc(const Doc& doc) {
    ObjectReader r(doc, "report");
    VerificationReport rep;
    for (const Doc& c : r.array("checks")) {
        ObjectReader cr(c, "check");
        CheckResult res{cr.string("check_id"), cr.boolean("passed"), cr.string("reason")};
        cr.finish();
        rep.checks.push_back(std::move(res));
    }
    if (r.string("schema") != kReportSchema) throw Error(Errc::Malformed, "report: unsupported schema");
    const std::string& verdict = r.string("verdict");
    rep.verified_at = r.int64("verified_at");
    r.finish();
    if (verdict != (rep.passed() ? "pass" : "fail")) throw Error(Errc::Malformed, "report: verdict disagrees with checks");
    return rep;
}

std::string report_export(const VerificationReport& report) { return canonical_encode(report.to_doc()); }

VerificationReport report_import(std::string_view bytes) {
    return VerificationReport::from_doc(canonical_decode_strict(bytes));
}

namespace {

class Checker {
public:
    explicit Checker(VerificationReport& rep) : rep_(rep) {}

    template <class Fn>
    void run(std::string id, Fn&& fn) {
        Reason r;
        try {
            r = fn();
        } catch (const std::exception&) {
            r = Reason::Malformed;
        }
        rep_.checks.push_back({std::move(id), r == Reason::Ok, std::string(to_string(r))});
    }

private:
    VerificationReport& rep_;
};

Reason check_model(const PropChain& chain, const ModelRequirement& req) {
    using Kind = ModelRequirement::Kind;
    if (req.kind == Kind::None) return Reason::Ok;
    if (!chain.inference_proof) return Reason::MissingInference;
    const InferenceProof& p = *chain.inference_proof;
    if (req.kind == Kind::Committee) {
        if (p.mode != ProofMode::Committee) return Reason::ModelKindMismatch;
        if (!req.committee) return Reason::Malformed;
        return verify_committee_proof(p, *req.committee, req.pinned_digest);
    }
    if (p.mode != ProofMode::TeeSim) return Reason::ModelKindMismatch;
    return verify_inference_proof(p, req.expected_pin(), req.trusted_executors);
}

}  // namespace

VerificationReport verify_chain(const PropChain& chain, const VerifierPolicy& policy, UnixSeconds now,
                                const SigningKey* recipient_key) {
    VerificationReport rep;
    rep.verified_at = now;
    Checker c(rep);
    const SourceAttestation& att = chain.attestation;

    c.run("chain-envelope", [&] {
        return chain.compute_envelope() == chain.envelope_digest ? Reason::Ok : Reason::EnvelopeMismatch;
    });
    c.run("attestation-signature", [&] { return verify_attestation(att, {att.attestor_identity}); });
    c.run("attestation-signer-trusted", [&] {
        return trusted(policy.trusted_attestors, att.attestor_identity) ? Reason::Ok : Reason::UntrustedSigner;
    });
    c.run("source-trusted", [&] {
        return policy.trusted_sources.count(att.source_id) ? Reason::Ok : Reason::UntrustedSource;
    });
    c.run("record-type", [&] {
        const RequestOpening& o = chain.request_opening;
        const bool opens = request_digest(att.source_id, o.record_type, o.credential_digest) == att.request_digest;
        return opens && o.record_type == policy.required_record_type ? Reason::Ok : Reason::RecordTypeMismatch;
    });
    c.run("attestation-fresh", [&] {
        if (att.issued_at - now > kMaxClockSkewSeconds) return Reason::FutureTimestamp;
        if (now - att.issued_at > policy.max_age_seconds) return Reason::Stale;
        return Reason::Ok;
    });
    c.run("filter-signatures", [&] {
        for (const auto& p : chain.filter_proofs)
            if (verify_filter_proof(p) != Reason::Ok) return Reason::FilterBadSignature;
        return Reason::Ok;
    });
    c.run("filter-signers", [&] {
        for (const auto& p : chain.filter_proofs)
            if (p.executor_identity.role != Role::Attestor || !trusted(policy.trusted_attestors, p.executor_identity))
                return Reason::FilterUntrustedSigner;
        return Reason::Ok;
    });
    c.run("filter-whitelist", [&] {
        for (const auto& s : chain.filter_specs)
            if (!policy.filter_whitelist.count(s.spec_digest)) return Reason::FilterNotWhitelisted;
        for (const auto& p : chain.filter_proofs)
            if (!policy.filter_whitelist.count(p.spec_digest)) return Reason::FilterNotWhitelisted;
        return Reason::Ok;
    });
    c.run("filter-specs", [&] {
        if (chain.filter_specs.size() != chain.filter_proofs.size()) return Reason::SpecMismatch;
        for (std::size_t i = 0; i < chain.filter_specs.size(); ++i)
            if (!chain.filter_specs[i].digest_consistent() ||
                chain.filter_specs[i].spec_digest != chain.filter_proofs[i].spec_digest)
                return Reason::SpecMismatch;
        return Reason::Ok;
    });
    c.run("linkage", [&] {
        Digest cur = att.content_digest;
        for (const auto& p : chain.filter_proofs) {
            if (p.input_digest != cur) return Reason::LinkageBroken;
            cur = p.output_digest;
        }
        if (chain.inference_proof && chain.inference_proof->input_digest != cur) return Reason::LinkageBroken;
        return Reason::Ok;
    });
    c.run("model-requirement", [&] { return check_model(chain, policy.model); });
    c.run("payload-linkage", [&] {
        const std::string want = chain.inference_proof ? "output" : "record";
        if (chain.payload.content_kind() != want) return Reason::PayloadLinkageBroken;
        return chain.payload.digest() == chain.terminal_digest() ? Reason::Ok : Reason::PayloadLinkageBroken;
    });
    c.run("delivery-mode", [&] {
        const bool sealed = chain.payload.kind == PayloadKind::Sealed;
        switch (policy.delivery) {
            case DeliveryRequirement::Plaintext: return sealed ? Reason::DeliveryModeMismatch : Reason::Ok;
            case DeliveryRequirement::Sealed:
                if (!sealed || chain.payload.sealed->suite != kSealSuite) return Reason::DeliveryModeMismatch;
                if (policy.recipient && chain.payload.sealed->recipient != *policy.recipient)
                    return Reason::DeliveryModeMismatch;
                return Reason::Ok;
            case DeliveryRequirement::Any: break;
        }
        return Reason::Ok;
    });
    if (recipient_key) {
        c.run("payload-open", [&] {
            if (chain.payload.kind != PayloadKind::Sealed) return Reason::Ok;
            try {
                Doc d = open_doc(*recipient_key, *chain.payload.sealed);
                if (chain.payload.sealed->kind == "record") DataRecord::from_doc(d);
                else InferenceOutput::from_doc(d);
            } catch (const Error&) {
                return Reason::DecryptFailure;
            }
            return Reason::Ok;
        });
    }
    return rep;
}

VerificationReport verify_chain_bytes(std::string_view bytes, const VerifierPolicy& policy, UnixSeconds now,
                                      const SigningKey* recipient_key) {
    PropChain chain;
    try {
        chain = PropChain::from_doc(canonical_decode_strict(bytes));
    } catch (const std::exception&) {
        VerificationReport rep;
        rep.verified_at = now;
        rep.checks.push_back({"chain-decode", false, std::string(to_string(Reason::Malformed))});
        return rep;
    }
    return verify_chain(chain, policy, now, recipient_key);
}

}  // namespace props
