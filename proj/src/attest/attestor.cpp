#include "props/attest/attestor.hpp"

#include "props/core/error.hpp"

namespace props {

using net::Endpoint;
using net::Socket;

Doc Transcript::summary() const {
    return Doc{{"request_frame_digest", sha256(request_frame).hex()},
               {"request_frame_len", static_cast<std::int64_t>(request_frame.size())},
               {"response_frame_digest", sha256(response_frame).hex()},
               {"response_frame_len", static_cast<std::int64_t>(response_frame.size())},
               {"source_endpoint", source_endpoint}};
}

Attestor::Attestor(SigningKey key, net::ClockFn clock) : key_(std::move(key)), clock_(std::move(clock)) {
    if (key_.role() != Role::Attestor) throw Error(Errc::UnknownKey, "attestor key must have role attestor");
}

AttestedFetch Attestor::attest_fetch(const net::SourceDescriptor& source, const net::FetchRequest& request,
                                     net::Millis deadline, Transcript* transcript) const {
    net::Exchange ex =
        net::exchange_frames(source.endpoint, as_bytes(canonical_encode(request.to_doc())), deadline);
    Transcript t{source.endpoint.str(), ex.request_frame, ex.response_frame};
    // The record is digested exactly as it arrived on the wire.
    net::FetchResponse resp = net::parse_fetch_reply(ByteView(ex.response_frame).subspan(4));
    if (resp.record.source_id != source.source_id)
        throw Error(Errc::MalformedFrame, "source answered for '" + resp.record.source_id + "'");

    const Digest cred = sha256(request.credential);
    AttestedFetch out;
    out.opening = RequestOpening{request.record_type, cred};
    {
        std::lock_guard lock(sign_mu_);
        out.attestation = make_attestation(key_, AttestationMode::OracleProxy, source.source_id,
                                           request_digest(source.source_id, request.record_type, cred),
                                           resp.record.digest(), clock_());
    }
    out.record = std::move(resp.record);
    out.transcript_summary = t.summary();
    if (transcript) *transcript = std::move(t);
    return out;
}

FilteredRecord Attestor::filter(const FilterSpec& spec, const DataRecord& input) const {
    FilteredRecord out;
    out.record = apply_filter(spec, input);
    std::lock_guard lock(sign_mu_);
    out.proof = attest_filter(key_, spec, input, out.record);
    return out;
}

AttestedFetch attest_fetch(const SigningKey& attestor_key, const net::SourceDescriptor& source,
                           const net::FetchRequest& request, net::ClockFn clock) {
    return Attestor(attestor_key, std::move(clock)).attest_fetch(source, request);
}

SourceAttestation wrap_source_signed(const net::FetchResponse& response, const KeyIdentity& source_identity) {
    if (!response.source_signature) throw Error(Errc::MissingSourceSignature, "response is unsigned");
    const auto& ss = *response.source_signature;
    SourceAttestation att;
    att.mode = AttestationMode::SourceSigned;
    att.attestor_identity = source_identity;
    att.source_id = response.record.source_id;
    att.request_digest = ss.request_digest;
    att.content_digest = response.record.digest();
    att.issued_at = ss.signed_at;
    att.signature = ss.signature;
    if (source_identity.role != Role::Source || !source_identity.well_formed() ||
        !verify_sig(source_identity, DomainTag::Attestation, as_bytes(canonical_encode(att.body_doc())),
                    att.signature))
        throw Error(Errc::BadSourceSignature, "source signature does not verify under " +
                                                  source_identity.fingerprint.hex());
    return att;
}

namespace {

Errc errc_from_wire(const std::string& code) {
    for (Errc e : {Errc::AuthDenied, Errc::NotFound, Errc::ConnectFailure, Errc::MalformedFrame, Errc::Timeout,
                   Errc::ParamSchemaMismatch, Errc::PathError, Errc::PathTypeMismatch, Errc::Malformed})
        if (to_string(e) == code) return e;
    return Errc::AttestorUnavailable;
}

}  // namespace

AttestorServer::AttestorServer(std::shared_ptr<const Attestor> attestor, const Endpoint& listen)
    : attestor_(std::move(attestor)) {
    server_ = std::make_unique<net::TcpServer>(listen, [this](Socket& conn) {
        while (true) {
            Doc req;
            try {
                req = net::read_message(conn, net::Millis{30000});
            } catch (const Error&) {
                return;
            }
            net::write_message(conn, handle(req));
        }
    });
}

Doc AttestorServer::handle(const Doc& request) const {
    try {
        ObjectReader r(request, "attestor request");
        const std::string& type = r.string("type");
        if (type == "attest-fetch") {
            auto source = net::SourceDescriptor::from_doc(r.get("source"));
            auto fetch = net::FetchRequest::from_doc(r.get("request"));
            r.finish();
            AttestedFetch af = attestor_->attest_fetch(source, fetch);
            return Doc{{"attestation", af.attestation.to_doc()},
                       {"record", af.record.to_doc()},
                       {"request_opening", af.opening.to_doc()},
                       {"transcript", af.transcript_summary},
                       {"type", "attested"}};
        }
        if (type == "filter") {
            auto spec = FilterSpec::from_doc(r.get("spec"));
            auto record = DataRecord::from_doc(r.get("record"));
            r.finish();
            if (!spec.digest_consistent()) return net::error_message("Malformed");
            FilteredRecord fr = attestor_->filter(spec, record);
            return Doc{{"proof", fr.proof.to_doc()}, {"record", fr.record.to_doc()}, {"type", "filtered"}};
        }
        return net::error_message("Malformed");
    } catch (const Error& e) {
        return net::error_message(to_string(e.code()));
    }
}

Doc AttestorClient::call(const Doc& request) const {
    Socket s;
    try {
        s = net::connect_tcp(ep_, deadline_);
    } catch (const Error& e) {
        throw Error(Errc::AttestorUnavailable, e.what());
    }
    net::write_message(s, request);
    Doc reply = net::read_message(s, deadline_);
    const Doc* type = reply.find("type");
    if (type && type->is_string() && type->as_string() == "error") {
        const Doc* code = reply.find("code");
        std::string c = code && code->is_string() ? code->as_string() : "";
        throw Error(errc_from_wire(c), "attestor reported " + c);
    }
    return reply;
}

AttestedFetch AttestorClient::fetch(const net::SourceDescriptor& source, const net::FetchRequest& request) const {
    Doc reply = call(Doc{{"request", request.to_doc()}, {"source", source.to_doc()}, {"type", "attest-fetch"}});
    try {
        ObjectReader r(reply, "attested reply");
        AttestedFetch af;
        af.attestation = SourceAttestation::from_doc(r.get("attestation"));
        af.record = DataRecord::from_doc(r.get("record"));
        af.opening = RequestOpening::from_doc(r.get("request_opening"));
        af.transcript_summary = r.get("transcript");
        r.string("type");
        r.finish();
        return af;
    } catch (const Error& e) {
        throw Error(Errc::MalformedFrame, e.what());
    }
}

FilteredRecord AttestorClient::filter(const FilterSpec& spec, const DataRecord& record) const {
    Doc reply = call(Doc{{"record", record.to_doc()}, {"spec", spec.to_doc()}, {"type", "filter"}});
    try {
        ObjectReader r(reply, "filtered reply");
        FilteredRecord fr;
        fr.proof = FilterProof::from_doc(r.get("proof"));
        fr.record = DataRecord::from_doc(r.get("record"));
        r.string("type");
        r.finish();
        return fr;
    } catch (const Error& e) {
        throw Error(Errc::MalformedFrame, e.what());
    }
}

FrameProxy::FrameProxy(Endpoint upstream, Mutator mutate, const Endpoint& listen)
    : upstream_(std::move(upstream)), mutate_(std::move(mutate)) {
    server_ = std::make_unique<net::TcpServer>(listen, [this](Socket& client) {
        // One exchange per connection, then close: a truncated reply is
        // observed by the client as end-of-stream mid-frame.
        Socket up = net::connect_tcp(upstream_);
        Bytes req;
        try {
            req = net::read_frame(client, net::Millis{30000});
        } catch (const Error&) {
            return;
        }
        net::write_frame(up, req);
        Bytes reply = net::read_frame(up, net::Millis{30000});
        net::write_all(client, mutate_(std::move(reply)));
    });
}

}  // namespace props
