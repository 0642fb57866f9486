#include "props/net/source.hpp"

#include "props/core/error.hpp"

namespace props::net {

Doc SourceDescriptor::to_doc() const {
    return Doc{{"endpoint", endpoint.str()},
               {"signing_enabled", signing_enabled},
               {"source_id", source_id},
               {"source_identity", source_identity.to_doc()}};
}

SourceDescriptor SourceDescriptor::from_doc(const Doc& doc) {
    ObjectReader r(doc, "source");
    SourceDescriptor d;
    d.endpoint = Endpoint::parse(r.string("endpoint"));
    d.signing_enabled = r.boolean("signing_enabled");
    d.source_id = r.string("source_id");
    d.source_identity = KeyIdentity::from_doc(r.get("source_identity"));
    r.finish();
    return d;
}

Doc FetchRequest::to_doc() const {
    return Doc{{"credential", credential},
               {"record_type", record_type},
               {"subject_id", subject_id},
               {"type", "fetch"}};
}

FetchRequest FetchRequest::from_doc(const Doc& doc) {
    ObjectReader r(doc, "fetch request");
    FetchRequest q;
    q.credential = r.string("credential");
    q.record_type = r.string("record_type");
    q.subject_id = r.string("subject_id");
    if (r.string("type") != "fetch") throw Error(Errc::Malformed, "fetch request: wrong type");
    r.finish();
    if (q.credential.empty()) throw Error(Errc::Malformed, "fetch request: empty credential");
    return q;
}

Doc SourceSignature::to_doc() const {
    return Doc{{"request_digest", request_digest.hex()},
               {"signature", signature.hex()},
               {"signed_at", signed_at}};
}

SourceSignature SourceSignature::from_doc(const Doc& doc) {
    ObjectReader r(doc, "source_signature");
    SourceSignature s;
    s.request_digest = Digest::from_hex(r.string("request_digest"));
    s.signature = Signature::from_hex(r.string("signature"));
    s.signed_at = r.int64("signed_at");
    r.finish();
    return s;
}

Doc FetchResponse::to_doc() const {
    Doc d{{"record", record.to_doc()}, {"type", "record"}};
    if (source_signature) d.set("source_signature", source_signature->to_doc());
    return d;
}

FetchResponse FetchResponse::from_doc(const Doc& doc) {
    ObjectReader r(doc, "fetch response");
    FetchResponse resp;
    resp.record = DataRecord::from_doc(r.get("record"));
    if (const Doc* sig = r.optional("source_signature")) resp.source_signature = SourceSignature::from_doc(*sig);
    if (r.string("type") != "record") throw Error(Errc::Malformed, "fetch response: wrong type");
    r.finish();
    return resp;
}

RecordStore RecordStore::from_doc(const Doc& doc) {
    RecordStore store;
    for (const auto& [subject, cred] : doc.at("accounts").as_object()) store.accounts[subject] = cred.as_string();
    for (const Doc& rec : doc.at("records").as_array()) {
        StoredRecord sr{rec.at("content_type").as_string(), rec.at("content")};
        canonical_encode(sr.content);  // rejects content outside the canonical model
        store.records[{rec.at("subject_id").as_string(), rec.at("record_type").as_string()}] = std::move(sr);
    }
    return store;
}

Doc RecordStore::to_doc() const {
    Doc accts = Doc::object();
    for (const auto& [subject, cred] : accounts) accts.set(subject, cred);
    Array recs;
    for (const auto& [key, sr] : records)
        recs.push_back(Doc{{"content", sr.content},
                           {"content_type", sr.content_type},
                           {"record_type", key.second},
                           {"subject_id", key.first}});
    return Doc{{"accounts", std::move(accts)}, {"records", std::move(recs)}};
}

SourceServer::SourceServer(SourceOptions opts) : opts_(std::move(opts)) {
    identity_ = opts_.signing_key ? opts_.signing_key->identity() : KeyIdentity{};
    server_ = std::make_unique<TcpServer>(opts_.listen, [this](Socket& conn) {
        while (true) {
            Doc reply;
            try {
                reply = handle(read_message(conn, Millis{30000}));
            } catch (const Error& e) {
                if (e.code() != Errc::MalformedFrame) return;
                // Connection closed or garbage: reply once if we can, then drop.
                try {
                    write_message(conn, error_message("MalformedFrame"));
                } catch (...) {
                }
                return;
            }
            write_message(conn, reply);
        }
    });
}

SourceServer::~SourceServer() { shutdown(); }

SourceDescriptor SourceServer::descriptor() const {
    return SourceDescriptor{opts_.source_id, endpoint(), identity_, opts_.signing_key.has_value()};
}

Doc SourceServer::handle(const Doc& request) const {
    FetchRequest req;
    try {
        req = FetchRequest::from_doc(request);
    } catch (const Error&) {
        return error_message("BadRequest");
    }
    // Authenticate before touching records: an unknown subject and a wrong
    // token are indistinguishable.
    auto acct = opts_.store.accounts.find(req.subject_id);
    if (acct == opts_.store.accounts.end() || acct->second != req.credential) return error_message("AuthDenied");
    auto it = opts_.store.records.find({req.subject_id, req.record_type});
    if (it == opts_.store.records.end()) return error_message("NotFound");

    FetchResponse resp;
    resp.record = DataRecord{opts_.source_id, req.subject_id, it->second.content, it->second.content_type,
                             opts_.clock()};
    if (opts_.signing_key) {
        Digest req_digest = request_digest(opts_.source_id, req.record_type, sha256(req.credential));
        UnixSeconds now = opts_.clock();
        SourceAttestation att = make_attestation(*opts_.signing_key, AttestationMode::SourceSigned,
                                                 opts_.source_id, req_digest, resp.record.digest(), now);
        resp.source_signature = SourceSignature{req_digest, now, att.signature};
    }
    return resp.to_doc();
}

Exchange exchange_frames(const Endpoint& ep, ByteView request_payload, Millis deadline) {
    Socket s = connect_tcp(ep, deadline);
    Exchange ex;
    ex.request_frame = encode_frame(request_payload);
    write_all(s, ex.request_frame);
    Bytes payload = read_frame(s, deadline);
    ex.response_frame = encode_frame(payload);
    return ex;
}

FetchResponse parse_fetch_reply(ByteView response_payload) {
    Doc msg = decode_message(response_payload);
    const Doc* type = msg.find("type");
    if (type && type->is_string() && type->as_string() == "error") {
        const Doc* code = msg.find("code");
        std::string c = code && code->is_string() ? code->as_string() : "";
        if (c == "AuthDenied") throw Error(Errc::AuthDenied, "source rejected credential");
        if (c == "NotFound") throw Error(Errc::NotFound, "no such record");
        throw Error(Errc::MalformedFrame, "source error: " + c);
    }
    try {
        return FetchResponse::from_doc(msg);
    } catch (const Error& e) {
        throw Error(Errc::MalformedFrame, e.what());
    }
}

FetchResponse fetch(const Endpoint& ep, const FetchRequest& req, Millis deadline) {
    Exchange ex = exchange_frames(ep, as_bytes(canonical_encode(req.to_doc())), deadline);
    return parse_fetch_reply(ByteView(ex.response_frame).subspan(4));
}

}  // namespace props::net
