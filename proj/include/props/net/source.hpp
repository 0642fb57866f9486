#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "props/attest/attestation.hpp"
#include "props/core/crypto.hpp"
#include "props/core/record.hpp"
#include "props/net/framing.hpp"

namespace props::net {

using ClockFn = std::function<UnixSeconds()>;

struct SourceDescriptor {
    std::string source_id;
    Endpoint endpoint;
    KeyIdentity source_identity;
    bool signing_enabled = false;

    Doc to_doc() const;
    static SourceDescriptor from_doc(const Doc& doc);
};

struct FetchRequest {
    std::string subject_id;
    std::string credential;
    std::string record_type;

    Doc to_doc() const;
    /// Throws Malformed, including on an empty credential.
    static FetchRequest from_doc(const Doc& doc);
};

/// Approach-1 signature: the source signs the same attestation body an
/// oracle would, in source-signed mode.
struct SourceSignature {
    Digest request_digest;
    UnixSeconds signed_at = 0;
    Signature signature;

    Doc to_doc() const;
    static SourceSignature from_doc(const Doc& doc);
};

struct FetchResponse {
    DataRecord record;
    std::optional<SourceSignature> source_signature;

    Doc to_doc() const;
    static FetchResponse from_doc(const Doc& doc);
};

struct StoredRecord {
    std::string content_type;
    Doc content;
};

/// Read-only after seeding. Accounts map subject_id to its bearer credential.
struct RecordStore {
    std::map<std::string, std::string> accounts;
    std::map<std::pair<std::string, std::string>, StoredRecord> records;

    /// Loads {"accounts": {...}, "records": [{subject_id, record_type,
    /// content_type, content}]}.
    static RecordStore from_doc(const Doc& doc);
    Doc to_doc() const;
};

struct SourceOptions {
    std::string source_id;
    Endpoint listen;
    RecordStore store;
    /// Present iff signing is enabled (Approach 1).
    std::optional<SigningKey> signing_key;
    ClockFn clock = unix_now;
};

/// Simulated deep-web record server. Stops on shutdown() or destruction.
class SourceServer {
public:
    /// Throws BindFailure.
    explicit SourceServer(SourceOptions opts);
    ~SourceServer();

    SourceDescriptor descriptor() const;
    Endpoint endpoint() const { return server_->endpoint(); }
    void shutdown() { server_->shutdown(); }

    /// Handles one decoded request; exposed for in-process use and tests.
    Doc handle(const Doc& request) const;

private:
    SourceOptions opts_;
    KeyIdentity identity_;
    std::unique_ptr<TcpServer> server_;
};

/// Raw exchange: one request frame out, one response frame back.
struct Exchange {
    Bytes request_frame;
    Bytes response_frame;
};

Exchange exchange_frames(const Endpoint& ep, ByteView request_payload, Millis deadline = kDefaultDeadline);

/// Parses a source reply; wire errors become typed Errors (AuthDenied,
/// NotFound, MalformedFrame).
FetchResponse parse_fetch_reply(ByteView response_payload);

/// Blocking fetch. Throws ConnectFailure, AuthDenied, NotFound,
/// MalformedFrame or Timeout.
FetchResponse fetch(const Endpoint& ep, const FetchRequest& req, Millis deadline = kDefaultDeadline);

}  // namespace props::net
