#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <optional>

#include "props/attest/attestation.hpp"
#include "props/filter/filter.hpp"
#include "props/net/framing.hpp"
#include "props/net/source.hpp"

namespace props {

/// What the attestor saw on the wire. Only digests and lengths are exported;
/// the raw frames carry the credential and plaintext record.
struct Transcript {
    std::string source_endpoint;
    Bytes request_frame;
    Bytes response_frame;

    Doc summary() const;
};

struct AttestedFetch {
    DataRecord record;
    SourceAttestation attestation;
    RequestOpening opening;
    Doc transcript_summary;
};

struct FilteredRecord {
    DataRecord record;
    FilterProof proof;
};

/// Oracle stand-in: relays a client's request to an unmodified source,
/// commits to the exact response it observed, and signs the binding.
class Attestor {
public:
    explicit Attestor(SigningKey key, net::ClockFn clock = unix_now);

    const KeyIdentity& identity() const noexcept { return key_.identity(); }

    /// Throws whatever the source exchange throws (ConnectFailure,
    /// AuthDenied, NotFound, MalformedFrame, Timeout).
    AttestedFetch attest_fetch(const net::SourceDescriptor& source, const net::FetchRequest& request,
                               net::Millis deadline = net::kDefaultDeadline,
                               Transcript* transcript = nullptr) const;

    /// Applies a filter inside the attestor's trust boundary and signs the
    /// resulting FilterProof.
    FilteredRecord filter(const FilterSpec& spec, const DataRecord& input) const;

private:
    SigningKey key_;
    net::ClockFn clock_;
    mutable std::mutex sign_mu_;
};

/// Free-function form of Attestor::attest_fetch.
AttestedFetch attest_fetch(const SigningKey& attestor_key, const net::SourceDescriptor& source,
                           const net::FetchRequest& request, net::ClockFn clock = unix_now);

/// Approach-1 path: turns a source's own signature into an attestation.
/// Throws MissingSourceSignature or BadSourceSignature.
SourceAttestation wrap_source_signed(const net::FetchResponse& response, const KeyIdentity& source_identity);

/// Serves Attestor operations over the framed protocol:
///   {"type":"attest-fetch","source":SourceDescriptor,"request":FetchRequest}
///   {"type":"filter","spec":FilterSpec,"record":DataRecord}
class AttestorServer {
public:
    AttestorServer(std::shared_ptr<const Attestor> attestor, const net::Endpoint& listen);
    ~AttestorServer() { shutdown(); }

    net::Endpoint endpoint() const { return server_->endpoint(); }
    void shutdown() { server_->shutdown(); }

    Doc handle(const Doc& request) const;

private:
    std::shared_ptr<const Attestor> attestor_;
    std::unique_ptr<net::TcpServer> server_;
};

/// Client side of AttestorServer. Connection failures surface as
/// AttestorUnavailable; source errors keep their own codes.
class AttestorClient {
public:
    explicit AttestorClient(net::Endpoint ep, net::Millis deadline = net::kDefaultDeadline)
        : ep_(std::move(ep)), deadline_(deadline) {}

    AttestedFetch fetch(const net::SourceDescriptor& source, const net::FetchRequest& request) const;
    FilteredRecord filter(const FilterSpec& spec, const DataRecord& record) const;

private:
    Doc call(const Doc& request) const;

    net::Endpoint ep_;
    net::Millis deadline_;
};

/// Frame-level man-in-the-middle used for fault injection: relays one client
/// frame upstream per connection; `mutate` maps the reply payload to the
/// exact wire bytes sent back, so it can also emit broken frames.
class FrameProxy {
public:
    using Mutator = std::function<Bytes(Bytes response_payload)>;

    /// Mutator that edits the payload and re-frames it correctly.
    static Mutator rewrite_payload(std::function<Bytes(Bytes)> edit) {
        return [edit = std::move(edit)](Bytes p) { return net::encode_frame(edit(std::move(p))); };
    }

    FrameProxy(net::Endpoint upstream, Mutator mutate, const net::Endpoint& listen = {});
    ~FrameProxy() { shutdown(); }

    net::Endpoint endpoint() const { return server_->endpoint(); }
    void shutdown() { server_->shutdown(); }

private:
    net::Endpoint upstream_;
    Mutator mutate_;
    std::unique_ptr<net::TcpServer> server_;
};

}  // namespace props
