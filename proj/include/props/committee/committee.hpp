#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "props/net/framing.hpp"
#include "props/pinned/model.hpp"

namespace props {

enum class NodeBehavior { Honest, WrongOutput, Crash, Equivocate };

std::string_view to_string(NodeBehavior b) noexcept;
NodeBehavior node_behavior_from_string(std::string_view s);

inline constexpr net::Millis kRoundDeadline{2000};

struct CommitteeConfig {
    std::vector<KeyIdentity> nodes;
    int quorum_t = 1;
    /// Node index -> behavior; absent nodes are honest.
    std::map<std::size_t, NodeBehavior> fault_plan;

    NodeBehavior behavior_of(std::size_t index) const;
    std::size_t faulty_count() const;

    /// Throws ConfigError unless 1 <= t <= n, every node is a well-formed
    /// committee-node identity, nodes are distinct and the plan indexes exist.
    void validate() const;

    Doc to_doc() const;
    static CommitteeConfig from_doc(const Doc& doc);
    /// Membership and threshold only; this is what a consumer pins.
    Doc membership_doc() const;

    friend bool operator==(const CommitteeConfig&, const CommitteeConfig&) = default;
};

/// One node's signed answer for a round.
struct Vote {
    KeyIdentity node;
    InferenceOutput output;
    Digest pinned_digest;
    Digest input_digest;
    Signature signature;

    Doc to_doc() const;
    static Vote from_doc(const Doc& doc);
    friend bool operator==(const Vote&, const Vote&) = default;
};

/// A committee member holding its own copy of (E, M). `behavior` injects
/// faults: wrong-output signs a node-specific wrong score, crash stays
/// silent, equivocate signs two conflicting wrong answers.
class CommitteeNode {
public:
    CommitteeNode(SigningKey key, PinnedModel model, NodeBehavior behavior = NodeBehavior::Honest,
                  std::size_t index = 0);

    const KeyIdentity& identity() const noexcept { return key_.identity(); }
    NodeBehavior behavior() const noexcept { return behavior_; }

    /// Empty for a crashed node. Throws NotReplicable / PinMismatch when the
    /// node cannot run `spec`.
    std::vector<Vote> respond(const ModelSpec& spec, const DataRecord& input) const;

private:
    Vote signed_vote(const ModelSpec& spec, const DataRecord& input, const InferenceOutput& y) const;

    SigningKey key_;
    PinnedModel model_;
    NodeBehavior behavior_;
    std::size_t index_;
};

/// How the aggregator reaches node i. Must return within `deadline`;
/// exceptions count as a missing vote.
using NodeLink = std::function<std::vector<Vote>(const ModelSpec&, const DataRecord&, net::Millis deadline)>;

NodeLink in_process_link(std::shared_ptr<const CommitteeNode> node);

/// Voted: a valid vote in a round that reached no agreement.
enum class VoteStatus { Agree, Deviant, Voted, Missing, Equivocated, Invalid };

std::string_view to_string(VoteStatus s) noexcept;

struct VoteRecord {
    VoteStatus status = VoteStatus::Missing;
    std::optional<Digest> output_digest;
};

struct CommitteeVerdict {
    std::optional<InferenceOutput> agreed_output;
    std::optional<InferenceProof> proof;
    /// Indexed like CommitteeConfig::nodes.
    std::vector<VoteRecord> votes;
    /// ConsensusFailure when no output reached the quorum.
    Reason failure = Reason::Ok;

    bool ok() const { return proof.has_value(); }
    Doc to_doc() const;
};

/// Pure tally of what each node sent. A proof is produced iff exactly one
/// output digest has >= t valid votes; it carries exactly those signatures.
CommitteeVerdict aggregate_votes(const CommitteeConfig& config, const Digest& pinned, const Digest& input_digest,
                                 const std::vector<std::optional<std::vector<Vote>>>& received,
                                 UnixSeconds executed_at);

/// One round: every link is queried concurrently, missing answers at the
/// deadline count as crashes. Throws NotReplicable for ServiceRef specs and
/// ConfigError when links and config disagree.
CommitteeVerdict run_committee(const CommitteeConfig& config, const ModelSpec& spec, const DataRecord& input,
                               const std::vector<NodeLink>& links, net::Millis deadline = kRoundDeadline,
                               UnixSeconds executed_at = unix_now());

/// Ok iff pinned matches and >= t valid signatures from distinct configured
/// nodes cover the same triple. Otherwise PinMismatch, Malformed,
/// UnknownSigner, DuplicateSigner, BadSignature or InsufficientQuorum, in
/// that order of precedence.
Reason verify_committee_proof(const InferenceProof& proof, const CommitteeConfig& config,
                              const Digest& expected_pinned);

/// Keys plus nodes for an in-process committee.
struct LocalCommittee {
    CommitteeConfig config;
    std::vector<std::shared_ptr<const CommitteeNode>> nodes;

    std::vector<NodeLink> links() const;
};

LocalCommittee make_local_committee(std::size_t n, int quorum_t, const PinnedModel& model,
                                    std::map<std::size_t, NodeBehavior> fault_plan = {});

/// Serves a CommitteeNode over the framed protocol:
///   {"type":"execute","spec":ModelSpec,"input":DataRecord} -> {"type":"votes","votes":[Vote]}
/// A crashed node reads the request and never answers.
class NodeServer {
public:
    NodeServer(std::shared_ptr<const CommitteeNode> node, const net::Endpoint& listen);
    ~NodeServer() { shutdown(); }

    net::Endpoint endpoint() const { return server_->endpoint(); }
    void shutdown() { server_->shutdown(); }

private:
    std::shared_ptr<const CommitteeNode> node_;
    std::unique_ptr<net::TcpServer> server_;
};

NodeLink tcp_link(net::Endpoint ep);

}  // namespace props
