#include "props/committee/committee.hpp"

#include <algorithm>
#include <future>
#include <set>

#include "props/core/error.hpp"

namespace props {

std::string_view to_string(NodeBehavior b) noexcept {
    switch (b) {
        case NodeBehavior::Honest: return "honest";
        case NodeBehavior::WrongOutput: return "wrong-output";
        case NodeBehavior::Crash: return "crash";
        case NodeBehavior::Equivocate: return "equivocate";
    }
    return "?";
}

NodeBehavior node_behavior_from_string(std::string_view s) {
    for (NodeBehavior b : {NodeBehavior::Honest, NodeBehavior::WrongOutput, NodeBehavior::Crash,
                           NodeBehavior::Equivocate})
        if (to_string(b) == s) return b;
    throw Error(Errc::ConfigError, "unknown node behavior '" + std::string(s) + "'");
}

NodeBehavior CommitteeConfig::behavior_of(std::size_t index) const {
    auto it = fault_plan.find(index);
    return it == fault_plan.end() ? NodeBehavior::Honest : it->second;
}

std::size_t CommitteeConfig::faulty_count() const {
    return static_cast<std::size_t>(std::count_if(fault_plan.begin(), fault_plan.end(), [](const auto& kv) {
        return kv.second != NodeBehavior::Honest;
    }));
}

void CommitteeConfig::validate() const {
    const auto n = static_cast<int>(nodes.size());
    if (quorum_t < 1 || quorum_t > n)
        throw Error(Errc::ConfigError, "quorum " + std::to_string(quorum_t) + " outside 1.." + std::to_string(n));
    std::set<Digest> seen;
    for (const auto& id : nodes) {
        if (id.role != Role::CommitteeNode || !id.well_formed())
            throw Error(Errc::ConfigError, "committee member " + id.fingerprint.hex() + " is not a committee-node key");
        if (!seen.insert(id.fingerprint).second)
            throw Error(Errc::ConfigError, "committee member listed twice: " + id.fingerprint.hex());
    }
    for (const auto& [i, b] : fault_plan)
        if (i >= nodes.size()) throw Error(Errc::ConfigError, "fault plan names node " + std::to_string(i));
}

Doc CommitteeConfig::membership_doc() const {
    Array ids;
    for (const auto& id : nodes) ids.push_back(id.to_doc());
    return Doc{{"nodes", std::move(ids)}, {"quorum_t", quorum_t}};
}

Doc CommitteeConfig::to_doc() const {
    Doc d = membership_doc();
    Doc plan = Doc::object();
    for (const auto& [i, b] : fault_plan) plan.set(std::to_string(i), std::string(to_string(b)));
    d.set("fault_plan", std::move(plan));
    return d;
}

CommitteeConfig CommitteeConfig::from_doc(const Doc& doc) {
    ObjectReader r(doc, "committee");
    CommitteeConfig c;
    if (const Doc* plan = r.optional("fault_plan")) {
        for (const auto& [k, v] : plan->as_object()) {
            if (k.empty() || k.size() > 6 || !std::all_of(k.begin(), k.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
                throw Error(Errc::Malformed, "fault plan key '" + k + "' is not a node index");
            c.fault_plan[std::stoul(k)] = node_behavior_from_string(v.as_string());
        }
    }
    for (const Doc& id : r.array("nodes")) c.nodes.push_back(KeyIdentity::from_doc(id));
    c.quorum_t = static_cast<int>(r.int64("quorum_t"));
    r.finish();
    return c;
}

Doc Vote::to_doc() const {
    return Doc{{"input_digest", input_digest.hex()},
               {"node", node.to_doc()},
               {"output", output.to_doc()},
               {"pinned_digest", pinned_digest.hex()},
               {"signature", signature.hex()}};
}

Vote Vote::from_doc(const Doc& doc) {
    ObjectReader r(doc, "vote");
    Vote v;
    v.input_digest = Digest::from_hex(r.string("input_digest"));
    v.node = KeyIdentity::from_doc(r.get("node"));
    v.output = InferenceOutput::from_doc(r.get("output"));
    v.pinned_digest = Digest::from_hex(r.string("pinned_digest"));
    v.signature = Signature::from_hex(r.string("signature"));
    r.finish();
    return v;
}

CommitteeNode::CommitteeNode(SigningKey key, PinnedModel model, NodeBehavior behavior, std::size_t index)
    : key_(std::move(key)), model_(std::move(model)), behavior_(behavior), index_(index) {
    if (key_.role() != Role::CommitteeNode) throw Error(Errc::UnknownKey, "committee nodes need committee-node keys");
}

Vote CommitteeNode::signed_vote(const ModelSpec& spec, const DataRecord& input, const InferenceOutput& y) const {
    Vote v{key_.identity(), y, spec.pinned_digest, input.digest(), {}};
    v.signature = sign_inference(key_, v.pinned_digest, v.input_digest, y.digest());
    return v;
}

std::vector<Vote> CommitteeNode::respond(const ModelSpec& spec, const DataRecord& input) const {
    if (behavior_ == NodeBehavior::Crash) return {};
    InferenceOutput y = execute_pinned(spec, model_, input);
    auto skewed = [&](std::int64_t delta) {
        InferenceOutput w = y;
        w.score.raw += delta;
        w.decision = w.decision == Decision::Approve ? Decision::Deny : Decision::Approve;
        return w;
    };
    const auto salt = static_cast<std::int64_t>(index_) + 1;
    switch (behavior_) {
        case NodeBehavior::Honest: return {signed_vote(spec, input, y)};
        case NodeBehavior::WrongOutput: return {signed_vote(spec, input, skewed(salt))};
        case NodeBehavior::Equivocate:
            return {signed_vote(spec, input, skewed(1000 * salt)), signed_vote(spec, input, skewed(-1000 * salt))};
        case NodeBehavior::Crash: break;
    }
    return {};
}

NodeLink in_process_link(std::shared_ptr<const CommitteeNode> node) {
    return [node = std::move(node)](const ModelSpec& spec, const DataRecord& input, net::Millis) {
        return node->respond(spec, input);
    };
}

std::string_view to_string(VoteStatus s) noexcept {
    switch (s) {
        case VoteStatus::Agree: return "agree";
        case VoteStatus::Deviant: return "deviant";
        case VoteStatus::Voted: return "voted";
        case VoteStatus::Missing: return "missing";
        case VoteStatus::Equivocated: return "equivocated";
        case VoteStatus::Invalid: return "invalid";
    }
    return "?";
}

Doc CommitteeVerdict::to_doc() const {
    Array vs;
    for (std::size_t i = 0; i < votes.size(); ++i)
        vs.push_back(Doc{{"index", static_cast<std::int64_t>(i)},
                         {"output_digest", votes[i].output_digest ? Doc(votes[i].output_digest->hex()) : Doc()},
                         {"status", std::string(to_string(votes[i].status))}});
    return Doc{{"agreed_output", agreed_output ? agreed_output->to_doc() : Doc()},
               {"failure", failure == Reason::Ok ? Doc() : Doc(std::string(to_string(failure)))},
               {"proof", proof ? proof->to_doc() : Doc()},
               {"votes", std::move(vs)}};
}

CommitteeVerdict aggregate_votes(const CommitteeConfig& config, const Digest& pinned, const Digest& input_digest,
                                 const std::vector<std::optional<std::vector<Vote>>>& received,
                                 UnixSeconds executed_at) {
    CommitteeVerdict v;
    v.votes.resize(config.nodes.size());
    std::vector<std::optional<Vote>> accepted(config.nodes.size());
    std::map<Digest, std::vector<std::size_t>> tally;

    for (std::size_t i = 0; i < config.nodes.size(); ++i) {
        if (i >= received.size() || !received[i] || received[i]->empty()) continue;  // Missing
        std::vector<Vote> valid;
        for (const Vote& vote : *received[i]) {
            if (vote.node != config.nodes[i] || vote.pinned_digest != pinned || vote.input_digest != input_digest)
                continue;
            if (!verify_sig(vote.node, DomainTag::Inference,
                            as_bytes(canonical_encode(inference_triple(pinned, input_digest, vote.output.digest()))),
                            vote.signature))
                continue;
            valid.push_back(vote);
        }
        if (valid.empty()) {
            v.votes[i].status = VoteStatus::Invalid;
            continue;
        }
        const Digest d = valid.front().output.digest();
        if (std::any_of(valid.begin(), valid.end(), [&](const Vote& x) { return x.output.digest() != d; })) {
            v.votes[i].status = VoteStatus::Equivocated;
            continue;
        }
        v.votes[i] = {VoteStatus::Voted, d};
        accepted[i] = valid.front();
        tally[d].push_back(i);
    }

    std::vector<const std::pair<const Digest, std::vector<std::size_t>>*> winners;
    for (const auto& entry : tally)
        if (static_cast<int>(entry.second.size()) >= config.quorum_t) winners.push_back(&entry);
    if (winners.size() != 1) {
        v.failure = Reason::ConsensusFailure;
        return v;
    }

    const auto& [digest, agreeing] = *winners.front();
    InferenceProof p;
    p.pinned_digest = pinned;
    p.input_digest = input_digest;
    p.output_digest = digest;
    p.executed_at = executed_at;
    p.mode = ProofMode::Committee;
    for (std::size_t i : agreeing) p.signatures.push_back({accepted[i]->node, accepted[i]->signature});
    for (auto& rec : v.votes)
        if (rec.status == VoteStatus::Voted) rec.status = *rec.output_digest == digest ? VoteStatus::Agree : VoteStatus::Deviant;
    v.agreed_output = accepted[agreeing.front()]->output;
    v.proof = std::move(p);
    return v;
}

CommitteeVerdict run_committee(const CommitteeConfig& config, const ModelSpec& spec, const DataRecord& input,
                               const std::vector<NodeLink>& links, net::Millis deadline, UnixSeconds executed_at) {
    config.validate();
    if (spec.kind != ModelKind::Exact)
        throw Error(Errc::NotReplicable, "committees only run exactly pinned specs");
    if (links.size() != config.nodes.size())
        throw Error(Errc::ConfigError, std::to_string(links.size()) + " links for " +
                                           std::to_string(config.nodes.size()) + " nodes");

    const auto until = std::chrono::steady_clock::now() + deadline;
    std::vector<std::future<std::vector<Vote>>> pending;
    for (const auto& link : links)
        pending.push_back(std::async(std::launch::async, [&link, &spec, &input, deadline] {
            return link(spec, input, deadline);
        }));

    std::vector<std::optional<std::vector<Vote>>> received(links.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (pending[i].wait_until(until) != std::future_status::ready) continue;
        try {
            received[i] = pending[i].get();
        } catch (const std::exception&) {
        }
    }
    return aggregate_votes(config, spec.pinned_digest, input.digest(), received, executed_at);
}

Reason verify_committee_proof(const InferenceProof& proof, const CommitteeConfig& config,
                              const Digest& expected_pinned) {
    if (proof.pinned_digest != expected_pinned) return Reason::PinMismatch;
    if (proof.mode != ProofMode::Committee) return Reason::Malformed;
    std::set<Digest> seen;
    for (const auto& sig : proof.signatures) {
        if (std::find(config.nodes.begin(), config.nodes.end(), sig.identity) == config.nodes.end())
            return Reason::UnknownSigner;
        if (!seen.insert(sig.identity.fingerprint).second) return Reason::DuplicateSigner;
    }
    for (const auto& sig : proof.signatures)
        if (!signature_valid(proof, sig)) return Reason::BadSignature;
    if (config.quorum_t < 1 || static_cast<int>(seen.size()) < config.quorum_t) return Reason::InsufficientQuorum;
    return Reason::Ok;
}

std::vector<NodeLink> LocalCommittee::links() const {
    std::vector<NodeLink> out;
    for (const auto& n : nodes) out.push_back(in_process_link(n));
    return out;
}

LocalCommittee make_local_committee(std::size_t n, int quorum_t, const PinnedModel& model,
                                    std::map<std::size_t, NodeBehavior> fault_plan) {
    LocalCommittee c;
    c.config.quorum_t = quorum_t;
    c.config.fault_plan = std::move(fault_plan);
    for (std::size_t i = 0; i < n; ++i) {
        SigningKey key = keygen(Role::CommitteeNode);
        c.config.nodes.push_back(key.identity());
        c.nodes.push_back(std::make_shared<const CommitteeNode>(std::move(key), model, c.config.behavior_of(i), i));
    }
    c.config.validate();
    return c;
}

NodeServer::NodeServer(std::shared_ptr<const CommitteeNode> node, const net::Endpoint& listen)
    : node_(std::move(node)) {
    server_ = std::make_unique<net::TcpServer>(listen, [this](net::Socket& conn) {
        Doc req;
        try {
            req = net::read_message(conn, net::Millis{30000});
        } catch (const Error&) {
            return;
        }
        if (node_->behavior() == NodeBehavior::Crash) {
            // Hold the connection open without answering until the peer gives up.
            try {
                net::read_message(conn, net::Millis{60000});
            } catch (const Error&) {
            }
            return;
        }
        Doc reply;
        try {
            ObjectReader r(req, "execute request");
            ModelSpec spec = ModelSpec::from_doc(r.get("spec"));
            DataRecord input = DataRecord::from_doc(r.get("input"));
            if (r.string("type") != "execute") throw Error(Errc::Malformed, "unexpected request type");
            r.finish();
            Array votes;
            for (const Vote& v : node_->respond(spec, input)) votes.push_back(v.to_doc());
            reply = Doc{{"type", "votes"}, {"votes", std::move(votes)}};
        } catch (const Error& e) {
            reply = net::error_message(std::string(to_string(e.code())));
        }
        try {
            net::write_message(conn, reply);
        } catch (const Error&) {
        }
    });
}

NodeLink tcp_link(net::Endpoint ep) {
    return [ep = std::move(ep)](const ModelSpec& spec, const DataRecord& input, net::Millis deadline) {
        net::Socket s = net::connect_tcp(ep, deadline);
        net::write_message(s, Doc{{"input", input.to_doc()}, {"spec", spec.to_doc()}, {"type", "execute"}});
        Doc reply = net::read_message(s, deadline);
        ObjectReader r(reply, "votes reply");
        if (r.string("type") != "votes") throw Error(Errc::MalformedFrame, "node reported an error");
        std::vector<Vote> out;
        for (const Doc& v : r.array("votes")) out.push_back(Vote::from_doc(v));
        r.finish();
        return out;
    };
}

}  // namespace props
