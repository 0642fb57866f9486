#include <gtest/gtest.h>

#include <chrono>
#include <random>

#include "props/committee/committee.hpp"
#include "props/core/error.hpp"
#include "test_support.hpp"

namespace props {
namespace {

PinnedModel loan_model() { return PinnedModel::from_config(testing::load_config("infer-loan.json").at("model")); }

DataRecord loan_features() {
    return DataRecord{"bigbank", "bob",
                      Doc{{"debt_total", 1400}, {"income_monthly", 5200}, {"missed_payments", 1}, {"months_employed", 48}},
                      "application/bank-statement+json", 1700000000};
}

struct CommitteeFixture : ::testing::Test {
    PinnedModel model = loan_model();
    ModelSpec spec = pin_model(model.env, model.weights);
    DataRecord x = loan_features();
    InferenceOutput honest = execute_pinned(spec, model, x);

    CommitteeVerdict run(std::map<std::size_t, NodeBehavior> plan, LocalCommittee* out = nullptr) {
        LocalCommittee c = make_local_committee(5, 4, model, std::move(plan));
        CommitteeVerdict v = run_committee(c.config, spec, x, c.links(), kRoundDeadline, 1700000001);
        if (out) *out = c;
        return v;
    }
};

TEST_F(CommitteeFixture, AllHonestUnanimous) {
    LocalCommittee c;
    CommitteeVerdict v = run({}, &c);
    ASSERT_TRUE(v.ok());
    EXPECT_EQ(v.proof->signatures.size(), 5u);
    EXPECT_EQ(*v.agreed_output, honest);
    EXPECT_EQ(verify_committee_proof(*v.proof, c.config, spec.pinned_digest), Reason::Ok);
    for (const auto& sig : v.proof->signatures) EXPECT_TRUE(signature_valid(*v.proof, sig));
}

TEST_F(CommitteeFixture, OneWrongOutputTolerated) {
    LocalCommittee c;
    CommitteeVerdict v = run({{2, NodeBehavior::WrongOutput}}, &c);
    ASSERT_TRUE(v.ok());
    EXPECT_EQ(v.proof->signatures.size(), 4u);
    EXPECT_EQ(v.votes[2].status, VoteStatus::Deviant);
    ASSERT_TRUE(v.votes[2].output_digest.has_value());
    EXPECT_NE(*v.votes[2].output_digest, honest.digest());
    EXPECT_EQ(v.proof->output_digest, honest.digest());
    EXPECT_EQ(verify_committee_proof(*v.proof, c.config, spec.pinned_digest), Reason::Ok);
}

TEST_F(CommitteeFixture, TwoCrashesFailConsensus) {
    CommitteeVerdict v = run({{0, NodeBehavior::Crash}, {4, NodeBehavior::Crash}});
    EXPECT_FALSE(v.ok());
    EXPECT_FALSE(v.agreed_output.has_value());
    EXPECT_EQ(v.failure, Reason::ConsensusFailure);
    EXPECT_EQ(std::count_if(v.votes.begin(), v.votes.end(), [](const VoteRecord& r) { return r.status == VoteStatus::Voted; }), 3);
    EXPECT_EQ(v.votes[0].status, VoteStatus::Missing);
}

TEST_F(CommitteeFixture, EquivocationDetectedAndDiscarded) {
    CommitteeVerdict v = run({{1, NodeBehavior::Equivocate}});
    ASSERT_TRUE(v.ok());
    EXPECT_EQ(v.votes[1].status, VoteStatus::Equivocated);
    EXPECT_EQ(v.proof->signatures.size(), 4u);
    CommitteeVerdict w = run({{1, NodeBehavior::Equivocate}, {3, NodeBehavior::WrongOutput}});
    EXPECT_EQ(w.failure, Reason::ConsensusFailure);
}

TEST_F(CommitteeFixture, ServiceRefNotReplicable) {
    LocalCommittee c = make_local_committee(5, 4, model);
    EXPECT_THROW(run_committee(c.config, ModelSpec::service_ref("svc"), x, c.links()), Error);
    try {
        run_committee(c.config, ModelSpec::service_ref("svc"), x, c.links());
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NotReplicable);
    }
}

TEST_F(CommitteeFixture, VerifyReasons) {
    LocalCommittee c;
    CommitteeVerdict v = run({{0, NodeBehavior::Crash}}, &c);
    ASSERT_TRUE(v.ok());
    const InferenceProof& p = *v.proof;
    EXPECT_EQ(p.signatures.size(), 4u);
    EXPECT_EQ(verify_committee_proof(p, c.config, spec.pinned_digest), Reason::Ok);

    InferenceProof dup = p;
    dup.signatures.pop_back();
    dup.signatures.push_back(dup.signatures.front());
    EXPECT_EQ(verify_committee_proof(dup, c.config, spec.pinned_digest), Reason::DuplicateSigner);

    PinnedModel other = model;
    other.weights.bias.raw -= 1;
    EXPECT_EQ(verify_committee_proof(p, c.config, pin_model(other.env, other.weights).pinned_digest),
              Reason::PinMismatch);

    InferenceProof short_proof = p;
    short_proof.signatures.pop_back();
    EXPECT_EQ(verify_committee_proof(short_proof, c.config, spec.pinned_digest), Reason::InsufficientQuorum);

    InferenceProof outsider = p;
    SigningKey rogue = keygen(Role::CommitteeNode);
    outsider.signatures[0] = {rogue.identity(), sign_inference(rogue, p.pinned_digest, p.input_digest, p.output_digest)};
    EXPECT_EQ(verify_committee_proof(outsider, c.config, spec.pinned_digest), Reason::UnknownSigner);

    InferenceProof altered = p;
    altered.output_digest = sha256(std::string_view("other output"));
    EXPECT_EQ(verify_committee_proof(altered, c.config, spec.pinned_digest), Reason::BadSignature);

    InferenceProof tee = p;
    tee.mode = ProofMode::TeeSim;
    EXPECT_EQ(verify_committee_proof(tee, c.config, spec.pinned_digest), Reason::Malformed);

    CommitteeConfig stricter = c.config;
    stricter.quorum_t = 5;
    EXPECT_EQ(verify_committee_proof(p, stricter, spec.pinned_digest), Reason::InsufficientQuorum);
}

TEST_F(CommitteeFixture, ForgedVotesAreInvalid) {
    LocalCommittee c = make_local_committee(5, 4, model);
    SigningKey rogue = keygen(Role::CommitteeNode);
    CommitteeNode impostor(rogue, model);
    std::vector<NodeLink> links = c.links();
    // Node 0's slot answered by a different key claiming node 0's identity.
    links[0] = [&](const ModelSpec& s, const DataRecord& in, net::Millis) {
        std::vector<Vote> votes = impostor.respond(s, in);
        for (auto& v : votes) v.node = c.config.nodes[0];
        return votes;
    };
    CommitteeVerdict v = run_committee(c.config, spec, x, links);
    EXPECT_EQ(v.votes[0].status, VoteStatus::Invalid);
    ASSERT_TRUE(v.ok());
    EXPECT_EQ(v.proof->signatures.size(), 4u);
}

TEST_F(CommitteeFixture, SlowLinkCountsAsMissing) {
    LocalCommittee c = make_local_committee(5, 4, model);
    std::vector<NodeLink> links = c.links();
    links[3] = [](const ModelSpec&, const DataRecord&, net::Millis) -> std::vector<Vote> {
        std::this_thread::sleep_for(std::chrono::milliseconds(400));
        return {};
    };
    auto t0 = std::chrono::steady_clock::now();
    CommitteeVerdict v = run_committee(c.config, spec, x, links, net::Millis{100});
    EXPECT_EQ(v.votes[3].status, VoteStatus::Missing);
    EXPECT_TRUE(v.ok());
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(2));
}

TEST_F(CommitteeFixture, ConfigValidation) {
    LocalCommittee c = make_local_committee(5, 4, model);
    CommitteeConfig bad = c.config;
    bad.quorum_t = 6;
    EXPECT_THROW(bad.validate(), Error);
    bad.quorum_t = 0;
    EXPECT_THROW(bad.validate(), Error);
    bad = c.config;
    bad.nodes[1] = bad.nodes[0];
    EXPECT_THROW(bad.validate(), Error);
    bad = c.config;
    bad.nodes[2] = keygen(Role::Executor).identity();
    EXPECT_THROW(bad.validate(), Error);
    bad = c.config;
    bad.fault_plan[9] = NodeBehavior::Crash;
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_THROW(run_committee(c.config, spec, x, {}), Error);

    CommitteeConfig planned = c.config;
    planned.fault_plan = {{1, NodeBehavior::Equivocate}, {3, NodeBehavior::Crash}};
    EXPECT_EQ(CommitteeConfig::from_doc(canonical_decode_strict(canonical_encode(planned.to_doc()))), planned);
}

TEST_F(CommitteeFixture, VerdictExport) {
    CommitteeVerdict v = run({{2, NodeBehavior::WrongOutput}});
    Doc d = canonical_decode_strict(canonical_encode(v.to_doc()));
    EXPECT_EQ(InferenceProof::from_doc(d.at("proof")), *v.proof);
    EXPECT_EQ(d.at("votes").as_array()[2].at("status").as_string(), "deviant");
    EXPECT_TRUE(d.at("failure").is_null());
    CommitteeVerdict f = run({{2, NodeBehavior::Crash}, {3, NodeBehavior::Crash}});
    EXPECT_EQ(f.to_doc().at("failure").as_string(), "ConsensusFailure");
}

TEST_F(CommitteeFixture, RandomizedFaultPlansAreSafe) {
    std::mt19937_64 rng(23);
    const NodeBehavior kinds[] = {NodeBehavior::WrongOutput, NodeBehavior::Crash, NodeBehavior::Equivocate};
    for (int trial = 0; trial < 150; ++trial) {
        std::map<std::size_t, NodeBehavior> plan;
        for (std::size_t i = 0; i < 5; ++i)
            if (rng() % 3 == 0) plan[i] = kinds[rng() % 3];
        LocalCommittee c;
        CommitteeVerdict v = run(plan, &c);
        const std::size_t faulty = c.config.faulty_count();
        if (faulty <= 1) {
            ASSERT_TRUE(v.ok()) << "trial " << trial;
            EXPECT_EQ(*v.agreed_output, honest);
        } else {
            EXPECT_EQ(v.failure, Reason::ConsensusFailure) << "trial " << trial;
        }
        if (v.proof && verify_committee_proof(*v.proof, c.config, spec.pinned_digest) == Reason::Ok)
            EXPECT_EQ(v.proof->output_digest, honest.digest()) << "trial " << trial;
    }
}

TEST_F(CommitteeFixture, TcpNodesWithCrash) {
    LocalCommittee c = make_local_committee(5, 4, model, {{4, NodeBehavior::Crash}});
    std::vector<std::unique_ptr<NodeServer>> servers;
    std::vector<NodeLink> links;
    for (const auto& node : c.nodes) {
        servers.push_back(std::make_unique<NodeServer>(node, net::Endpoint{}));
        links.push_back(tcp_link(servers.back()->endpoint()));
    }
    auto t0 = std::chrono::steady_clock::now();
    CommitteeVerdict v = run_committee(c.config, spec, x, links, net::Millis{500});
    ASSERT_TRUE(v.ok());
    EXPECT_EQ(v.votes[4].status, VoteStatus::Missing);
    EXPECT_EQ(*v.agreed_output, honest);
    EXPECT_EQ(verify_committee_proof(*v.proof, c.config, spec.pinned_digest), Reason::Ok);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(3));
    for (auto& s : servers) s->shutdown();
}

}  // namespace
}  // namespace props
