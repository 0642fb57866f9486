#include <gtest/gtest.h>

#include <random>
#include <thread>

#include "props/core/error.hpp"
#include "props/scenario/scenario.hpp"
#include "test_support.hpp"

namespace props {
namespace {

using Reasons = std::vector<std::string>;

/// One passing run per bundled scenario, shared across tests.
const ScenarioResult& baseline(const std::string& name) {
    static std::map<std::string, ScenarioResult> cache;
    auto it = cache.find(name);
    if (it == cache.end()) {
        auto r = run_scenario(ScenarioConfig::from_doc(testing::load_config(name + ".json")));
        it = cache.emplace(name, std::move(r)).first;
    }
    return it->second;
}

UnixSeconds now_for(const PropChain& c) { return c.attestation.issued_at + 1; }

Reasons reasons(const PropChain& chain, const VerifierPolicy& policy, UnixSeconds now) {
    return verify_chain(chain, policy, now).failure_reasons();
}

// RFC 5869 appendix A.1.
TEST(Seal, HkdfKnownAnswer) {
    const Bytes ikm(22, 0x0b);
    const Bytes salt = from_hex("000102030405060708090a0b0c");
    const Bytes info = from_hex("f0f1f2f3f4f5f6f7f8f9");
    EXPECT_EQ(to_hex(hkdf_sha256(salt, ikm, info, 42)),
              "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
}

TEST(Seal, RoundTripOnEhrRecord) {
    const SigningKey rk = keygen(Role::Recipient);
    const DataRecord rec{"bighospital", "alice", testing::ehr_fixture(), "application/ehr+json", 1700000000};
    const SealedPayload s = seal_payload(rk.identity(), rec);
    EXPECT_EQ(s.suite, kSealSuite);
    EXPECT_EQ(s.kind, "record");
    EXPECT_EQ(s.recipient, rk.identity().fingerprint);
    EXPECT_EQ(s.plaintext_digest, rec.digest());
    EXPECT_EQ(open_payload(rk, s), rec);
    EXPECT_EQ(SealedPayload::from_doc(s.to_doc()), s);
    // Fresh ephemeral key per seal.
    const SealedPayload s2 = seal_payload(rk.identity(), rec);
    EXPECT_NE(s.enc, s2.enc);
    EXPECT_NE(s.ciphertext, s2.ciphertext);
    const std::string wire = canonical_encode(s.to_doc());
    for (const auto& leaf : string_leaves(rec.content)) EXPECT_EQ(wire.find(leaf), std::string::npos);
}

TEST(Seal, WrongKeyOrTamperIsDecryptFailure) {
    const SigningKey rk = keygen(Role::Recipient);
    const DataRecord rec{"bighospital", "alice", testing::ehr_fixture(), "application/ehr+json", 1700000000};
    const SealedPayload s = seal_payload(rk.identity(), rec);
    auto expect_fail = [&](const SigningKey& key, const SealedPayload& p) {
        try {
            open_payload(key, p);
            ADD_FAILURE() << "opened";
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), Errc::DecryptFailure);
        }
    };
    expect_fail(keygen(Role::Recipient), s);
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        SealedPayload t = s;
        const std::size_t bit = rng() % (t.ciphertext.size() * 8);
        t.ciphertext[bit / 8] ^= std::uint8_t(1u << (bit % 8));
        expect_fail(rk, t);
    }
    for (int i = 0; i < 32; ++i) {
        SealedPayload t = s;
        t.enc[i] ^= 0x01;
        expect_fail(rk, t);
    }
    SealedPayload t = s;
    t.plaintext_digest.bytes[0] ^= 1;
    expect_fail(rk, t);
    t = s;
    t.kind = "output";
    expect_fail(rk, t);
    t = s;
    t.ciphertext.resize(8);
    expect_fail(rk, t);
}

TEST(Seal, RequiresRecipientRole) {
    try {
        seal_doc(keygen(Role::Attestor).identity(), Doc{{"a", 1}}, "record");
        ADD_FAILURE();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::Malformed);
    }
}

TEST(Report, RoundTripsAndKeepsOrder) {
    const VerificationReport& pass = baseline("train-ehr").report;
    ASSERT_TRUE(pass.passed());
    EXPECT_EQ(report_import(report_export(pass)), pass);

    VerificationReport fail;
    fail.verified_at = 1234;
    fail.checks = {{"zeta", false, "Stale"}, {"alpha", true, "Ok"}, {"mid", false, "LinkageBroken"},
                   {"future-check-v9", false, "SomethingNew"}};
    const VerificationReport back = report_import(report_export(fail));
    EXPECT_EQ(back, fail);
    EXPECT_EQ(back.failure_reasons(), (Reasons{"Stale", "LinkageBroken", "SomethingNew"}));
    EXPECT_FALSE(VerificationReport{}.passed());

    Doc lying = fail.to_doc();
    lying.set("verdict", "pass");
    EXPECT_THROW(VerificationReport::from_doc(lying), Error);
    Doc wrong = pass.to_doc();
    wrong.set("schema", "props.report/0");
    EXPECT_THROW(VerificationReport::from_doc(wrong), Error);
}

TEST(Verifier, BaselinesPassWithEveryCheck) {
    for (const char* name : {"train-ehr", "infer-loan"}) {
        const ScenarioResult& r = baseline(name);
        const VerificationReport rep = verify_chain(*r.chain, r.policy, now_for(*r.chain));
        ASSERT_TRUE(rep.passed()) << report_export(rep);
        EXPECT_EQ(rep.checks.size(), 14u);
        EXPECT_EQ(rep.checks.front().check_id, "chain-envelope");
        EXPECT_EQ(rep.checks.back().check_id, "delivery-mode");
        // Through the canonical bytes and the policy export too.
        const VerifierPolicy pol = VerifierPolicy::from_doc(canonical_decode(canonical_encode(r.policy.to_doc())));
        EXPECT_EQ(pol, r.policy);
        EXPECT_TRUE(verify_chain_bytes(r.chain->canonical(), pol, now_for(*r.chain)).passed());
        EXPECT_EQ(PropChain::from_doc(r.chain->to_doc()), *r.chain);
    }
}

TEST(Verifier, IsolatedFailuresGiveOneReason) {
    const ScenarioResult& ehr = baseline("train-ehr");
    const ScenarioResult& loan = baseline("infer-loan");
    const UnixSeconds t = now_for(*ehr.chain);

    {  // payload bit flip, envelope recomputed so only the payload link breaks
        PropChain c = *ehr.chain;
        c.payload.record->content.set("mrn", "BH-0042-7782");
        c.seal_envelope();
        EXPECT_EQ(reasons(c, ehr.policy, t), Reasons{"PayloadLinkageBroken"});
    }
    {  // same flip without resealing also trips the envelope
        PropChain c = *ehr.chain;
        c.payload.record->content.set("mrn", "BH-0042-7782");
        EXPECT_EQ(reasons(c, ehr.policy, t), (Reasons{"EnvelopeMismatch", "PayloadLinkageBroken"}));
    }
    {
        VerifierPolicy p = ehr.policy;
        p.filter_whitelist.clear();
        EXPECT_EQ(reasons(*ehr.chain, p, t), Reasons{"FilterNotWhitelisted"});
    }
    {
        VerifierPolicy p = loan.policy;
        p.model.pinned_digest.bytes[5] ^= 0x40;
        EXPECT_EQ(reasons(*loan.chain, p, now_for(*loan.chain)), Reasons{"PinMismatch"});
    }
    {
        const UnixSeconds issued = ehr.chain->attestation.issued_at;
        EXPECT_EQ(reasons(*ehr.chain, ehr.policy, issued + ehr.policy.max_age_seconds), Reasons{});
        EXPECT_EQ(reasons(*ehr.chain, ehr.policy, issued + ehr.policy.max_age_seconds + 1), Reasons{"Stale"});
        EXPECT_EQ(reasons(*ehr.chain, ehr.policy, issued - kMaxClockSkewSeconds), Reasons{});
        EXPECT_EQ(reasons(*ehr.chain, ehr.policy, issued - kMaxClockSkewSeconds - 1), Reasons{"FutureTimestamp"});
    }
    {
        VerifierPolicy p = ehr.policy;
        p.trusted_sources = {"otherhospital"};
        EXPECT_EQ(reasons(*ehr.chain, p, t), Reasons{"UntrustedSource"});
        p = ehr.policy;
        p.required_record_type = "billing";
        EXPECT_EQ(reasons(*ehr.chain, p, t), Reasons{"RecordTypeMismatch"});
        p = ehr.policy;
        p.delivery = DeliveryRequirement::Sealed;
        EXPECT_EQ(reasons(*ehr.chain, p, t), Reasons{"DeliveryModeMismatch"});
        p = ehr.policy;
        p.model.kind = ModelRequirement::Kind::Exact;
        EXPECT_EQ(reasons(*ehr.chain, p, t), Reasons{"MissingInference"});
    }
    {
        // The attestor also signs filter proofs, so distrusting it fails both.
        VerifierPolicy p = ehr.policy;
        p.trusted_attestors = {keygen(Role::Attestor).identity()};
        EXPECT_EQ(reasons(*ehr.chain, p, t), (Reasons{"UntrustedSigner", "FilterUntrustedSigner"}));
    }
    {
        VerifierPolicy p = loan.policy;
        p.model.kind = ModelRequirement::Kind::Exact;
        EXPECT_EQ(reasons(*loan.chain, p, now_for(*loan.chain)), Reasons{"ModelKindMismatch"});
        p = loan.policy;
        p.model.committee->quorum_t = 6;
        p.model.committee->nodes.push_back(keygen(Role::CommitteeNode).identity());
        EXPECT_EQ(reasons(*loan.chain, p, now_for(*loan.chain)), Reasons{"InsufficientQuorum"});
    }
    {
        PropChain c = *loan.chain;
        c.inference_proof.reset();
        c.seal_envelope();
        const Reasons got = reasons(c, loan.policy, now_for(c));
        EXPECT_EQ(got, (Reasons{"MissingInference", "PayloadLinkageBroken"}));
    }
}

TEST(Verifier, GarbageBytesAreOneDecodeCheck) {
    const ScenarioResult& ehr = baseline("train-ehr");
    for (std::string bad : {std::string(""), std::string("{"), std::string("[]"), std::string("{\"schema\":1}")}) {
        const VerificationReport rep = verify_chain_bytes(bad, ehr.policy, 0);
        ASSERT_EQ(rep.checks.size(), 1u);
        EXPECT_EQ(rep.checks[0].check_id, "chain-decode");
        EXPECT_EQ(rep.checks[0].reason, "Malformed");
    }
    // Non-canonical spelling of a valid chain is rejected too.
    const std::string pretty = pretty_json(ehr.chain->to_doc());
    EXPECT_EQ(verify_chain_bytes(pretty, ehr.policy, now_for(*ehr.chain)).failure_reasons(), Reasons{"Malformed"});
}

/// Flips one random bit of the canonical chain bytes per trial.
void bit_flip_campaign(const ScenarioResult& base, int trials, std::uint64_t seed) {
    const std::string bytes = base.chain->canonical();
    const UnixSeconds t = now_for(*base.chain);
    ASSERT_TRUE(verify_chain_bytes(bytes, base.policy, t).passed());
    std::mt19937_64 rng(seed);
    int rejected = 0;
    for (int i = 0; i < trials; ++i) {
        std::string m = bytes;
        const std::size_t bit = rng() % (m.size() * 8);
        m[bit / 8] = static_cast<char>(m[bit / 8] ^ (1 << (bit % 8)));
        if (!verify_chain_bytes(m, base.policy, t).passed()) ++rejected;
        else ADD_FAILURE() << "flip at bit " << bit << " passed";
    }
    EXPECT_EQ(rejected, trials);
}

TEST(Verifier, TamperTotalityEhr) { bit_flip_campaign(baseline("train-ehr"), 1500, 11); }
TEST(Verifier, TamperTotalityLoan) { bit_flip_campaign(baseline("infer-loan"), 1500, 12); }

TEST(Verifier, SemanticFieldFlipsOnDecodedChain) {
    // Flip bits inside hex digests and signatures specifically, then
    // re-encode canonically (so the decode check never masks a verifier gap).
    const ScenarioResult& base = baseline("infer-loan");
    const Doc doc = base.chain->to_doc();
    std::vector<std::vector<std::string>> paths;
    std::function<void(const Doc&, std::vector<std::string>)> walk = [&](const Doc& d, std::vector<std::string> p) {
        if (d.is_string() && d.as_string().size() >= 64) paths.push_back(p);
        if (d.is_object())
            for (const auto& [k, v] : d.as_object()) {
                auto q = p;
                q.push_back(k);
                walk(v, q);
            }
        if (d.is_array())
            for (std::size_t i = 0; i < d.as_array().size(); ++i) {
                auto q = p;
                q.push_back("#" + std::to_string(i));
                walk(d.as_array()[i], q);
            }
    };
    walk(doc, {});
    ASSERT_GT(paths.size(), 20u);
    std::mt19937_64 rng(99);
    for (const auto& path : paths) {
        Doc m = doc;
        Doc* cur = &m;
        for (const auto& k : path)
            cur = k[0] == '#' ? &cur->as_array()[std::stoul(k.substr(1))] : cur->find(k);
        std::string s = cur->as_string();
        const std::size_t pos = rng() % s.size();
        s[pos] = s[pos] == '0' ? '1' : '0';
        *cur = Doc(s);
        const VerificationReport rep =
            verify_chain_bytes(canonical_encode(m), base.policy, now_for(*base.chain));
        std::string where;
        for (const auto& k : path) where += "/" + k;
        EXPECT_FALSE(rep.passed()) << where;
    }
}

TEST(Verifier, PrivacyBoundaryOnVerifierInput) {
    const ScenarioResult& ehr = baseline("train-ehr");
    const std::string input = ehr.chain->canonical() + canonical_encode(ehr.policy.to_doc());
    for (const char* k : {"name", "address"}) {
        const std::string& secret = testing::ehr_fixture().at(k).as_string();
        EXPECT_EQ(input.find(secret), std::string::npos) << k;
    }
    EXPECT_NE(input.find(std::string(kRedactedMarker)), std::string::npos);
}

TEST(Verifier, PolicyMonotonicity) {
    // Candidate chains: both baselines plus attacked variants.
    std::vector<std::pair<PropChain, VerifierPolicy>> cases;
    for (const char* name : {"train-ehr", "infer-loan"}) cases.emplace_back(*baseline(name).chain, baseline(name).policy);
    const ScenarioConfig loan = ScenarioConfig::from_doc(testing::load_config("infer-loan.json"));
    for (const char* a : {"swap-model", "forge-sig"}) {
        RunOptions o;
        o.attack = AttackPlan::parse(a);
        const ScenarioResult r = run_scenario(loan, o);
        cases.emplace_back(*r.chain, r.policy);
    }
    std::mt19937_64 rng(5);
    for (const auto& [chain, policy] : cases) {
        const UnixSeconds t = now_for(chain);
        const bool base_pass = verify_chain(chain, policy, t).passed();
        for (int trial = 0; trial < 60; ++trial) {
            VerifierPolicy p = policy;
            auto drop = [&](auto& container) {
                if (container.empty() || rng() % 2) return;
                auto it = container.begin();
                std::advance(it, rng() % container.size());
                container.erase(it);
            };
            drop(p.trusted_attestors);
            drop(p.trusted_sources);
            drop(p.filter_whitelist);
            drop(p.model.trusted_executors);
            const bool shrunk_pass = verify_chain(chain, p, t).passed();
            EXPECT_FALSE(shrunk_pass && !base_pass);
            if (shrunk_pass) EXPECT_TRUE(base_pass);
        }
    }
}

TEST(Verifier, ConcurrentVerificationAgrees) {
    const ScenarioResult& loan = baseline("infer-loan");
    const VerificationReport want = verify_chain(*loan.chain, loan.policy, now_for(*loan.chain));
    std::vector<std::thread> ts;
    std::atomic<int> mismatches{0};
    for (int i = 0; i < 8; ++i)
        ts.emplace_back([&] {
            for (int j = 0; j < 10; ++j)
                if (!(verify_chain(*loan.chain, loan.policy, now_for(*loan.chain)) == want)) ++mismatches;
        });
    for (auto& t : ts) t.join();
    EXPECT_EQ(mismatches.load(), 0);
}

}  // namespace
}  // namespace props
