#include <gtest/gtest.h>

#include <random>

#include "props/core/error.hpp"
#include "props/pinned/model.hpp"
#include "rational_oracle.hpp"
#include "test_support.hpp"

namespace props {
namespace {

Errc error_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return Errc::IoError;
}

DataRecord record_with(Doc content) { return DataRecord{"bigbank", "bob", std::move(content), "application/json", 1}; }

PinnedModel linear(std::vector<std::string> paths, std::vector<Fixed> w, Fixed bias, Fixed threshold) {
    PinnedModel m;
    m.env.env_version = "test@1";
    m.env.feature_paths = std::move(paths);
    m.weights = ModelWeights{std::move(w), bias, threshold};
    return m;
}

Fixed dec(const char* s) { return Fixed::from_decimal(s); }

PinnedModel loan_model() { return PinnedModel::from_config(testing::load_config("infer-loan.json").at("model")); }

DataRecord loan_features() {
    return record_with(Doc{{"debt_total", 1400}, {"income_monthly", 5200}, {"missed_payments", 1}, {"months_employed", 48}});
}

TEST(Fixed, DecimalExamples) {
    EXPECT_EQ(dec("1").raw, Fixed::kOne);
    EXPECT_EQ(dec("1.0").raw, Fixed::kOne);
    EXPECT_EQ(dec("-0.5").raw, -Fixed::kOne / 2);
    EXPECT_EQ(dec("0.0000000002328306436538696289062500").raw, 1);
    EXPECT_EQ(dec("-2147483648").raw, INT64_MIN);
    EXPECT_EQ(dec("2147483647.99999999976716935634613037109375").raw, INT64_MAX);
    EXPECT_EQ(Fixed{INT64_MAX}.to_decimal(), "2147483647.99999999976716935634613037109375");
    EXPECT_EQ(Fixed{-Fixed::kOne * 7}.to_decimal(), "-7");
    EXPECT_EQ(Fixed{1}.to_decimal(), "0.00000000023283064365386962890625");
}

TEST(Fixed, InexactAndMalformed) {
    for (const char* s : {"0.1", "0.3", "2147483648", "-2147483648.5", "0.000000000116415321826934814453125",
                          "99999999999999999999999"})
        EXPECT_EQ(error_of([&] { dec(s); }), Errc::InexactConversion) << s;
    for (const char* s : {"", "-", "1.", ".5", "1e3", "+1", "1.2.3", " 1", "0x10"})
        EXPECT_EQ(error_of([&] { dec(s); }), Errc::Malformed) << s;
}

TEST(Fixed, DecimalRoundTripMatchesOracle) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 5000; ++i) {
        std::int64_t raw = static_cast<std::int64_t>(rng()) >> (rng() % 63);
        std::string s = Fixed{raw}.to_decimal();
        EXPECT_EQ(dec(s.c_str()).raw, raw) << s;
        oracle::cpp_int units;
        ASSERT_TRUE(oracle::decimal_units(s, units)) << s;
        EXPECT_EQ(units, oracle::cpp_int(raw)) << s;
    }
}

TEST(Fixed, RandomDecimalsAgreeWithOracleOnExactness) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 3000; ++i) {
        std::string s = (rng() & 1) ? "-" : "";
        s += std::to_string(rng() % 5000000000ULL);
        int frac = static_cast<int>(rng() % 12);
        if (frac) {
            s += '.';
            for (int k = 0; k < frac; ++k) s += static_cast<char>('0' + rng() % 10);
        }
        oracle::cpp_int units;
        if (oracle::decimal_units(s, units)) {
            EXPECT_EQ(oracle::cpp_int(dec(s.c_str()).raw), units) << s;
        } else {
            EXPECT_EQ(error_of([&] { dec(s.c_str()); }), Errc::InexactConversion) << s;
        }
    }
}

TEST(Fixed, MultiplyMatchesOracle) {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 20000; ++i) {
        Fixed a{static_cast<std::int64_t>(rng()) >> (rng() % 63)};
        Fixed b{static_cast<std::int64_t>(rng()) >> (rng() % 63)};
        if (i % 7 == 0) b.raw = (b.raw >> 40) * 2 + 1;  // odd low bits exercise ties
        oracle::cpp_int want = oracle::round_rne_units(oracle::from_raw(a.raw) * oracle::from_raw(b.raw));
        EXPECT_EQ(oracle::cpp_int(static_cast<long long>(mul(a, b).value.raw)),
                  oracle::cpp_int(oracle::clamp_units(want)));
    }
}

TEST(Fixed, TiesRoundToEven) {
    // 0.5 ulp and 1.5 ulp products.
    Fixed half_ulp_a{1}, half{Fixed::kOne / 2};
    EXPECT_EQ(mul(half_ulp_a, half).value.raw, 0);
    EXPECT_EQ(mul(Fixed{3}, half).value.raw, 2);
    EXPECT_EQ(mul(Fixed{-1}, half).value.raw, 0);
    EXPECT_EQ(mul(Fixed{-3}, half).value.raw, -2);
    EXPECT_EQ(mul(Fixed{5}, half).value.raw, 2);
}

TEST(PinModel, DeterministicAndLengthChecked) {
    PinnedModel m = loan_model();
    EXPECT_EQ(pin_model(m.env, m.weights).pinned_digest, pin_model(m.env, m.weights).pinned_digest);
    ModelWeights bad = m.weights;
    bad.weights.pop_back();
    EXPECT_EQ(error_of([&] { pin_model(m.env, bad); }), Errc::LengthMismatch);
}

TEST(PinModel, EverySingleFieldPerturbationChangesDigest) {
    PinnedModel m = loan_model();
    const Digest base = pin_model(m.env, m.weights).pinned_digest;
    std::vector<std::function<void(PinnedModel&)>> edits = {
        [](PinnedModel& p) { p.weights.bias.raw += 1; },
        [](PinnedModel& p) { p.weights.threshold.raw -= 1; },
        [](PinnedModel& p) { p.weights.weights[2].raw ^= 1; },
        [](PinnedModel& p) { std::swap(p.weights.weights[0], p.weights.weights[1]); },
        [](PinnedModel& p) { p.env.env_version += "x"; },
        [](PinnedModel& p) { std::swap(p.env.feature_paths[0], p.env.feature_paths[1]); },
        [](PinnedModel& p) { p.env.feature_paths[3] = "missed"; },
        [](PinnedModel& p) { p.env.preprocessing.clear(); },
        [](PinnedModel& p) {
            p.env.preprocessing[0] = FilterSpec::make("bucket-missed@1", FilterKind::Bucketize,
                                                      Doc{{"boundaries", Array{Doc(1), Doc(4)}}, {"path", "missed_payments"}});
        },
        [](PinnedModel& p) { p.env.arithmetic = "q16.16"; },
        [](PinnedModel& p) { p.env.tie_rule = "score>threshold"; },
    };
    for (std::size_t i = 0; i < edits.size(); ++i) {
        PinnedModel q = m;
        edits[i](q);
        EXPECT_NE(pin_model(q.env, q.weights).pinned_digest, base) << "edit " << i;
    }
}

TEST(PinModel, SpecRoundTrip) {
    PinnedModel m = loan_model();
    ModelSpec s = pin_model(m.env, m.weights);
    ModelSpec back = ModelSpec::from_doc(canonical_decode_strict(canonical_encode(s.to_doc())));
    EXPECT_EQ(back, s);
    EXPECT_EQ(back.compute_digest(), s.pinned_digest);
    ModelSpec ref = ModelSpec::service_ref("privaloan-scoring");
    EXPECT_EQ(ModelSpec::from_doc(ref.to_doc()), ref);
    EXPECT_EQ(ModelWeights::from_doc(m.weights.to_doc()), m.weights);
}

TEST(PinModel, UnknownEnvTagsRejected) {
    PinnedModel m = loan_model();
    Doc d = m.env.to_doc();
    d.set("tie_rule", "score>threshold");
    EXPECT_EQ(error_of([&] { EnvDescriptor::from_doc(d); }), Errc::Malformed);
}

TEST(Execute, TieCaseApproves) {
    PinnedModel m = linear({"a", "b"}, {Fixed{}, Fixed{}}, Fixed{}, Fixed{});
    ModelSpec s = pin_model(m.env, m.weights);
    InferenceOutput y = execute_pinned(s, m, record_with(Doc{{"a", 3}, {"b", -9}}));
    EXPECT_EQ(y.score.raw, 0);
    EXPECT_EQ(y.decision, Decision::Approve);
}

TEST(Execute, ExactIntegerExample) {
    PinnedModel m = linear({"a", "b"}, {dec("1.0"), dec("-0.5")}, dec("-7.0"), Fixed{});
    InferenceOutput y = execute_pinned(pin_model(m.env, m.weights), m, record_with(Doc{{"a", 10}, {"b", 4}}));
    EXPECT_EQ(y.score, dec("1.0"));
    EXPECT_EQ(y.decision, Decision::Approve);
}

TEST(Execute, LoanScenarioModel) {
    PinnedModel m = loan_model();
    InferenceOutput y = execute_pinned(pin_model(m.env, m.weights), m, loan_features());
    EXPECT_EQ(y.score.to_decimal(), "0.59375");
    EXPECT_EQ(y.decision, Decision::Approve);
}

TEST(Execute, FeatureErrors) {
    PinnedModel m = linear({"a", "b"}, {dec("1"), dec("1")}, Fixed{}, Fixed{});
    ModelSpec s = pin_model(m.env, m.weights);
    EXPECT_EQ(error_of([&] { execute_pinned(s, m, record_with(Doc{{"a", 1}})); }), Errc::FeaturePathError);
    for (Doc bad : {Doc("0.1"), Doc("two"), Doc(true), Doc("1e3"), Doc("99999999999")})
        EXPECT_EQ(error_of([&] { execute_pinned(s, m, record_with(Doc{{"a", 1}, {"b", bad}})); }),
                  Errc::FeaturePathError);
    EXPECT_EQ(execute_pinned(s, m, record_with(Doc{{"a", 1}, {"b", "2.25"}})).score, dec("3.25"));
    PinnedModel loan = loan_model();
    DataRecord no_missed = record_with(Doc{{"debt_total", 1}, {"income_monthly", 1}, {"months_employed", 1}});
    EXPECT_EQ(error_of([&] { execute_pinned(pin_model(loan.env, loan.weights), loan, no_missed); }),
              Errc::FeaturePathError);
}

TEST(Execute, DecimalFeaturesRoundHalfToEven) {
    // A raw weight w times feature 0.5 is w/2 units, so odd w hits a tie.
    for (std::int64_t w : {1, 3, 5, -1, -3, 7, -7}) {
        PinnedModel m = linear({"x"}, {Fixed::from_raw(w)}, Fixed{}, Fixed{});
        const InferenceOutput y = execute_pinned(pin_model(m.env, m.weights), m, record_with(Doc{{"x", "0.5"}}));
        EXPECT_EQ(y.score.raw, oracle::score_q({w}, {Fixed::kOne / 2}, 0, 0).score_raw) << w;
    }
    EXPECT_EQ(oracle::dyadic_decimal(-3, 2), "-0.75");
    EXPECT_EQ(oracle::dyadic_decimal(5, 0), "5");
    std::mt19937_64 rng(21);
    for (int i = 0; i < 2000; ++i) {
        const std::int64_t w = static_cast<std::int64_t>(rng() >> 20) - (std::int64_t(1) << 43);
        const std::int64_t n = static_cast<std::int64_t>(rng() % 2000001) - 1000000;
        const unsigned k = static_cast<unsigned>(rng() % 21);
        PinnedModel m = linear({"x"}, {Fixed::from_raw(w)}, Fixed{}, Fixed{});
        const DataRecord rec = record_with(Doc{{"x", oracle::dyadic_decimal(n, k)}});
        const InferenceOutput y = execute_pinned(pin_model(m.env, m.weights), m, rec);
        const std::int64_t x_raw = n * (std::int64_t(1) << (32 - k));
        EXPECT_EQ(y.score.raw, oracle::score_q({w}, {x_raw}, 0, 0).score_raw) << w << " " << n << "/2^" << k;
    }
}

TEST(Execute, SaturationAndStrictMode) {
    PinnedModel m = linear({"a"}, {dec("1000000")}, Fixed{}, Fixed{});
    ModelSpec s = pin_model(m.env, m.weights);
    DataRecord big = record_with(Doc{{"a", 1000000}});
    EXPECT_EQ(execute_pinned(s, m, big).score.raw, INT64_MAX);
    EXPECT_EQ(error_of([&] { execute_pinned(s, m, big, {true}); }), Errc::Overflow);
    DataRecord huge = record_with(Doc{{"a", std::int64_t{1} << 40}});
    EXPECT_EQ(error_of([&] { execute_pinned(s, m, huge, {true}); }), Errc::Overflow);
    EXPECT_NO_THROW(execute_pinned(s, m, record_with(Doc{{"a", 2}}), {true}));
}

TEST(Execute, PinAndKindChecked) {
    PinnedModel m = loan_model();
    ModelSpec s = pin_model(m.env, m.weights);
    PinnedModel other = m;
    other.weights.bias.raw += 1;
    EXPECT_EQ(error_of([&] { execute_pinned(s, other, loan_features()); }), Errc::PinMismatch);
    EXPECT_EQ(error_of([&] { execute_pinned(ModelSpec::service_ref("x"), m, loan_features()); }),
              Errc::NotReplicable);
}

TEST(Execute, RandomizedAgainstRationalOracle) {
    std::mt19937_64 rng(11);
    int saturated = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t n = 1 + rng() % 6;
        std::vector<std::string> paths;
        std::vector<Fixed> w;
        std::vector<std::int64_t> wraw, feats;
        Doc content = Doc::object();
        for (std::size_t i = 0; i < n; ++i) {
            paths.push_back("f" + std::to_string(i));
            std::int64_t r = static_cast<std::int64_t>(rng()) >> (rng() % 64);
            w.push_back(Fixed{r});
            wraw.push_back(r);
            std::int64_t f = static_cast<std::int64_t>(rng()) >> (rng() % 64);
            feats.push_back(f);
            content.set(paths.back(), f);
        }
        std::int64_t bias = static_cast<std::int64_t>(rng()) >> (rng() % 64);
        std::int64_t thr = static_cast<std::int64_t>(rng()) >> (rng() % 64);
        PinnedModel m = linear(paths, w, Fixed{bias}, Fixed{thr});
        InferenceOutput y = execute_pinned(pin_model(m.env, m.weights), m, record_with(content));
        oracle::Result want = oracle::score(wraw, feats, bias, thr);
        ASSERT_EQ(y.score.raw, want.score_raw) << "trial " << trial;
        ASSERT_EQ(y.decision == Decision::Approve, want.approve) << "trial " << trial;
        if (want.score_raw == INT64_MAX || want.score_raw == INT64_MIN) ++saturated;
    }
    EXPECT_GT(saturated, 0);  // the campaign reaches the clamp
}

TEST(Execute, IndependentInstancesAgreeBitwise) {
    PinnedModel m = loan_model();
    ModelSpec s = pin_model(m.env, m.weights);
    // Second executor rebuilt purely from serialized form.
    PinnedModel m2{EnvDescriptor::from_doc(canonical_decode(canonical_encode(m.env.to_doc()))),
                   ModelWeights::from_doc(canonical_decode(canonical_encode(m.weights.to_doc())))};
    ModelSpec s2 = ModelSpec::from_doc(s.to_doc());
    EXPECT_EQ(canonical_encode(execute_pinned(s, m, loan_features()).to_doc()),
              canonical_encode(execute_pinned(s2, m2, loan_features()).to_doc()));
}

struct InferenceFixture : ::testing::Test {
    SigningKey exec = keygen(Role::Executor);
    PinnedModel model = loan_model();
    ModelSpec spec = pin_model(model.env, model.weights);
    DataRecord x = loan_features();
};

TEST_F(InferenceFixture, HonestProofVerifies) {
    InferenceOutput y = execute_pinned(spec, model, x);
    InferenceProof p = attest_inference(exec, spec, model, x, y, 1700000000);
    EXPECT_EQ(verify_inference_proof(p, spec.pinned_digest, {exec.identity()}), Reason::Ok);
    EXPECT_EQ(p.input_digest, x.digest());
    EXPECT_EQ(p.output_digest, y.digest());
    EXPECT_EQ(InferenceProof::from_doc(canonical_decode_strict(canonical_encode(p.to_doc()))), p);
}

TEST_F(InferenceFixture, ForgedOutputRejected) {
    InferenceOutput y = execute_pinned(spec, model, x);
    y.decision = y.decision == Decision::Approve ? Decision::Deny : Decision::Approve;
    EXPECT_EQ(error_of([&] { attest_inference(exec, spec, model, x, y); }), Errc::OutputMismatch);
}

TEST_F(InferenceFixture, SubstitutedPinFailsDownstream) {
    InferenceProof p = attest_inference(exec, spec, model, x, execute_pinned(spec, model, x));
    PinnedModel other = model;
    other.weights.threshold.raw += 1;
    const Digest other_pin = pin_model(other.env, other.weights).pinned_digest;
    InferenceProof replay = p;
    replay.pinned_digest = other_pin;
    EXPECT_EQ(verify_inference_proof(replay, other_pin, {exec.identity()}), Reason::BadSignature);
    EXPECT_EQ(verify_inference_proof(p, other_pin, {exec.identity()}), Reason::PinMismatch);
}

TEST_F(InferenceFixture, UntrustedAndMalformed) {
    InferenceProof p = attest_inference(exec, spec, model, x, execute_pinned(spec, model, x));
    EXPECT_EQ(verify_inference_proof(p, spec.pinned_digest, {keygen(Role::Executor).identity()}),
              Reason::UntrustedExecutor);
    InferenceProof two = p;
    two.signatures.push_back(p.signatures[0]);
    EXPECT_EQ(verify_inference_proof(two, spec.pinned_digest, {exec.identity()}), Reason::Malformed);
    EXPECT_EQ(error_of([&] { attest_inference(keygen(Role::Attestor), spec, model, x, execute_pinned(spec, model, x)); }),
              Errc::UnknownKey);
}

TEST_F(InferenceFixture, ServiceRefProofs) {
    ServiceRegistry reg;
    reg.add("privaloan-scoring", exec.identity(), model);
    InferenceOutput y = reg.invoke("privaloan-scoring", x);
    InferenceProof p = attest_service_ref(exec, reg, "privaloan-scoring", x, y);
    const Digest ref_pin = ModelSpec::service_ref("privaloan-scoring").pinned_digest;
    EXPECT_EQ(verify_inference_proof(p, ref_pin, {exec.identity()}), Reason::Ok);
    // An Exact expectation cannot be met by a service proof.
    EXPECT_EQ(verify_inference_proof(p, spec.pinned_digest, {exec.identity()}), Reason::PinMismatch);
    // Nothing about E or M is carried.
    std::string enc = canonical_encode(p.to_doc());
    EXPECT_EQ(enc.find(spec.weights_digest->hex()), std::string::npos);
    EXPECT_EQ(enc.find(spec.pinned_digest.hex()), std::string::npos);
    EXPECT_EQ(enc.find("privaloan-linear"), std::string::npos);

    EXPECT_EQ(error_of([&] { attest_service_ref(exec, reg, "unregistered", x, y); }), Errc::UnknownService);
    EXPECT_EQ(error_of([&] { attest_service_ref(keygen(Role::Executor), reg, "privaloan-scoring", x, y); }),
              Errc::UnknownService);
    InferenceOutput wrong = y;
    wrong.score.raw += 1;
    EXPECT_EQ(error_of([&] { attest_service_ref(exec, reg, "privaloan-scoring", x, wrong); }), Errc::OutputMismatch);
}

TEST(ModelConfig, InexactWeightRejected) {
    Doc cfg = testing::load_config("infer-loan.json").at("model");
    cfg.as_object().at("weights").as_object().at("weights").as_array()[0] = Doc("0.001");
    EXPECT_EQ(error_of([&] { PinnedModel::from_config(cfg); }), Errc::InexactConversion);
}

}  // namespace
}  // namespace props
