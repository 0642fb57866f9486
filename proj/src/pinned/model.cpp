#include "props/pinned/model.hpp"

#include "props/core/error.hpp"
#include "props/core/path.hpp"

namespace props {

namespace {

Array string_array(const std::vector<std::string>& v) {
    Array a;
    for (const auto& s : v) a.emplace_back(s);
    return a;
}

std::vector<std::string> read_strings(const Array& a, const char* what) {
    std::vector<std::string> out;
    for (const Doc& d : a) {
        if (!d.is_string()) throw Error(Errc::Malformed, std::string(what) + ": expected strings");
        out.push_back(d.as_string());
    }
    return out;
}

Doc fixed_array(const std::vector<Fixed>& v) {
    Array a;
    for (Fixed f : v) a.emplace_back(f.raw);
    return Doc(std::move(a));
}

}  // namespace

Doc EnvDescriptor::to_doc() const {
    Array pre;
    for (const auto& s : preprocessing) pre.push_back(s.to_doc());
    return Doc{{"arithmetic", arithmetic},
               {"env_version", env_version},
               {"feature_paths", string_array(feature_paths)},
               {"preprocessing", std::move(pre)},
               {"tie_rule", tie_rule}};
}

EnvDescriptor EnvDescriptor::from_doc(const Doc& doc) {
    ObjectReader r(doc, "env");
    EnvDescriptor e;
    e.arithmetic = r.string("arithmetic");
    e.env_version = r.string("env_version");
    e.feature_paths = read_strings(r.array("feature_paths"), "feature_paths");
    for (const Doc& d : r.array("preprocessing")) {
        FilterSpec s = FilterSpec::from_doc(d);
        if (!s.digest_consistent()) throw Error(Errc::Malformed, "env: preprocessing spec digest mismatch");
        e.preprocessing.push_back(std::move(s));
    }
    e.tie_rule = r.string("tie_rule");
    r.finish();
    if (e.arithmetic != kArithmeticTag) throw Error(Errc::Malformed, "env: unsupported arithmetic " + e.arithmetic);
    if (e.tie_rule != kTieRuleTag) throw Error(Errc::Malformed, "env: unsupported tie rule " + e.tie_rule);
    return e;
}

EnvDescriptor EnvDescriptor::from_config(const Doc& doc) {
    ObjectReader r(doc, "env config");
    EnvDescriptor e;
    e.env_version = r.string("env_version");
    e.feature_paths = read_strings(r.array("feature_paths"), "feature_paths");
    if (const Doc* pre = r.optional("preprocessing"))
        for (const Doc& d : pre->as_array()) e.preprocessing.push_back(FilterSpec::from_config(d));
    r.finish();
    for (const auto& p : e.feature_paths) ContentPath::parse(p);
    return e;
}

Doc ModelWeights::to_doc() const {
    return Doc{{"bias", bias.raw}, {"threshold", threshold.raw}, {"weights", fixed_array(weights)}};
}

ModelWeights ModelWeights::from_doc(const Doc& doc) {
    ObjectReader r(doc, "weights");
    ModelWeights w;
    w.bias.raw = r.int64("bias");
    w.threshold.raw = r.int64("threshold");
    for (const Doc& d : r.array("weights")) w.weights.push_back(Fixed{d.as_int()});
    r.finish();
    return w;
}

ModelWeights ModelWeights::from_config(const Doc& doc) {
    ObjectReader r(doc, "weights config");
    ModelWeights w;
    w.bias = Fixed::from_decimal(r.string("bias"));
    w.threshold = Fixed::from_decimal(r.string("threshold"));
    for (const auto& s : read_strings(r.array("weights"), "weights")) w.weights.push_back(Fixed::from_decimal(s));
    r.finish();
    return w;
}

PinnedModel PinnedModel::from_config(const Doc& doc) {
    ObjectReader r(doc, "model config");
    PinnedModel m{EnvDescriptor::from_config(r.get("env")), ModelWeights::from_config(r.get("weights"))};
    r.finish();
    return m;
}

std::string_view to_string(ModelKind k) noexcept { return k == ModelKind::Exact ? "exact" : "service-ref"; }

ModelSpec ModelSpec::service_ref(std::string id) {
    ModelSpec s;
    s.kind = ModelKind::ServiceRef;
    s.service_id = std::move(id);
    s.pinned_digest = s.compute_digest();
    return s;
}

Doc ModelSpec::body_doc() const {
    if (kind == ModelKind::ServiceRef) return Doc{{"kind", "service-ref"}, {"service_id", service_id.value_or("")}};
    return Doc{{"env", env ? env->to_doc() : Doc()},
               {"kind", "exact"},
               {"weights_digest", weights_digest ? weights_digest->hex() : ""}};
}

Doc ModelSpec::to_doc() const {
    Doc d = body_doc();
    d.set("pinned_digest", pinned_digest.hex());
    return d;
}

ModelSpec ModelSpec::from_doc(const Doc& doc) {
    ObjectReader r(doc, "model spec");
    ModelSpec s;
    const std::string& kind = r.string("kind");
    if (kind == "exact") {
        s.kind = ModelKind::Exact;
        s.env = EnvDescriptor::from_doc(r.get("env"));
        s.weights_digest = Digest::from_hex(r.string("weights_digest"));
    } else if (kind == "service-ref") {
        s.kind = ModelKind::ServiceRef;
        s.service_id = r.string("service_id");
    } else {
        throw Error(Errc::Malformed, "model spec: unknown kind " + kind);
    }
    s.pinned_digest = Digest::from_hex(r.string("pinned_digest"));
    r.finish();
    return s;
}

ModelSpec pin_model(const EnvDescriptor& env, const ModelWeights& weights) {
    if (weights.weights.size() != env.feature_paths.size())
        throw Error(Errc::LengthMismatch, std::to_string(weights.weights.size()) + " weights for " +
                                              std::to_string(env.feature_paths.size()) + " features");
    ModelSpec s;
    s.kind = ModelKind::Exact;
    s.env = env;
    s.weights_digest = weights.digest();
    s.pinned_digest = s.compute_digest();
    return s;
}

std::string_view to_string(Decision d) noexcept { return d == Decision::Approve ? "approve" : "deny"; }

Doc InferenceOutput::to_doc() const {
    return Doc{{"decision", std::string(to_string(decision))}, {"score", score.raw}};
}

InferenceOutput InferenceOutput::from_doc(const Doc& doc) {
    ObjectReader r(doc, "inference output");
    InferenceOutput y;
    const std::string& d = r.string("decision");
    if (d == "approve")
        y.decision = Decision::Approve;
    else if (d == "deny")
        y.decision = Decision::Deny;
    else
        throw Error(Errc::Malformed, "inference output: decision " + d);
    y.score.raw = r.int64("score");
    r.finish();
    return y;
}

std::vector<Fixed> extract_features(const EnvDescriptor& env, const DataRecord& input, const ExecOptions& opts) {
    DataRecord x = input;
    for (const auto& spec : env.preprocessing) {
        try {
            x = apply_filter(spec, x);
        } catch (const Error& e) {
            if (e.code() == Errc::PathError || e.code() == Errc::PathTypeMismatch)
                throw Error(Errc::FeaturePathError, e.what());
            throw;
        }
    }
    std::vector<Fixed> out;
    for (const auto& p : env.feature_paths) {
        const Doc* v = resolve(x.content, ContentPath::parse(p));
        if (!v) throw Error(Errc::FeaturePathError, "feature '" + p + "' is missing");
        if (v->is_string()) {
            try {
                out.push_back(Fixed::from_decimal(v->as_string()));
            } catch (const Error& e) {
                throw Error(Errc::FeaturePathError, "feature '" + p + "': " + e.what());
            }
            continue;
        }
        if (!v->is_int()) throw Error(Errc::FeaturePathError, "feature '" + p + "' is not a number");
        Clamped c = fixed_from_int(v->as_int());
        if (c.saturated && opts.strict) throw Error(Errc::Overflow, "feature '" + p + "' exceeds the Q32.32 range");
        out.push_back(c.value);
    }
    return out;
}

InferenceOutput run_model(const PinnedModel& model, const DataRecord& input, const ExecOptions& opts) {
    const auto& w = model.weights;
    if (w.weights.size() != model.env.feature_paths.size())
        throw Error(Errc::LengthMismatch, "weights and feature paths differ in length");
    std::vector<Fixed> x = extract_features(model.env, input, opts);
    __int128 acc = w.bias.raw;
    for (std::size_t i = 0; i < x.size(); ++i) acc += mul_rne_wide(w.weights[i], x[i]);
    Clamped score = saturate(acc);
    if (score.saturated && opts.strict) throw Error(Errc::Overflow, "score exceeds the Q32.32 range");
    return InferenceOutput{score.value >= w.threshold ? Decision::Approve : Decision::Deny, score.value};
}

InferenceOutput execute_pinned(const ModelSpec& spec, const PinnedModel& model, const DataRecord& input,
                               const ExecOptions& opts) {
    if (spec.kind != ModelKind::Exact) throw Error(Errc::NotReplicable, "service-ref specs cannot be replayed");
    if (pin_model(model.env, model.weights).pinned_digest != spec.pinned_digest ||
        spec.compute_digest() != spec.pinned_digest)
        throw Error(Errc::PinMismatch, "model does not match pinned digest " + spec.pinned_digest.hex());
    return run_model(model, input, opts);
}

std::string_view to_string(ProofMode m) noexcept { return m == ProofMode::TeeSim ? "tee-sim" : "committee"; }

Doc inference_triple(const Digest& pinned, const Digest& input, const Digest& output) {
    return Doc{{"input_digest", input.hex()}, {"output_digest", output.hex()}, {"pinned_digest", pinned.hex()}};
}

Doc InferenceProof::triple_doc() const { return inference_triple(pinned_digest, input_digest, output_digest); }

Doc InferenceProof::to_doc() const {
    Array sigs;
    for (const auto& s : signatures)
        sigs.push_back(Doc{{"identity", s.identity.to_doc()}, {"signature", s.signature.hex()}});
    Doc d = triple_doc();
    d.set("executed_at", executed_at);
    d.set("mode", std::string(to_string(mode)));
    d.set("signatures", std::move(sigs));
    return d;
}

InferenceProof InferenceProof::from_doc(const Doc& doc) {
    ObjectReader r(doc, "inference proof");
    InferenceProof p;
    p.executed_at = r.int64("executed_at");
    p.input_digest = Digest::from_hex(r.string("input_digest"));
    const std::string& mode = r.string("mode");
    if (mode == "tee-sim")
        p.mode = ProofMode::TeeSim;
    else if (mode == "committee")
        p.mode = ProofMode::Committee;
    else
        throw Error(Errc::Malformed, "inference proof: mode " + mode);
    p.output_digest = Digest::from_hex(r.string("output_digest"));
    p.pinned_digest = Digest::from_hex(r.string("pinned_digest"));
    for (const Doc& s : r.array("signatures")) {
        ObjectReader sr(s, "executor signature");
        ExecutorSignature es{KeyIdentity::from_doc(sr.get("identity")), Signature::from_hex(sr.string("signature"))};
        sr.finish();
        p.signatures.push_back(std::move(es));
    }
    r.finish();
    return p;
}

Signature sign_inference(const SigningKey& key, const Digest& pinned, const Digest& input, const Digest& output) {
    return key.sign(DomainTag::Inference, as_bytes(canonical_encode(inference_triple(pinned, input, output))));
}

bool signature_valid(const InferenceProof& proof, const ExecutorSignature& sig) {
    return sig.identity.well_formed() &&
           verify_sig(sig.identity, DomainTag::Inference, as_bytes(canonical_encode(proof.triple_doc())),
                      sig.signature);
}

namespace {

InferenceProof single_signed(const SigningKey& key, const Digest& pinned, const Digest& input,
                             const InferenceOutput& output, UnixSeconds executed_at) {
    if (key.role() != Role::Executor) throw Error(Errc::UnknownKey, "inference proofs need an executor key");
    InferenceProof p;
    p.pinned_digest = pinned;
    p.input_digest = input;
    p.output_digest = output.digest();
    p.executed_at = executed_at;
    p.mode = ProofMode::TeeSim;
    p.signatures.push_back({key.identity(), sign_inference(key, pinned, input, p.output_digest)});
    return p;
}

}  // namespace

InferenceProof attest_inference(const SigningKey& executor_key, const ModelSpec& spec, const PinnedModel& model,
                                const DataRecord& input, const InferenceOutput& output, UnixSeconds executed_at) {
    if (execute_pinned(spec, model, input) != output)
        throw Error(Errc::OutputMismatch, "claimed output differs from pinned execution");
    return single_signed(executor_key, spec.pinned_digest, input.digest(), output, executed_at);
}

void ServiceRegistry::add(std::string service_id, KeyIdentity operator_identity, PinnedModel model) {
    services_[std::move(service_id)] = Entry{std::move(operator_identity), std::move(model)};
}

bool ServiceRegistry::contains(const std::string& service_id) const { return services_.count(service_id) != 0; }

const KeyIdentity& ServiceRegistry::operator_of(const std::string& service_id) const {
    auto it = services_.find(service_id);
    if (it == services_.end()) throw Error(Errc::UnknownService, "no service '" + service_id + "'");
    return it->second.operator_identity;
}

InferenceOutput ServiceRegistry::invoke(const std::string& service_id, const DataRecord& input) const {
    auto it = services_.find(service_id);
    if (it == services_.end()) throw Error(Errc::UnknownService, "no service '" + service_id + "'");
    return run_model(it->second.model, input);
}

InferenceProof attest_service_ref(const SigningKey& executor_key, const ServiceRegistry& registry,
                                  const std::string& service_id, const DataRecord& input,
                                  const InferenceOutput& output, UnixSeconds executed_at) {
    if (registry.operator_of(service_id) != executor_key.identity())
        throw Error(Errc::UnknownService, "executor does not operate '" + service_id + "'");
    if (registry.invoke(service_id, input) != output)
        throw Error(Errc::OutputMismatch, "claimed output differs from the service's answer");
    return single_signed(executor_key, ModelSpec::service_ref(service_id).pinned_digest, input.digest(), output,
                         executed_at);
}

Reason verify_inference_proof(const InferenceProof& proof, const Digest& expected_pinned,
                              const TrustSet& trusted_executors) {
    if (proof.pinned_digest != expected_pinned) return Reason::PinMismatch;
    if (proof.mode != ProofMode::TeeSim || proof.signatures.size() != 1) return Reason::Malformed;
    const ExecutorSignature& sig = proof.signatures.front();
    if (sig.identity.role != Role::Executor || !sig.identity.well_formed()) return Reason::Malformed;
    if (!signature_valid(proof, sig)) return Reason::BadSignature;
    if (!trusted(trusted_executors, sig.identity)) return Reason::UntrustedExecutor;
    return Reason::Ok;
}

}  // namespace props
