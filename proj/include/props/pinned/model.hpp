#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "props/attest/attestation.hpp"
#include "props/filter/filter.hpp"
#include "props/pinned/fixed.hpp"

namespace props {

inline constexpr std::string_view kArithmeticTag = "q32.32-saturating";
inline constexpr std::string_view kTieRuleTag = "score>=threshold\xE2\x86\x92" "approve";

/// Execution environment E of a pinned model.
struct EnvDescriptor {
    std::string env_version;
    std::vector<std::string> feature_paths;
    std::vector<FilterSpec> preprocessing;  // applied in order before feature extraction
    std::string arithmetic{kArithmeticTag};
    std::string tie_rule{kTieRuleTag};

    Doc to_doc() const;
    /// Strict; rejects arithmetic or tie rule tags other than the fixed ones.
    static EnvDescriptor from_doc(const Doc& doc);
    /// Config form: {env_version, feature_paths, preprocessing: [filter config]}.
    static EnvDescriptor from_config(const Doc& doc);

    friend bool operator==(const EnvDescriptor&, const EnvDescriptor&) = default;
};

/// Model parameters M of a linear scorer.
struct ModelWeights {
    std::vector<Fixed> weights;
    Fixed bias;
    Fixed threshold;

    /// Values as raw Q32.32 integers.
    Doc to_doc() const;
    static ModelWeights from_doc(const Doc& doc);
    /// Config form with decimal strings, converted exactly (InexactConversion).
    static ModelWeights from_config(const Doc& doc);

    Digest digest() const { return digest_of(to_doc()); }
    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// S = (E, M) as executed by an executor holding both halves.
struct PinnedModel {
    EnvDescriptor env;
    ModelWeights weights;

    static PinnedModel from_config(const Doc& doc);
};

enum class ModelKind { Exact, ServiceRef };

std::string_view to_string(ModelKind k) noexcept;

/// What a proof pins. Exact specs disclose E and the digest of M; ServiceRef
/// specs disclose only a service identifier.
struct ModelSpec {
    ModelKind kind = ModelKind::Exact;
    std::optional<EnvDescriptor> env;
    std::optional<Digest> weights_digest;
    std::optional<std::string> service_id;
    Digest pinned_digest;

    static ModelSpec service_ref(std::string service_id);

    Doc body_doc() const;
    Doc to_doc() const;
    /// Keeps the carried pinned_digest; compare with compute_digest().
    static ModelSpec from_doc(const Doc& doc);

    Digest compute_digest() const { return digest_of(body_doc()); }
    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

/// Throws LengthMismatch when weights and feature paths disagree in length.
ModelSpec pin_model(const EnvDescriptor& env, const ModelWeights& weights);

enum class Decision { Approve, Deny };

std::string_view to_string(Decision d) noexcept;

/// Y.
struct InferenceOutput {
    Decision decision = Decision::Deny;
    Fixed score;

    Doc to_doc() const;
    static InferenceOutput from_doc(const Doc& doc);
    Digest digest() const { return digest_of(to_doc()); }
    friend bool operator==(const InferenceOutput&, const InferenceOutput&) = default;
};

struct ExecOptions {
    /// Throw Overflow instead of saturating.
    bool strict = false;
};

/// Feature vector after preprocessing, as Q32.32. A feature is an integer
/// (saturated into range) or a decimal string that Q32.32 holds exactly.
std::vector<Fixed> extract_features(const EnvDescriptor& env, const DataRecord& input, const ExecOptions& opts = {});

/// Scores without checking any pin. score = sat(sum_i rne(w_i * x_i) + bias),
/// with the sum taken exactly and saturated once.
InferenceOutput run_model(const PinnedModel& model, const DataRecord& input, const ExecOptions& opts = {});

/// Checks that `model` is what `spec` pins (PinMismatch, NotReplicable for a
/// ServiceRef spec), then runs it. Throws FeaturePathError or, in strict
/// mode, Overflow.
InferenceOutput execute_pinned(const ModelSpec& spec, const PinnedModel& model, const DataRecord& input,
                               const ExecOptions& opts = {});

enum class ProofMode { TeeSim, Committee };

std::string_view to_string(ProofMode m) noexcept;

struct ExecutorSignature {
    KeyIdentity identity;
    Signature signature;

    friend bool operator==(const ExecutorSignature&, const ExecutorSignature&) = default;
};

/// Signed binding (pinned, input, output). Every signature is over the
/// canonical triple under DomainTag::Inference.
struct InferenceProof {
    Digest pinned_digest;
    Digest input_digest;
    Digest output_digest;
    UnixSeconds executed_at = 0;
    ProofMode mode = ProofMode::TeeSim;
    std::vector<ExecutorSignature> signatures;

    Doc triple_doc() const;
    Doc to_doc() const;
    static InferenceProof from_doc(const Doc& doc);

    friend bool operator==(const InferenceProof&, const InferenceProof&) = default;
};

Doc inference_triple(const Digest& pinned, const Digest& input, const Digest& output);
Signature sign_inference(const SigningKey& key, const Digest& pinned, const Digest& input, const Digest& output);
bool signature_valid(const InferenceProof& proof, const ExecutorSignature& sig);

/// Re-executes and signs a single-signature (tee-sim) proof. Throws
/// OutputMismatch when `output` is not what the model produces.
InferenceProof attest_inference(const SigningKey& executor_key, const ModelSpec& spec, const PinnedModel& model,
                                const DataRecord& input, const InferenceOutput& output,
                                UnixSeconds executed_at = unix_now());

/// Opaque services an executor operates on behalf of a model owner.
class ServiceRegistry {
public:
    void add(std::string service_id, KeyIdentity operator_identity, PinnedModel model);
    bool contains(const std::string& service_id) const;
    const KeyIdentity& operator_of(const std::string& service_id) const;
    /// Runs the private model behind `service_id`. Throws UnknownService.
    InferenceOutput invoke(const std::string& service_id, const DataRecord& input) const;

private:
    struct Entry {
        KeyIdentity operator_identity;
        PinnedModel model;
    };
    std::map<std::string, Entry> services_;
};

/// Model-consistency proof: binds digest(ServiceRef{service_id}) and nothing
/// about E or M. Throws UnknownService when the service is not registered or
/// `executor_key` does not operate it; OutputMismatch on a wrong output.
InferenceProof attest_service_ref(const SigningKey& executor_key, const ServiceRegistry& registry,
                                  const std::string& service_id, const DataRecord& input,
                                  const InferenceOutput& output, UnixSeconds executed_at = unix_now());

/// Consumer check of a single-executor proof: pin, shape, signature and
/// executor trust, reported as PinMismatch, Malformed, BadSignature or
/// UntrustedExecutor in that order.
Reason verify_inference_proof(const InferenceProof& proof, const Digest& expected_pinned,
                              const TrustSet& trusted_executors);

}  // namespace props
