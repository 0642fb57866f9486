#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "props/committee/committee.hpp"
#include "props/net/source.hpp"
#include "props/verify/verifier.hpp"

namespace props {

inline constexpr std::string_view kScenarioSchema = "props.scenario/1";

enum class ExecutorKind { TeeSim, Committee, Service };

struct InferenceConfig {
    ExecutorKind executor = ExecutorKind::TeeSim;
    std::size_t committee_n = 0;
    int quorum_t = 0;
    std::map<std::size_t, NodeBehavior> fault_plan;
    std::string service_id;
};

/// One declarative document describing a run: source, fetch, filters,
/// optional model and executor, delivery mode and the consumer policy.
struct ScenarioConfig {
    std::string scenario;
    std::string delivery = "plaintext";  // or "sealed"
    std::string source_id;
    bool source_signing = false;
    net::RecordStore store;
    net::FetchRequest fetch;
    std::vector<FilterSpec> filters;
    std::optional<PinnedModel> model;
    std::optional<InferenceConfig> inference;

    // Policy section, with names still unresolved.
    std::string consumer;
    std::vector<std::string> whitelist;
    std::string required_record_type;
    std::int64_t max_age_seconds = 0;
    ModelRequirement::Kind requirement = ModelRequirement::Kind::None;
    DeliveryRequirement delivery_requirement = DeliveryRequirement::Any;

    /// Throws ConfigError on schema violations or unresolved references.
    static ScenarioConfig from_doc(const Doc& doc);
    static ScenarioConfig load(const std::filesystem::path& path);

    /// Spec digests of whitelisted filters (resolved by filter_id).
    std::set<Digest> whitelist_digests() const;
    std::optional<ModelSpec> model_spec() const;
};

enum class Attack { None, TamperData, SwapFilter, SwapModel, ForgeSig, Stale, Byzantine };

struct AttackPlan {
    Attack kind = Attack::None;
    std::size_t byzantine_k = 0;

    /// "tamper-data", "swap-filter", "swap-model", "forge-sig", "stale" or
    /// "byzantine-<k>". Throws UnknownAttack.
    static AttackPlan parse(std::string_view name);
    std::string name() const;
};

struct RunOptions {
    std::optional<std::string> delivery;  // overrides the config
    bool multiprocess = false;
    /// prop-cli binary used for --multiprocess helpers; defaults to the
    /// running executable.
    std::optional<std::filesystem::path> helper_exe;
    std::optional<std::filesystem::path> artifacts_dir;
    AttackPlan attack;
};

struct ScenarioResult {
    std::optional<PropChain> chain;
    VerifierPolicy policy;
    VerificationReport report;
    std::optional<CommitteeVerdict> verdict;
    /// Y as computed by an honest executor, when a model is configured.
    std::optional<InferenceOutput> honest_output;
    /// The subject's record as stored at the source (never written out).
    Doc original_content;
    double elapsed_seconds = 0;

    bool passed() const { return report.passed(); }
};

/// Runs the whole pipeline and the consumer's verification. Component
/// failures (source, attestor, committee) are thrown as Errors, except a
/// committee ConsensusFailure, which is reported as a failing
/// committee-consensus check.
ScenarioResult run_scenario(const ScenarioConfig& config, const RunOptions& options = {});

/// Reason codes an attack must produce, in check order; empty when the
/// attack is expected to be tolerated (chain passes with the honest output).
std::vector<std::string> expected_reasons(const ScenarioConfig& config, const AttackPlan& attack);

/// True when the observed outcome is exactly the expected one.
bool attack_caught(const ScenarioConfig& config, const AttackPlan& attack, const ScenarioResult& result);

/// Every string leaf of `content` with at least `min_len` bytes.
std::vector<std::string> string_leaves(const Doc& content, std::size_t min_len = 4);

/// Files under `dir` (recursively, skipping `exclude`) containing any needle.
std::vector<std::string> scan_for_plaintext(const std::filesystem::path& dir, const std::vector<std::string>& needles,
                                            const std::vector<std::filesystem::path>& exclude = {});

}  // namespace props
