#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "props/committee/committee.hpp"
#include "props/verify/chain.hpp"

namespace props {

/// Accepted forward clock skew for attestation timestamps.
inline constexpr std::int64_t kMaxClockSkewSeconds = 60;

struct ModelRequirement {
    enum class Kind { None, Exact, ServiceRef, Committee };

    Kind kind = Kind::None;
    Digest pinned_digest;              // Exact, Committee
    std::string service_id;            // ServiceRef
    TrustSet trusted_executors;        // Exact, ServiceRef
    std::optional<CommitteeConfig> committee;  // Committee (membership and t only)

    /// Pin the consumer expects in the proof.
    Digest expected_pin() const;

    Doc to_doc() const;
    static ModelRequirement from_doc(const Doc& doc);
    friend bool operator==(const ModelRequirement&, const ModelRequirement&) = default;
};

enum class DeliveryRequirement { Any, Plaintext, Sealed };

std::string_view to_string(DeliveryRequirement d) noexcept;
DeliveryRequirement delivery_from_string(std::string_view s);

/// A consumer's trust roots and acceptance rules. The whitelist holds
/// digests of fully parameterized filter specs.
struct VerifierPolicy {
    std::string consumer;
    TrustSet trusted_attestors;  // attestor keys, plus source keys for source-signed data
    std::set<std::string> trusted_sources;
    std::set<Digest> filter_whitelist;
    std::string required_record_type;
    ModelRequirement model;
    std::int64_t max_age_seconds = 0;
    DeliveryRequirement delivery = DeliveryRequirement::Any;
    /// Sealed payloads must be addressed to this recipient when set.
    std::optional<Digest> recipient;

    Doc to_doc() const;
    static VerifierPolicy from_doc(const Doc& doc);
    friend bool operator==(const VerifierPolicy&, const VerifierPolicy&) = default;
};

inline constexpr std::string_view kReportSchema = "props.report/1";

/// One executed check. `reason` is "Ok" or a reason code; both are kept as
/// strings so reports from newer verifiers survive a round trip.
struct CheckResult {
    std::string check_id;
    bool passed = false;
    std::string reason;

    friend bool operator==(const CheckResult&, const CheckResult&) = default;
};

struct VerificationReport {
    std::vector<CheckResult> checks;
    UnixSeconds verified_at = 0;

    /// Conjunction of all checks; false for an empty report.
    bool passed() const;
    /// Reason codes of failing checks, in check order.
    std::vector<std::string> failure_reasons() const;
    const CheckResult* find(std::string_view check_id) const;

    Doc to_doc() const;
    /// Throws Malformed on a wrong schema or a verdict that disagrees with its checks.
    static VerificationReport from_doc(const Doc& doc);
    friend bool operator==(const VerificationReport&, const VerificationReport&) = default;
};

/// Canonical JSON bytes of report.to_doc().
std::string report_export(const VerificationReport& report);
VerificationReport report_import(std::string_view bytes);

/// Runs every check (no short-circuit). Pure and offline. When
/// `recipient_key` is given, sealed payloads are also opened and checked.
VerificationReport verify_chain(const PropChain& chain, const VerifierPolicy& policy, UnixSeconds now,
                                const SigningKey* recipient_key = nullptr);

/// Strictly decodes canonical chain bytes first; undecodable input yields a
/// failing report with a single chain-decode check.
VerificationReport verify_chain_bytes(std::string_view bytes, const VerifierPolicy& policy, UnixSeconds now,
                                      const SigningKey* recipient_key = nullptr);

}  // namespace props
