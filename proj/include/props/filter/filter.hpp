#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "props/core/crypto.hpp"
#include "props/core/reason.hpp"
#include "props/core/record.hpp"

namespace props {

/// Replacement value written over redacted content ("␀REDACTED").
inline constexpr std::string_view kRedactedMarker = "\xE2\x90\x80REDACTED";

enum class FilterKind { Identity, Redact, Select, Bucketize, Noise };

std::string_view to_string(FilterKind k) noexcept;
FilterKind filter_kind_from_string(std::string_view s);

/// Public description of a filter f. Params per kind:
///   identity  {}
///   redact    {"paths": [path, ...]}
///   select    {"paths": [path, ...]}
///   bucketize {"path": path, "boundaries": [strictly increasing ints]}
///   noise     {"path": path, "scale_milli": int in [1, 1e9]}
struct FilterSpec {
    std::string filter_id;  // name@version
    FilterKind kind = FilterKind::Identity;
    Doc params;
    Digest spec_digest;

    /// Validates params and computes spec_digest. Throws ParamSchemaMismatch.
    static FilterSpec make(std::string filter_id, FilterKind kind, Doc params);

    Doc body_doc() const;
    Doc to_doc() const;
    /// Strict decode. Keeps the carried spec_digest as-is so a verifier can
    /// report a mismatch; see digest_consistent().
    static FilterSpec from_doc(const Doc& doc);
    /// Parses the config form {filter_id, kind, params} and computes the digest.
    static FilterSpec from_config(const Doc& doc);

    Digest compute_digest() const { return digest_of(body_doc()); }
    bool digest_consistent() const { return spec_digest == compute_digest(); }

    friend bool operator==(const FilterSpec&, const FilterSpec&) = default;
};

/// X' = f(X). Only `content` changes. Deterministic.
/// Throws ParamSchemaMismatch, PathError (bucketize/noise on a missing path)
/// or PathTypeMismatch (bucketize/noise on a non-integer).
DataRecord apply_filter(const FilterSpec& spec, const DataRecord& record);

/// Signed binding spec_digest + digest(X) -> digest(X').
struct FilterProof {
    Digest spec_digest;
    Digest input_digest;
    Digest output_digest;
    KeyIdentity executor_identity;
    Signature signature;

    Doc body_doc() const;
    Doc to_doc() const;
    static FilterProof from_doc(const Doc& doc);

    friend bool operator==(const FilterProof&, const FilterProof&) = default;
};

/// Re-applies the filter and signs. Throws OutputMismatch when `output` is
/// not apply_filter(spec, input).
FilterProof attest_filter(const SigningKey& executor_key, const FilterSpec& spec, const DataRecord& input,
                          const DataRecord& output);

/// Signature and identity checks only (Ok, Malformed or BadSignature).
Reason verify_filter_proof(const FilterProof& proof);

namespace noise {

/// First 8 bytes (big-endian) of sha256(input_digest || spec_digest).
std::uint64_t derive_seed(const Digest& input_digest, const Digest& spec_digest);

/// exp(-1/scale) with scale = scale_milli / 1000, as a Q0.64 fraction
/// (2^64 represents 1.0). Integer-only so every host computes the same bits.
unsigned __int128 decay_q64(std::int64_t scale_milli);

/// Discrete Laplace sample by inverse CDF at `seed`. Bit 0 picks the sign;
/// the remaining 63 bits give the uniform variate for the magnitude.
std::int64_t sample(std::uint64_t seed, std::int64_t scale_milli);

}  // namespace noise

}  // namespace props
