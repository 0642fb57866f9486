#include "props/filter/filter.hpp"

#include <algorithm>
#include <limits>

#include "props/core/error.hpp"
#include "props/core/path.hpp"

namespace props {

namespace {

using u128 = unsigned __int128;
constexpr u128 kOne = u128{1} << 64;
constexpr std::int64_t kMaxScaleMilli = 1'000'000'000;

[[noreturn]] void schema(const std::string& what) { throw Error(Errc::ParamSchemaMismatch, what); }

std::vector<ContentPath> parse_paths(const Doc& params) {
    const Doc* paths = params.find("paths");
    if (!paths || !paths->is_array() || paths->as_array().empty()) schema("'paths' must be a non-empty array");
    std::vector<ContentPath> out;
    for (const Doc& p : paths->as_array()) {
        if (!p.is_string()) schema("'paths' entries must be strings");
        out.push_back(ContentPath::parse(p.as_string()));
    }
    return out;
}

void expect_members(const Doc& params, std::initializer_list<std::string_view> names) {
    if (!params.is_object()) schema("params must be an object");
    if (params.as_object().size() != names.size()) schema("unexpected params members");
    for (auto n : names)
        if (!params.find(n)) schema("missing param '" + std::string(n) + "'");
}

void validate_params(FilterKind kind, const Doc& params) {
    switch (kind) {
        case FilterKind::Identity: expect_members(params, {}); break;
        case FilterKind::Redact:
        case FilterKind::Select:
            expect_members(params, {"paths"});
            parse_paths(params);
            break;
        case FilterKind::Bucketize: {
            expect_members(params, {"boundaries", "path"});
            const Doc& path = params.at("path");
            if (!path.is_string()) schema("'path' must be a string");
            ContentPath::parse(path.as_string());
            const Doc& b = params.at("boundaries");
            if (!b.is_array() || b.as_array().empty()) schema("'boundaries' must be a non-empty array");
            std::int64_t prev = 0;
            bool first = true;
            for (const Doc& v : b.as_array()) {
                if (!v.is_int()) schema("'boundaries' entries must be integers");
                if (!first && v.as_int() <= prev) schema("'boundaries' must be strictly increasing");
                prev = v.as_int();
                first = false;
            }
            break;
        }
        case FilterKind::Noise: {
            expect_members(params, {"path", "scale_milli"});
            const Doc& path = params.at("path");
            if (!path.is_string()) schema("'path' must be a string");
            ContentPath::parse(path.as_string());
            const Doc& s = params.at("scale_milli");
            if (!s.is_int() || s.as_int() <= 0 || s.as_int() > kMaxScaleMilli)
                schema("'scale_milli' must be an integer in [1, 1e9]");
            break;
        }
    }
}

Doc& integer_slot(Doc& content, const std::string& path_text) {
    Doc* slot = resolve(content, ContentPath::parse(path_text));
    if (!slot) throw Error(Errc::PathError, "path '" + path_text + "' does not resolve");
    if (!slot->is_int()) throw Error(Errc::PathTypeMismatch, "path '" + path_text + "' is not an integer");
    return *slot;
}

std::int64_t saturating_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) return b > 0 ? std::numeric_limits<std::int64_t>::max()
                                                       : std::numeric_limits<std::int64_t>::min();
    return r;
}

// Q0.64 multiply, truncating. Operands are in [0, 1].
u128 mulq(u128 a, u128 b) {
    if (a == kOne) return b;
    if (b == kOne) return a;
    return (a * b) >> 64;
}

u128 powq(u128 base, std::uint64_t exp) {
    u128 result = kOne;
    while (exp) {
        if (exp & 1) result = mulq(result, base);
        base = mulq(base, base);
        exp >>= 1;
        if (result == 0) break;
    }
    return result;
}

// exp(-r) for r in [0, 1] given as Q0.64, by its alternating Taylor series.
u128 exp_neg_fraction(u128 r) {
    __int128 sum = static_cast<__int128>(kOne);
    u128 term = kOne;
    for (unsigned k = 1; k < 40 && term != 0; ++k) {
        term = mulq(term, r) / k;
        if (k & 1) sum -= static_cast<__int128>(term);
        else sum += static_cast<__int128>(term);
    }
    return sum < 0 ? 0 : static_cast<u128>(sum);
}

}  // namespace

std::string_view to_string(FilterKind k) noexcept {
    switch (k) {
        case FilterKind::Identity: return "identity";
        case FilterKind::Redact: return "redact";
        case FilterKind::Select: return "select";
        case FilterKind::Bucketize: return "bucketize";
        case FilterKind::Noise: return "noise";
    }
    return "unknown";
}

FilterKind filter_kind_from_string(std::string_view s) {
    for (FilterKind k : {FilterKind::Identity, FilterKind::Redact, FilterKind::Select, FilterKind::Bucketize,
                         FilterKind::Noise})
        if (to_string(k) == s) return k;
    throw Error(Errc::ParamSchemaMismatch, "unknown filter kind '" + std::string(s) + "'");
}

FilterSpec FilterSpec::make(std::string filter_id, FilterKind kind, Doc params) {
    if (filter_id.empty()) schema("empty filter_id");
    if (params.is_null()) params = Doc::object();
    validate_params(kind, params);
    FilterSpec s;
    s.filter_id = std::move(filter_id);
    s.kind = kind;
    s.params = std::move(params);
    s.spec_digest = s.compute_digest();
    return s;
}

Doc FilterSpec::body_doc() const {
    return Doc{{"filter_id", filter_id}, {"kind", std::string(to_string(kind))}, {"params", params}};
}

Doc FilterSpec::to_doc() const {
    Doc d = body_doc();
    d.set("spec_digest", spec_digest.hex());
    return d;
}

FilterSpec FilterSpec::from_doc(const Doc& doc) {
    ObjectReader r(doc, "filter spec");
    FilterSpec s;
    s.filter_id = r.string("filter_id");
    try {
        s.kind = filter_kind_from_string(r.string("kind"));
        s.params = r.get("params");
        validate_params(s.kind, s.params);
    } catch (const Error& e) {
        throw Error(Errc::Malformed, e.what());
    }
    s.spec_digest = Digest::from_hex(r.string("spec_digest"));
    r.finish();
    return s;
}

FilterSpec FilterSpec::from_config(const Doc& doc) {
    ObjectReader r(doc, "filter config");
    std::string id = r.string("filter_id");
    FilterKind kind = filter_kind_from_string(r.string("kind"));
    const Doc* params = r.optional("params");
    r.finish();
    return make(std::move(id), kind, params ? *params : Doc::object());
}

DataRecord apply_filter(const FilterSpec& spec, const DataRecord& record) {
    validate_params(spec.kind, spec.params);
    DataRecord out = record;
    switch (spec.kind) {
        case FilterKind::Identity: break;
        case FilterKind::Redact:
            for (const auto& path : parse_paths(spec.params))
                if (Doc* slot = resolve(out.content, path)) *slot = Doc(std::string(kRedactedMarker));
            break;
        case FilterKind::Select: {
            Doc selected = Doc::object();
            for (const auto& path : parse_paths(spec.params)) copy_path(record.content, path, selected);
            out.content = std::move(selected);
            break;
        }
        case FilterKind::Bucketize: {
            Doc& slot = integer_slot(out.content, spec.params.at("path").as_string());
            const std::int64_t v = slot.as_int();
            const auto& bounds = spec.params.at("boundaries").as_array();
            auto idx = std::upper_bound(bounds.begin(), bounds.end(), v,
                                        [](std::int64_t x, const Doc& b) { return x < b.as_int(); }) -
                       bounds.begin();
            slot = Doc(static_cast<std::int64_t>(idx));
            break;
        }
        case FilterKind::Noise: {
            Doc& slot = integer_slot(out.content, spec.params.at("path").as_string());
            const std::int64_t v = slot.as_int();
            std::uint64_t seed = noise::derive_seed(record.digest(), spec.spec_digest);
            slot = Doc(saturating_add(v, noise::sample(seed, spec.params.at("scale_milli").as_int())));
            break;
        }
    }
    return out;
}

Doc FilterProof::body_doc() const {
    return Doc{{"executor_identity", executor_identity.to_doc()},
               {"input_digest", input_digest.hex()},
               {"output_digest", output_digest.hex()},
               {"spec_digest", spec_digest.hex()}};
}

Doc FilterProof::to_doc() const {
    Doc d = body_doc();
    d.set("signature", signature.hex());
    return d;
}

FilterProof FilterProof::from_doc(const Doc& doc) {
    ObjectReader r(doc, "filter proof");
    FilterProof p;
    p.executor_identity = KeyIdentity::from_doc(r.get("executor_identity"));
    p.input_digest = Digest::from_hex(r.string("input_digest"));
    p.output_digest = Digest::from_hex(r.string("output_digest"));
    p.spec_digest = Digest::from_hex(r.string("spec_digest"));
    p.signature = Signature::from_hex(r.string("signature"));
    r.finish();
    return p;
}

FilterProof attest_filter(const SigningKey& executor_key, const FilterSpec& spec, const DataRecord& input,
                          const DataRecord& output) {
    if (apply_filter(spec, input) != output)
        throw Error(Errc::OutputMismatch, "output is not " + spec.filter_id + " applied to input");
    FilterProof p;
    p.spec_digest = spec.spec_digest;
    p.input_digest = input.digest();
    p.output_digest = output.digest();
    p.executor_identity = executor_key.identity();
    p.signature = executor_key.sign(DomainTag::Filter, as_bytes(canonical_encode(p.body_doc())));
    return p;
}

Reason verify_filter_proof(const FilterProof& proof) {
    if (!proof.executor_identity.well_formed()) return Reason::Malformed;
    if (!verify_sig(proof.executor_identity, DomainTag::Filter, as_bytes(canonical_encode(proof.body_doc())),
                    proof.signature))
        return Reason::BadSignature;
    return Reason::Ok;
}

namespace noise {

std::uint64_t derive_seed(const Digest& input_digest, const Digest& spec_digest) {
    Bytes buf(input_digest.bytes.begin(), input_digest.bytes.end());
    buf.insert(buf.end(), spec_digest.bytes.begin(), spec_digest.bytes.end());
    Digest d = sha256(buf);
    std::uint64_t seed = 0;
    for (int i = 0; i < 8; ++i) seed = (seed << 8) | d.bytes[i];
    return seed;
}

unsigned __int128 decay_q64(std::int64_t scale_milli) {
    if (scale_milli <= 0) throw Error(Errc::ParamSchemaMismatch, "scale must be positive");
    // 1/scale = 1000 / scale_milli = whole + frac.
    const auto den = static_cast<u128>(scale_milli);
    const std::uint64_t whole = static_cast<std::uint64_t>(1000 / scale_milli);
    const u128 frac = ((static_cast<u128>(1000 % scale_milli)) << 64) / den;
    if (whole > 64) return 0;  // e^-65 < 2^-64
    u128 result = exp_neg_fraction(frac);
    if (whole) result = mulq(result, powq(exp_neg_fraction(kOne), whole));
    return result;
}

std::int64_t sample(std::uint64_t seed, std::int64_t scale_milli) {
    const u128 p = decay_q64(scale_milli);
    const bool negative = seed & 1;
    const u128 u = static_cast<u128>(seed & ~std::uint64_t{1});  // uniform in [0, 1)
    const u128 v = kOne - u;                                       // in (0, 1]
    // P(|X| <= k) = 1 - 2 p^(k+1) / (1 + p); the magnitude is the smallest k
    // with 1 - u <= that CDF, i.e. p^(k+1) <= v (1 + p) / 2.
    const u128 target = (mulq(v, p) + v) / 2;
    auto within = [&](std::uint64_t k) { return powq(p, k + 1) <= target; };
    if (within(0)) return 0;
    std::uint64_t lo = 0, hi = 1;
    while (!within(hi)) {
        lo = hi;
        hi *= 2;
        if (hi > (std::uint64_t{1} << 62)) break;
    }
    while (hi - lo > 1) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (within(mid)) hi = mid;
        else lo = mid;
    }
    auto mag = static_cast<std::int64_t>(hi);
    return negative ? -mag : mag;
}

}  // namespace noise

}  // namespace props
