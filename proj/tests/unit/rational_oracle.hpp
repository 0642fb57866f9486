#pragma once

// Arbitrary-precision reference for the fixed-point scorer. Shares no code
// with the implementation under test.

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

namespace props::oracle {

using boost::multiprecision::cpp_int;
using boost::multiprecision::cpp_rational;

inline const cpp_int& two32() {
    static const cpp_int v = cpp_int(1) << 32;
    return v;
}

inline cpp_rational from_raw(std::int64_t raw) { return cpp_rational(cpp_int(raw), two32()); }

inline cpp_int floor_div(const cpp_int& n, const cpp_int& d) {
    cpp_int q = n / d;  // truncates toward zero
    if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
    return q;
}

/// Nearest integer multiple of 2^-32, ties to even, in units of 2^-32.
inline cpp_int round_rne_units(const cpp_rational& v) {
    cpp_rational t = v * two32();
    cpp_int n = boost::multiprecision::numerator(t), d = boost::multiprecision::denominator(t);
    cpp_int fl = floor_div(n, d);
    cpp_rational frac = t - cpp_rational(fl);
    cpp_rational half(1, 2);
    if (frac > half || (frac == half && (fl & 1) != 0)) ++fl;
    return fl;
}

inline cpp_rational clamp_range(const cpp_rational& v) {
    const cpp_rational lo = from_raw(INT64_MIN), hi = from_raw(INT64_MAX);
    return v < lo ? lo : (v > hi ? hi : v);
}

inline std::int64_t clamp_units(const cpp_int& u) {
    if (u > cpp_int(INT64_MAX)) return INT64_MAX;
    if (u < cpp_int(INT64_MIN)) return INT64_MIN;
    return static_cast<std::int64_t>(u);
}

struct Result {
    std::int64_t score_raw;
    bool approve;
};

/// Exact evaluation: features clamped into range, each product rounded to
/// 2^-32 (ties even), summed exactly with the bias, clamped once.
inline Result score(const std::vector<std::int64_t>& weights_raw, const std::vector<std::int64_t>& features,
                    std::int64_t bias_raw, std::int64_t threshold_raw) {
    cpp_int acc = bias_raw;
    for (std::size_t i = 0; i < weights_raw.size(); ++i) {
        cpp_rational x = clamp_range(cpp_rational(cpp_int(features[i])));
        acc += round_rne_units(from_raw(weights_raw[i]) * x);
    }
    std::int64_t s = clamp_units(acc);
    return {s, s >= threshold_raw};
}

/// Same with features given as raw Q32.32 values (already in range).
inline Result score_q(const std::vector<std::int64_t>& weights_raw, const std::vector<std::int64_t>& features_raw,
                      std::int64_t bias_raw, std::int64_t threshold_raw) {
    cpp_int acc = bias_raw;
    for (std::size_t i = 0; i < weights_raw.size(); ++i)
        acc += round_rne_units(from_raw(weights_raw[i]) * from_raw(features_raw[i]));
    std::int64_t s = clamp_units(acc);
    return {s, s >= threshold_raw};
}

/// Exact decimal text of n / 2^k (k <= 20).
inline std::string dyadic_decimal(std::int64_t n, unsigned k) {
    cpp_int v = cpp_int(n < 0 ? -cpp_int(n) : cpp_int(n)) * boost::multiprecision::pow(cpp_int(5), k);
    const cpp_int ten_k = boost::multiprecision::pow(cpp_int(10), k);
    std::string ip = cpp_int(v / ten_k).str(), fp = cpp_int(v % ten_k).str();
    fp.insert(0, k - std::min<std::size_t>(k, fp.size()), '0');
    std::string out = (n < 0 ? "-" : "") + ip;
    if (k) out += "." + fp;
    return out;
}

/// Exact value of a decimal literal, or false when not representable in units of 2^-32.
inline bool decimal_units(const std::string& text, cpp_int& units) {
    bool neg = !text.empty() && text[0] == '-';
    std::string s = neg ? text.substr(1) : text;
    auto dot = s.find('.');
    std::string digits = s, frac;
    if (dot != std::string::npos) {
        digits = s.substr(0, dot);
        frac = s.substr(dot + 1);
    }
    std::string all = digits + frac;
    all.erase(0, std::min(all.find_first_not_of('0'), all.size() - 1));  // a leading 0 would mean octal
    cpp_int num(all);
    cpp_int den = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(frac.size()));
    cpp_rational v(num, den);
    if (neg) v = -v;
    cpp_rational t = v * two32();
    if (boost::multiprecision::denominator(t) != 1) return false;
    units = boost::multiprecision::numerator(t);
    return units >= cpp_int(INT64_MIN) && units <= cpp_int(INT64_MAX);
}

}  // namespace props::oracle
