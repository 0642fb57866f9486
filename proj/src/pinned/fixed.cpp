#include "props/pinned/fixed.hpp"

#include <limits>

#include "props/core/error.hpp"

namespace props {

namespace {

using i128 = __int128;
using u128 = unsigned __int128;

constexpr std::int64_t kMin = std::numeric_limits<std::int64_t>::min();
constexpr std::int64_t kMax = std::numeric_limits<std::int64_t>::max();

u128 pow5(int k) {
    u128 p = 1;
    while (k-- > 0) p *= 5;
    return p;
}

[[noreturn]] void inexact(std::string_view text, const char* why) {
    throw Error(Errc::InexactConversion, "'" + std::string(text) + "' " + why);
}

}  // namespace

Fixed Fixed::from_decimal(std::string_view text) {
    std::string_view s = text;
    bool neg = false;
    if (!s.empty() && s.front() == '-') {
        neg = true;
        s.remove_prefix(1);
    }
    std::string_view ip = s, fp;
    if (auto dot = s.find('.'); dot != std::string_view::npos) {
        ip = s.substr(0, dot);
        fp = s.substr(dot + 1);
        if (fp.empty()) throw Error(Errc::Malformed, "decimal '" + std::string(text) + "': empty fraction");
    }
    auto digits = [](std::string_view d) {
        for (char c : d)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (ip.empty() || !digits(ip) || !digits(fp))
        throw Error(Errc::Malformed, "decimal '" + std::string(text) + "': bad syntax");

    while (!fp.empty() && fp.back() == '0') fp.remove_suffix(1);
    // d / 10^k is a multiple of 2^-32 iff k <= 32 and 5^k divides d.
    if (fp.size() > 32) inexact(text, "needs more than 32 binary fraction digits");
    const int k = static_cast<int>(fp.size());
    u128 d = 0;
    for (char c : fp) d = d * 10 + static_cast<unsigned>(c - '0');
    const u128 p5 = pow5(k);
    if (d % p5 != 0) inexact(text, "is not a multiple of 2^-32");
    const u128 frac = (d / p5) << (32 - k);

    u128 whole = 0;
    for (char c : ip) {
        whole = whole * 10 + static_cast<unsigned>(c - '0');
        if (whole > (u128{1} << 32)) inexact(text, "is out of the Q32.32 range");
    }
    const u128 mag = (whole << 32) + frac;
    const u128 limit = neg ? (u128{1} << 63) : (u128{1} << 63) - 1;
    if (mag > limit) inexact(text, "is out of the Q32.32 range");
    return Fixed{neg ? static_cast<std::int64_t>(-static_cast<i128>(mag)) : static_cast<std::int64_t>(mag)};
}

std::string Fixed::to_decimal() const {
    const bool neg = raw < 0;
    const u128 mag = neg ? static_cast<u128>(-static_cast<i128>(raw)) : static_cast<u128>(raw);
    std::string out = neg ? "-" : "";
    out += std::to_string(static_cast<std::uint64_t>(mag >> 32));
    u128 frac = (mag & 0xffffffffu) * pow5(32);  // frac / 2^32 == frac * 5^32 / 10^32
    if (frac == 0) return out;
    std::string digits(32, '0');
    for (int i = 31; i >= 0; --i) {
        digits[static_cast<std::size_t>(i)] = static_cast<char>('0' + static_cast<int>(frac % 10));
        frac /= 10;
    }
    while (digits.back() == '0') digits.pop_back();
    return out + "." + digits;
}

Clamped fixed_from_int(std::int64_t v) {
    return saturate(static_cast<i128>(v) * Fixed::kOne);
}

__int128 mul_rne_wide(Fixed a, Fixed b) {
    const i128 p = static_cast<i128>(a.raw) * b.raw;
    i128 q = p >> 32;  // floor
    const i128 rem = p - q * (i128{1} << 32);
    const i128 half = i128{1} << 31;
    if (rem > half || (rem == half && (q & 1))) ++q;
    return q;
}

Clamped saturate(__int128 wide) {
    if (wide > kMax) return {Fixed{kMax}, true};
    if (wide < kMin) return {Fixed{kMin}, true};
    return {Fixed{static_cast<std::int64_t>(wide)}, false};
}

Clamped mul(Fixed a, Fixed b) { return saturate(mul_rne_wide(a, b)); }

}  // namespace props
