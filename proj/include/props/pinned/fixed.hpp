#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace props {

/// Signed Q32.32 fixed-point value: `raw / 2^32`.
struct Fixed {
    static constexpr int kFracBits = 32;
    static constexpr std::int64_t kOne = std::int64_t{1} << kFracBits;

    std::int64_t raw = 0;

    static constexpr Fixed from_raw(std::int64_t r) { return Fixed{r}; }

    /// Exact parse of `-?digits(.digits)?`. Throws InexactConversion when the
    /// value has no exact Q32.32 representation or is out of range, and
    /// Malformed on bad syntax.
    static Fixed from_decimal(std::string_view text);

    /// Shortest exact decimal rendering ("1", "-0.5", "0.0000000002328306436538696289062").
    std::string to_decimal() const;

    friend auto operator<=>(const Fixed&, const Fixed&) = default;
};

/// Result of a fixed-point operation that may leave the Q32.32 range.
struct Clamped {
    Fixed value;
    bool saturated = false;
};

/// Integer to Q32.32, saturating at the range ends.
Clamped fixed_from_int(std::int64_t v);

/// Exact product of two Q32.32 values rounded to the nearest multiple of
/// 2^-32, ties to even. Returned in units of 2^-32 without range reduction.
__int128 mul_rne_wide(Fixed a, Fixed b);

/// Saturating reduction of a wide accumulator (units of 2^-32).
Clamped saturate(__int128 wide);

/// mul_rne_wide followed by saturation.
Clamped mul(Fixed a, Fixed b);

}  // namespace props
