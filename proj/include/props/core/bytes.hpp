#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace props {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

inline ByteView as_bytes(std::string_view s) noexcept {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string_view as_chars(ByteView b) noexcept {
    return {reinterpret_cast<const char*>(b.data()), b.size()};
}

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Lowercase hex. Decoding rejects uppercase so every byte string has exactly
/// one textual form.
std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

/// True if `needle` occurs anywhere in `haystack` (byte-exact).
bool contains_bytes(ByteView haystack, ByteView needle) noexcept;

}  // namespace props
