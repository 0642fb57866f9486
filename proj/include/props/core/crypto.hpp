#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include "props/core/bytes.hpp"
#include "props/core/canonical.hpp"

namespace props {

/// SHA-256 output.
struct Digest {
    std::array<std::uint8_t, 32> bytes{};

    std::string hex() const { return to_hex(bytes); }
    /// Throws Malformed unless `hex` is exactly 64 lowercase hex digits.
    static Digest from_hex(std::string_view hex);

    friend auto operator<=>(const Digest&, const Digest&) = default;
};

Digest sha256(ByteView data);
inline Digest sha256(std::string_view data) { return sha256(as_bytes(data)); }
/// Digest of the canonical encoding of `doc`.
Digest digest_of(const Doc& doc);

enum class Role { Source, Attestor, Executor, CommitteeNode, Recipient };

std::string_view to_string(Role role) noexcept;
/// Throws Malformed on an unknown role name.
Role role_from_string(std::string_view name);

/// Ed25519 public verification key.
using PublicKey = std::array<std::uint8_t, 32>;

struct KeyIdentity {
    Role role = Role::Source;
    Digest fingerprint;
    PublicKey public_key{};

    static KeyIdentity from_public_key(Role role, const PublicKey& pk);

    /// fingerprint == sha256(public_key)
    bool well_formed() const;

    Doc to_doc() const;
    /// Strict; does not check well_formed() so callers can report it.
    static KeyIdentity from_doc(const Doc& doc);

    friend bool operator==(const KeyIdentity&, const KeyIdentity&) = default;
};

struct Signature {
    std::array<std::uint8_t, 64> bytes{};

    std::string hex() const { return to_hex(bytes); }
    static Signature from_hex(std::string_view hex);

    friend bool operator==(const Signature&, const Signature&) = default;
};

/// One-byte domain separators. Every signature is over
/// `tag || sha256(payload)` so a signature for one proof type never verifies
/// as another.
enum class DomainTag : std::uint8_t {
    Message = 0x00,
    Attestation = 0x01,
    Filter = 0x02,
    Inference = 0x03,
};

/// Ed25519 signing key with a fixed role. Secret material is wiped on
/// destruction.
class SigningKey {
public:
    static SigningKey generate(Role role);
    static SigningKey from_seed(Role role, ByteView seed32);

    SigningKey(const SigningKey&);
    SigningKey& operator=(const SigningKey&);
    SigningKey(SigningKey&&) noexcept;
    SigningKey& operator=(SigningKey&&) noexcept;
    ~SigningKey();

    const KeyIdentity& identity() const noexcept { return identity_; }
    Role role() const noexcept { return identity_.role; }
    Bytes seed() const;

    Signature sign(DomainTag tag, ByteView payload) const;

    /// X25519 secret derived from this key (for sealed payload recipients).
    std::array<std::uint8_t, 32> x25519_secret() const;

private:
    SigningKey() = default;
    std::array<std::uint8_t, 64> secret_{};
    KeyIdentity identity_;
};

/// Fresh key pair for `role`.
inline SigningKey keygen(Role role) { return SigningKey::generate(role); }

Signature sign(const SigningKey& key, DomainTag tag, ByteView payload);
inline Signature sign(const SigningKey& key, ByteView msg) {
    return sign(key, DomainTag::Message, msg);
}
bool verify_sig(const KeyIdentity& identity, DomainTag tag, ByteView payload, const Signature& sig);
inline bool verify_sig(const KeyIdentity& identity, ByteView msg, const Signature& sig) {
    return verify_sig(identity, DomainTag::Message, msg, sig);
}

/// Single-writer key store addressed by fingerprint.
class KeyStore {
public:
    void insert(SigningKey key);
    bool contains(const Digest& fingerprint) const;
    /// Throws UnknownKey when no key with `fingerprint` is held.
    Signature sign(const Digest& fingerprint, DomainTag tag, ByteView payload) const;
    const SigningKey& get(const Digest& fingerprint) const;

private:
    mutable std::mutex mu_;
    std::map<Digest, SigningKey> keys_;
};

}  // namespace props
