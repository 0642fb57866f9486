#include "props/core/crypto.hpp"

#include <sodium.h>

#include <algorithm>
#include <cstring>

#include "props/core/error.hpp"

namespace props {

namespace {

struct SodiumInit {
    SodiumInit() {
        if (sodium_init() < 0) throw Error(Errc::IoError, "libsodium initialisation failed");
    }
};

void ensure_sodium() { static SodiumInit init; }

template <std::size_t N>
std::array<std::uint8_t, N> fixed_from_hex(std::string_view hex, const char* what) {
    Bytes raw = from_hex(hex);
    if (raw.size() != N) throw Error(Errc::Malformed, std::string(what) + ": wrong length");
    std::array<std::uint8_t, N> out{};
    std::copy(raw.begin(), raw.end(), out.begin());
    return out;
}

Bytes tagged_message(DomainTag tag, ByteView payload) {
    Digest d = sha256(payload);
    Bytes msg;
    msg.reserve(1 + d.bytes.size());
    msg.push_back(static_cast<std::uint8_t>(tag));
    msg.insert(msg.end(), d.bytes.begin(), d.bytes.end());
    return msg;
}

}  // namespace

Digest Digest::from_hex(std::string_view hex) {
    Digest d;
    d.bytes = fixed_from_hex<32>(hex, "digest");
    return d;
}

Digest sha256(ByteView data) {
    ensure_sodium();
    Digest d;
    crypto_hash_sha256(d.bytes.data(), data.data(), data.size());
    return d;
}

Digest digest_of(const Doc& doc) { return sha256(canonical_encode(doc)); }

std::string_view to_string(Role role) noexcept {
    switch (role) {
        case Role::Source: return "source";
        case Role::Attestor: return "attestor";
        case Role::Executor: return "executor";
        case Role::CommitteeNode: return "committee-node";
        case Role::Recipient: return "recipient";
    }
    return "unknown";
}

Role role_from_string(std::string_view name) {
    for (Role r : {Role::Source, Role::Attestor, Role::Executor, Role::CommitteeNode, Role::Recipient})
        if (to_string(r) == name) return r;
    throw Error(Errc::Malformed, "unknown role '" + std::string(name) + "'");
}

KeyIdentity KeyIdentity::from_public_key(Role role, const PublicKey& pk) {
    KeyIdentity id;
    id.role = role;
    id.public_key = pk;
    id.fingerprint = sha256(ByteView(pk));
    return id;
}

bool KeyIdentity::well_formed() const { return fingerprint == sha256(ByteView(public_key)); }

Doc KeyIdentity::to_doc() const {
    return Doc{{"fingerprint", fingerprint.hex()},
               {"public_key", to_hex(public_key)},
               {"role", std::string(to_string(role))}};
}

KeyIdentity KeyIdentity::from_doc(const Doc& doc) {
    ObjectReader r(doc, "identity");
    KeyIdentity id;
    id.fingerprint = Digest::from_hex(r.string("fingerprint"));
    id.public_key = fixed_from_hex<32>(r.string("public_key"), "public_key");
    id.role = role_from_string(r.string("role"));
    r.finish();
    return id;
}

Signature Signature::from_hex(std::string_view hex) {
    Signature s;
    s.bytes = fixed_from_hex<64>(hex, "signature");
    return s;
}

SigningKey SigningKey::generate(Role role) {
    ensure_sodium();
    std::array<std::uint8_t, 32> seed{};
    randombytes_buf(seed.data(), seed.size());
    SigningKey k = from_seed(role, seed);
    sodium_memzero(seed.data(), seed.size());
    return k;
}

SigningKey SigningKey::from_seed(Role role, ByteView seed32) {
    ensure_sodium();
    if (seed32.size() != crypto_sign_SEEDBYTES) throw Error(Errc::Malformed, "seed must be 32 bytes");
    SigningKey k;
    PublicKey pk{};
    crypto_sign_seed_keypair(pk.data(), k.secret_.data(), seed32.data());
    k.identity_ = KeyIdentity::from_public_key(role, pk);
    return k;
}

SigningKey::SigningKey(const SigningKey&) = default;
SigningKey& SigningKey::operator=(const SigningKey&) = default;
SigningKey::SigningKey(SigningKey&& other) noexcept
    : secret_(other.secret_), identity_(other.identity_) {
    sodium_memzero(other.secret_.data(), other.secret_.size());
}
SigningKey& SigningKey::operator=(SigningKey&& other) noexcept {
    if (this != &other) {
        secret_ = other.secret_;
        identity_ = other.identity_;
        sodium_memzero(other.secret_.data(), other.secret_.size());
    }
    return *this;
}
SigningKey::~SigningKey() { sodium_memzero(secret_.data(), secret_.size()); }

Bytes SigningKey::seed() const {
    Bytes seed(crypto_sign_SEEDBYTES);
    crypto_sign_ed25519_sk_to_seed(seed.data(), secret_.data());
    return seed;
}

Signature SigningKey::sign(DomainTag tag, ByteView payload) const {
    Bytes msg = tagged_message(tag, payload);
    Signature sig;
    crypto_sign_detached(sig.bytes.data(), nullptr, msg.data(), msg.size(), secret_.data());
    return sig;
}

std::array<std::uint8_t, 32> SigningKey::x25519_secret() const {
    std::array<std::uint8_t, 32> out{};
    crypto_sign_ed25519_sk_to_curve25519(out.data(), secret_.data());
    return out;
}

Signature sign(const SigningKey& key, DomainTag tag, ByteView payload) { return key.sign(tag, payload); }

bool verify_sig(const KeyIdentity& identity, DomainTag tag, ByteView payload, const Signature& sig) {
    ensure_sodium();
    Bytes msg = tagged_message(tag, payload);
    return crypto_sign_verify_detached(sig.bytes.data(), msg.data(), msg.size(),
                                       identity.public_key.data()) == 0;
}

void KeyStore::insert(SigningKey key) {
    std::lock_guard lock(mu_);
    Digest fp = key.identity().fingerprint;
    keys_.insert_or_assign(fp, std::move(key));
}

bool KeyStore::contains(const Digest& fingerprint) const {
    std::lock_guard lock(mu_);
    return keys_.count(fingerprint) != 0;
}

const SigningKey& KeyStore::get(const Digest& fingerprint) const {
    std::lock_guard lock(mu_);
    auto it = keys_.find(fingerprint);
    if (it == keys_.end()) throw Error(Errc::UnknownKey, "no key for fingerprint " + fingerprint.hex());
    return it->second;
}

Signature KeyStore::sign(const Digest& fingerprint, DomainTag tag, ByteView payload) const {
    return get(fingerprint).sign(tag, payload);
}

}  // namespace props
