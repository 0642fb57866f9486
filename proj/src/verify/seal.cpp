#include "props/verify/seal.hpp"

#include <sodium.h>

#include "props/core/error.hpp"

namespace props {

namespace {

constexpr std::string_view kHkdfSalt = "props-seal-v1";

Bytes concat(std::initializer_list<ByteView> parts) {
    Bytes out;
    for (ByteView p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
}

Bytes hmac(ByteView key, ByteView msg) {
    crypto_auth_hmacsha256_state st;
    Bytes out(crypto_auth_hmacsha256_BYTES);
    crypto_auth_hmacsha256_init(&st, key.data(), key.size());
    crypto_auth_hmacsha256_update(&st, msg.data(), msg.size());
    crypto_auth_hmacsha256_final(&st, out.data());
    sodium_memzero(&st, sizeof st);
    return out;
}

struct AeadKey {
    std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_KEYBYTES> bytes{};
    ~AeadKey() { sodium_memzero(bytes.data(), bytes.size()); }
};

AeadKey derive_key(ByteView shared, ByteView enc, ByteView recipient_xpk) {
    Bytes okm = hkdf_sha256(as_bytes(kHkdfSalt), shared, concat({enc, recipient_xpk}), 32);
    AeadKey k;
    std::copy(okm.begin(), okm.end(), k.bytes.begin());
    sodium_memzero(okm.data(), okm.size());
    return k;
}

Bytes aad(const SealedPayload& s) {
    return concat({as_bytes(s.suite), as_bytes(s.kind), s.enc, s.recipient.bytes, s.plaintext_digest.bytes});
}

[[noreturn]] void decrypt_failure(const char* why) { throw Error(Errc::DecryptFailure, why); }

}  // namespace

Bytes hkdf_sha256(ByteView salt, ByteView ikm, ByteView info, std::size_t length) {
    if (sodium_init() < 0) throw Error(Errc::IoError, "libsodium init failed");
    if (length > 255 * 32) throw Error(Errc::Malformed, "hkdf: output too long");
    Bytes prk = hmac(salt, ikm);
    Bytes out, t;
    for (std::uint8_t i = 1; out.size() < length; ++i) {
        Bytes block = concat({t, info, ByteView(&i, 1)});
        t = hmac(prk, block);
        out.insert(out.end(), t.begin(), t.end());
    }
    sodium_memzero(prk.data(), prk.size());
    out.resize(length);
    return out;
}

Doc SealedPayload::to_doc() const {
    return Doc{{"ciphertext", to_hex(ciphertext)},
               {"enc", to_hex(enc)},
               {"kind", kind},
               {"plaintext_digest", plaintext_digest.hex()},
               {"recipient", recipient.hex()},
               {"suite", suite}};
}

SealedPayload SealedPayload::from_doc(const Doc& doc) {
    ObjectReader r(doc, "sealed payload");
    SealedPayload s;
    s.ciphertext = from_hex(r.string("ciphertext"));
    s.enc = from_hex(r.string("enc"));
    s.kind = r.string("kind");
    s.plaintext_digest = Digest::from_hex(r.string("plaintext_digest"));
    s.recipient = Digest::from_hex(r.string("recipient"));
    s.suite = r.string("suite");
    r.finish();
    if (s.kind != "record" && s.kind != "output") throw Error(Errc::Malformed, "sealed payload: kind " + s.kind);
    return s;
}

SealedPayload seal_doc(const KeyIdentity& recipient, const Doc& doc, std::string kind) {
    if (sodium_init() < 0) throw Error(Errc::IoError, "libsodium init failed");
    if (recipient.role != Role::Recipient || !recipient.well_formed())
        throw Error(Errc::Malformed, "sealing needs a well-formed recipient identity");
    std::array<std::uint8_t, 32> xpk{};
    if (crypto_sign_ed25519_pk_to_curve25519(xpk.data(), recipient.public_key.data()) != 0)
        throw Error(Errc::Malformed, "recipient key has no X25519 form");

    std::array<std::uint8_t, 32> eph_pk{}, eph_sk{}, shared{};
    crypto_box_keypair(eph_pk.data(), eph_sk.data());
    const int rc = crypto_scalarmult(shared.data(), eph_sk.data(), xpk.data());
    sodium_memzero(eph_sk.data(), eph_sk.size());
    if (rc != 0) throw Error(Errc::Malformed, "degenerate recipient key");

    const std::string plaintext = canonical_encode(doc);
    SealedPayload s;
    s.kind = std::move(kind);
    s.recipient = recipient.fingerprint;
    s.enc.assign(eph_pk.begin(), eph_pk.end());
    s.plaintext_digest = sha256(plaintext);

    AeadKey key = derive_key(shared, s.enc, xpk);
    sodium_memzero(shared.data(), shared.size());
    // The key is fresh per seal, so a fixed nonce is never reused under one key.
    const std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce{};
    const Bytes ad = aad(s);
    s.ciphertext.resize(plaintext.size() + crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long clen = 0;
    crypto_aead_chacha20poly1305_ietf_encrypt(s.ciphertext.data(), &clen,
                                              reinterpret_cast<const unsigned char*>(plaintext.data()),
                                              plaintext.size(), ad.data(), ad.size(), nullptr, nonce.data(),
                                              key.bytes.data());
    s.ciphertext.resize(clen);
    return s;
}

Doc open_doc(const SigningKey& recipient_key, const SealedPayload& sealed) {
    if (sodium_init() < 0) throw Error(Errc::IoError, "libsodium init failed");
    if (sealed.suite != kSealSuite) decrypt_failure("unsupported suite");
    if (sealed.enc.size() != 32 || sealed.ciphertext.size() < crypto_aead_chacha20poly1305_ietf_ABYTES)
        decrypt_failure("truncated sealed payload");

    std::array<std::uint8_t, 32> xsk = recipient_key.x25519_secret(), xpk{}, shared{};
    crypto_scalarmult_base(xpk.data(), xsk.data());
    const int rc = crypto_scalarmult(shared.data(), xsk.data(), sealed.enc.data());
    sodium_memzero(xsk.data(), xsk.size());
    if (rc != 0) decrypt_failure("degenerate ephemeral key");

    AeadKey key = derive_key(shared, sealed.enc, xpk);
    sodium_memzero(shared.data(), shared.size());
    const std::array<std::uint8_t, crypto_aead_chacha20poly1305_ietf_NPUBBYTES> nonce{};
    const Bytes ad = aad(sealed);
    Bytes plain(sealed.ciphertext.size() - crypto_aead_chacha20poly1305_ietf_ABYTES);
    unsigned long long plen = 0;
    if (crypto_aead_chacha20poly1305_ietf_decrypt(plain.data(), &plen, nullptr, sealed.ciphertext.data(),
                                                  sealed.ciphertext.size(), ad.data(), ad.size(), nonce.data(),
                                                  key.bytes.data()) != 0)
        decrypt_failure("authentication failed");
    plain.resize(plen);
    if (sha256(plain) != sealed.plaintext_digest) decrypt_failure("plaintext digest mismatch");
    try {
        return canonical_decode_strict(as_chars(plain));
    } catch (const Error&) {
        decrypt_failure("plaintext is not canonical");
    }
}

SealedPayload seal_payload(const KeyIdentity& recipient, const DataRecord& record) {
    return seal_doc(recipient, record.to_doc(), "record");
}

DataRecord open_payload(const SigningKey& recipient_key, const SealedPayload& sealed) {
    if (sealed.kind != "record") decrypt_failure("sealed payload is not a record");
    Doc d = open_doc(recipient_key, sealed);
    try {
        return DataRecord::from_doc(d);
    } catch (const Error&) {
        decrypt_failure("plaintext is not a record");
    }
}

}  // namespace props
