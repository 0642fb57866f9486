#pragma once

#include <string>
#include <string_view>

#include "props/core/crypto.hpp"
#include "props/core/record.hpp"

namespace props {

/// Suite identifier carried in every sealed payload header.
inline constexpr std::string_view kSealSuite = "X25519-HKDF-SHA256-ChaCha20Poly1305";

/// Hybrid public-key encryption of a canonical document to one recipient.
/// plaintext_digest = sha256(plaintext) travels in the clear so linkage can
/// be checked without the recipient key.
struct SealedPayload {
    std::string suite{kSealSuite};
    std::string kind;  // "record" or "output"
    Digest recipient;  // recipient identity fingerprint
    Bytes enc;         // ephemeral X25519 public key
    Bytes ciphertext;  // AEAD output including the 16-byte tag
    Digest plaintext_digest;

    Doc to_doc() const;
    static SealedPayload from_doc(const Doc& doc);
    friend bool operator==(const SealedPayload&, const SealedPayload&) = default;
};

/// HKDF-SHA256 (RFC 5869) on libsodium's HMAC-SHA256.
Bytes hkdf_sha256(ByteView salt, ByteView ikm, ByteView info, std::size_t length);

/// Seals the canonical encoding of `doc`. Throws Malformed unless
/// `recipient` is a well-formed recipient identity.
SealedPayload seal_doc(const KeyIdentity& recipient, const Doc& doc, std::string kind);
/// Opens and checks plaintext_digest. Throws DecryptFailure.
Doc open_doc(const SigningKey& recipient_key, const SealedPayload& sealed);

SealedPayload seal_payload(const KeyIdentity& recipient, const DataRecord& record);
DataRecord open_payload(const SigningKey& recipient_key, const SealedPayload& sealed);

}  // namespace props
