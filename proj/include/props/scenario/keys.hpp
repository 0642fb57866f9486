#pragma once

#include <filesystem>
#include <string>

#include "props/core/crypto.hpp"

namespace props {

/// Key files in a directory:
///   <name>.key            {"role","seed"} mode 0600
///   <name>.identity.json  {"identity","name"}
struct KeyFiles {
    std::filesystem::path secret;
    std::filesystem::path identity;
};

KeyFiles key_paths(const std::filesystem::path& dir, const std::string& name);

/// Writes both files. Throws Exists when either is already present and
/// IoError on filesystem failures.
KeyFiles write_key(const std::filesystem::path& dir, const std::string& name, const SigningKey& key);

/// Generates a fresh key of `role` and writes it.
KeyFiles cmd_keygen(const std::filesystem::path& dir, Role role, const std::string& name);

SigningKey read_secret_key(const std::filesystem::path& path);
/// Reads and re-validates an identity file (fingerprint must match the key).
KeyIdentity read_identity(const std::filesystem::path& path);

}  // namespace props
