#include "props/scenario/keys.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

#include "props/core/error.hpp"

namespace props {

namespace fs = std::filesystem;

namespace {

void write_exclusive(const fs::path& path, const std::string& data, mode_t mode) {
    int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, mode);
    if (fd < 0) {
        if (errno == EEXIST) throw Error(Errc::Exists, path.string() + " already exists");
        throw Error(Errc::IoError, path.string() + ": " + std::strerror(errno));
    }
    ::fchmod(fd, mode);  // umask may have narrowed or widened it
    std::size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::write(fd, data.data() + off, data.size() - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            throw Error(Errc::IoError, path.string() + ": " + std::strerror(errno));
        }
        off += static_cast<std::size_t>(n);
    }
    ::close(fd);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

KeyFiles key_paths(const fs::path& dir, const std::string& name) {
    return {dir / (name + ".key"), dir / (name + ".identity.json")};
}

KeyFiles write_key(const fs::path& dir, const std::string& name, const SigningKey& key) {
    if (name.empty() || name.find('/') != std::string::npos || name.front() == '.')
        throw Error(Errc::ConfigError, "invalid key name '" + name + "'");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(Errc::IoError, dir.string() + ": " + ec.message());
    KeyFiles kf = key_paths(dir, name);
    if (fs::exists(kf.secret) || fs::exists(kf.identity))
        throw Error(Errc::Exists, "key '" + name + "' already exists in " + dir.string());
    Bytes seed = key.seed();
    std::string secret =
        canonical_encode(Doc{{"role", std::string(to_string(key.role()))}, {"seed", to_hex(seed)}}) + "\n";
    std::fill(seed.begin(), seed.end(), 0);
    write_exclusive(kf.secret, secret, 0600);
    std::fill(secret.begin(), secret.end(), '\0');
    write_exclusive(kf.identity, pretty_json(Doc{{"identity", key.identity().to_doc()}, {"name", name}}) + "\n", 0644);
    return kf;
}

KeyFiles cmd_keygen(const fs::path& dir, Role role, const std::string& name) {
    return write_key(dir, name, keygen(role));
}

SigningKey read_secret_key(const fs::path& path) {
    std::string text = slurp(path);
    Doc d = canonical_decode(text);
    std::fill(text.begin(), text.end(), '\0');
    ObjectReader r(d, "key file");
    Role role = role_from_string(r.string("role"));
    Bytes seed = from_hex(r.string("seed"));
    r.finish();
    if (seed.size() != 32) throw Error(Errc::Malformed, path.string() + ": seed must be 32 bytes");
    SigningKey key = SigningKey::from_seed(role, seed);
    std::fill(seed.begin(), seed.end(), 0);
    return key;
}

KeyIdentity read_identity(const fs::path& path) {
    Doc d = canonical_decode(slurp(path));
    ObjectReader r(d, "identity file");
    KeyIdentity id = KeyIdentity::from_doc(r.get("identity"));
    r.string("name");
    r.finish();
    if (!id.well_formed()) throw Error(Errc::Malformed, path.string() + ": fingerprint does not match key");
    return id;
}

}  // namespace props
