#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "props/net/framing.hpp"

namespace props {

/// A spawned helper process; terminated and reaped on destruction.
class ChildProcess {
public:
    ChildProcess() = default;
    /// Throws IoError when the executable cannot be started.
    ChildProcess(const std::filesystem::path& exe, const std::vector<std::string>& args);
    ChildProcess(ChildProcess&& other) noexcept : pid_(other.pid_) { other.pid_ = -1; }
    ChildProcess& operator=(ChildProcess&& other) noexcept;
    ~ChildProcess() { stop(); }

    pid_t pid() const noexcept { return pid_; }
    bool alive() const;
    /// SIGTERM, then SIGKILL after `grace`. Returns the wait status (or -1).
    int stop(std::chrono::milliseconds grace = std::chrono::milliseconds(2000));

private:
    pid_t pid_ = -1;
};

/// Polls until `path` holds "host:port" (written by a serve-* command after
/// binding). Throws Timeout, or ConnectFailure when `child` exits first.
net::Endpoint wait_for_port_file(const std::filesystem::path& path, const ChildProcess& child,
                                 std::chrono::milliseconds timeout = std::chrono::milliseconds(10000));

/// Writes "host:port" atomically (temp file plus rename).
void write_port_file(const std::filesystem::path& path, const net::Endpoint& ep);

/// Blocks SIGINT and SIGTERM in the calling thread; call before starting
/// any threads so they inherit the mask.
void block_termination_signals();
/// Waits for SIGINT or SIGTERM (which must already be blocked).
void wait_for_termination();

/// Path of the running executable.
std::filesystem::path self_executable();

}  // namespace props
