#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>

#include "props/core/bytes.hpp"
#include "props/core/canonical.hpp"

namespace props::net {

using Millis = std::chrono::milliseconds;

inline constexpr std::uint32_t kMaxFrameBytes = 16u * 1024 * 1024;
inline constexpr Millis kDefaultDeadline{5000};

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;

    /// "host:port"; throws Malformed.
    static Endpoint parse(std::string_view text);
    std::string str() const;

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

/// Owning socket descriptor.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    Socket(Socket&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Socket& operator=(Socket&& o) noexcept;
    ~Socket() { close(); }

    int fd() const noexcept { return fd_; }
    bool valid() const noexcept { return fd_ >= 0; }
    void close() noexcept;

private:
    int fd_ = -1;
};

/// Throws ConnectFailure when the endpoint refuses or the deadline passes.
Socket connect_tcp(const Endpoint& ep, Millis deadline = kDefaultDeadline);

void write_all(const Socket& s, ByteView data);

/// One frame: 4-byte big-endian length, then the payload.
Bytes encode_frame(ByteView payload);
void write_frame(const Socket& s, ByteView payload);

/// Reads one frame payload. Throws MalformedFrame on a truncated frame or a
/// length over kMaxFrameBytes, Timeout if nothing complete arrives in time.
Bytes read_frame(const Socket& s, Millis deadline = kDefaultDeadline);

/// Frame payloads are canonical documents.
void write_message(const Socket& s, const Doc& msg);
/// Throws MalformedFrame when the payload is not a canonical document.
Doc decode_message(ByteView payload);
Doc read_message(const Socket& s, Millis deadline = kDefaultDeadline);

/// Wire error reply {"code":..., "type":"error"}.
Doc error_message(std::string_view code);

/// Multi-connection TCP listener. Each accepted connection is handed to the
/// handler on its own thread; shutdown() stops accepting, resets live
/// connections and joins all threads.
class TcpServer {
public:
    using Handler = std::function<void(Socket&)>;

    /// Throws BindFailure when the endpoint is taken. Port 0 picks a free port.
    TcpServer(const Endpoint& ep, Handler handler);
    TcpServer(const TcpServer&) = delete;
    TcpServer& operator=(const TcpServer&) = delete;
    ~TcpServer();

    Endpoint endpoint() const { return bound_; }
    /// Idempotent.
    void shutdown();
    bool running() const noexcept { return running_.load(); }

private:
    void accept_loop();

    Endpoint bound_;
    Handler handler_;
    Socket listener_;
    std::atomic<bool> running_{false};
    std::thread acceptor_;
    std::mutex mu_;
    std::set<int> live_fds_;
    std::list<std::thread> workers_;
};

}  // namespace props::net
