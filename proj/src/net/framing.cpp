#include "props/net/framing.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>

#include "props/core/error.hpp"

namespace props::net {

namespace {

using Clock = std::chrono::steady_clock;

int remaining_ms(Clock::time_point until) {
    auto left = std::chrono::duration_cast<Millis>(until - Clock::now()).count();
    return left < 0 ? 0 : static_cast<int>(left);
}

sockaddr_in to_sockaddr(const Endpoint& ep) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(ep.port);
    std::string host = ep.host == "localhost" ? "127.0.0.1" : ep.host;
    if (inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
        throw Error(Errc::Malformed, "unsupported host '" + ep.host + "' (IPv4 literal expected)");
    return addr;
}

// Reads exactly `n` bytes. Returns the count read before EOF.
std::size_t read_exact(const Socket& s, std::uint8_t* out, std::size_t n, Clock::time_point until) {
    std::size_t got = 0;
    while (got < n) {
        pollfd pfd{s.fd(), POLLIN, 0};
        int rc = ::poll(&pfd, 1, remaining_ms(until));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::IoError, std::strerror(errno));
        }
        if (rc == 0) throw Error(Errc::Timeout, "read deadline exceeded");
        ssize_t r = ::recv(s.fd(), out + got, n - got, 0);
        if (r < 0) {
            if (errno == EINTR || errno == EAGAIN) continue;
            if (errno == ECONNRESET) return got;
            throw Error(Errc::IoError, std::strerror(errno));
        }
        if (r == 0) return got;
        got += static_cast<std::size_t>(r);
    }
    return got;
}

}  // namespace

Endpoint Endpoint::parse(std::string_view text) {
    auto colon = text.rfind(':');
    if (colon == std::string_view::npos || colon == 0)
        throw Error(Errc::Malformed, "endpoint must be host:port");
    Endpoint ep;
    ep.host = std::string(text.substr(0, colon));
    auto port_text = text.substr(colon + 1);
    unsigned port = 0;
    auto res = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (res.ec != std::errc{} || res.ptr != port_text.data() + port_text.size() || port > 65535)
        throw Error(Errc::Malformed, "invalid port in endpoint");
    ep.port = static_cast<std::uint16_t>(port);
    return ep;
}

std::string Endpoint::str() const { return host + ":" + std::to_string(port); }

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
}

void Socket::close() noexcept {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Socket connect_tcp(const Endpoint& ep, Millis deadline) {
    sockaddr_in addr = to_sockaddr(ep);
    Socket s(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!s.valid()) throw Error(Errc::ConnectFailure, std::strerror(errno));
    int flags = ::fcntl(s.fd(), F_GETFL, 0);
    ::fcntl(s.fd(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(s.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr);
    if (rc < 0 && errno != EINPROGRESS)
        throw Error(Errc::ConnectFailure, ep.str() + ": " + std::strerror(errno));
    if (rc < 0) {
        pollfd pfd{s.fd(), POLLOUT, 0};
        rc = ::poll(&pfd, 1, static_cast<int>(deadline.count()));
        if (rc <= 0) throw Error(Errc::ConnectFailure, ep.str() + ": connect timed out");
        int err = 0;
        socklen_t len = sizeof err;
        ::getsockopt(s.fd(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0) throw Error(Errc::ConnectFailure, ep.str() + ": " + std::strerror(err));
    }
    ::fcntl(s.fd(), F_SETFL, flags);
    int one = 1;
    ::setsockopt(s.fd(), IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
    return s;
}

void write_all(const Socket& s, ByteView data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t w = ::send(s.fd(), data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (w < 0) {
            if (errno == EINTR) continue;
            throw Error(Errc::IoError, std::string("send: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(w);
    }
}

Bytes encode_frame(ByteView payload) {
    if (payload.size() > kMaxFrameBytes) throw Error(Errc::MalformedFrame, "frame exceeds 16 MiB cap");
    auto n = static_cast<std::uint32_t>(payload.size());
    Bytes out{static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
              static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)};
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

void write_frame(const Socket& s, ByteView payload) { write_all(s, encode_frame(payload)); }

Bytes read_frame(const Socket& s, Millis deadline) {
    auto until = Clock::now() + deadline;
    std::uint8_t hdr[4];
    std::size_t got = read_exact(s, hdr, 4, until);
    if (got == 0) throw Error(Errc::MalformedFrame, "connection closed before frame");
    if (got < 4) throw Error(Errc::MalformedFrame, "truncated frame header");
    std::uint32_t n = (std::uint32_t{hdr[0]} << 24) | (std::uint32_t{hdr[1]} << 16) |
                      (std::uint32_t{hdr[2]} << 8) | std::uint32_t{hdr[3]};
    if (n > kMaxFrameBytes) throw Error(Errc::MalformedFrame, "frame length over cap");
    Bytes payload(n);
    if (read_exact(s, payload.data(), n, until) != n) throw Error(Errc::MalformedFrame, "truncated frame body");
    return payload;
}

void write_message(const Socket& s, const Doc& msg) { write_frame(s, as_bytes(canonical_encode(msg))); }

Doc decode_message(ByteView payload) {
    try {
        return canonical_decode_strict(as_chars(payload));
    } catch (const Error& e) {
        throw Error(Errc::MalformedFrame, std::string("frame payload: ") + e.what());
    }
}

Doc read_message(const Socket& s, Millis deadline) { return decode_message(read_frame(s, deadline)); }

Doc error_message(std::string_view code) { return Doc{{"code", std::string(code)}, {"type", "error"}}; }

TcpServer::TcpServer(const Endpoint& ep, Handler handler) : handler_(std::move(handler)) {
    sockaddr_in addr = to_sockaddr(ep);
    listener_ = Socket(::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0));
    if (!listener_.valid()) throw Error(Errc::BindFailure, std::strerror(errno));
    int one = 1;
    ::setsockopt(listener_.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
        throw Error(Errc::BindFailure, ep.str() + ": " + std::strerror(errno));
    if (::listen(listener_.fd(), 64) < 0) throw Error(Errc::BindFailure, std::strerror(errno));
    socklen_t len = sizeof addr;
    ::getsockname(listener_.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
    bound_ = Endpoint{ep.host, ntohs(addr.sin_port)};
    running_ = true;
    acceptor_ = std::thread([this] { accept_loop(); });
}

TcpServer::~TcpServer() { shutdown(); }

void TcpServer::accept_loop() {
    while (running_) {
        pollfd pfd{listener_.fd(), POLLIN, 0};
        int rc = ::poll(&pfd, 1, 50);
        if (rc <= 0 || !running_) continue;
        int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
        if (fd < 0) continue;
        std::lock_guard lock(mu_);
        if (!running_) {
            ::close(fd);
            break;
        }
        live_fds_.insert(fd);
        workers_.emplace_back([this, fd] {
            Socket conn(fd);
            try {
                handler_(conn);
            } catch (...) {
                // A failed connection never takes the server down.
            }
            std::lock_guard lk(mu_);
            live_fds_.erase(fd);
        });
    }
}

void TcpServer::shutdown() {
    if (!running_.exchange(false)) return;
    if (acceptor_.joinable()) acceptor_.join();
    listener_.close();
    std::list<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
        workers.swap(workers_);
    }
    for (auto& t : workers)
        if (t.joinable()) t.join();
}

}  // namespace props::net
