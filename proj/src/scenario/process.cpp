#include "props/scenario/process.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstring>
#include <fstream>
#include <thread>

#include "props/core/error.hpp"

extern char** environ;

namespace props {

namespace fs = std::filesystem;

ChildProcess::ChildProcess(const fs::path& exe, const std::vector<std::string>& args) {
    std::vector<std::string> argv_s{exe.string()};
    argv_s.insert(argv_s.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_s) argv.push_back(s.data());
    argv.push_back(nullptr);
    int rc = ::posix_spawn(&pid_, exe.c_str(), nullptr, nullptr, argv.data(), environ);
    if (rc != 0) {
        pid_ = -1;
        throw Error(Errc::IoError, "cannot start " + exe.string() + ": " + std::strerror(rc));
    }
}

ChildProcess& ChildProcess::operator=(ChildProcess&& other) noexcept {
    if (this != &other) {
        stop();
        pid_ = other.pid_;
        other.pid_ = -1;
    }
    return *this;
}

bool ChildProcess::alive() const {
    if (pid_ <= 0) return false;
    int status = 0;
    return ::waitpid(pid_, &status, WNOHANG) == 0;
}

int ChildProcess::stop(std::chrono::milliseconds grace) {
    if (pid_ <= 0) return -1;
    ::kill(pid_, SIGTERM);
    int status = -1;
    const auto until = std::chrono::steady_clock::now() + grace;
    while (true) {
        pid_t r = ::waitpid(pid_, &status, WNOHANG);
        if (r == pid_ || r < 0) break;
        if (std::chrono::steady_clock::now() >= until) {
            ::kill(pid_, SIGKILL);
            ::waitpid(pid_, &status, 0);
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    pid_ = -1;
    return status;
}

net::Endpoint wait_for_port_file(const fs::path& path, const ChildProcess& child, std::chrono::milliseconds timeout) {
    const auto until = std::chrono::steady_clock::now() + timeout;
    while (std::chrono::steady_clock::now() < until) {
        std::ifstream in(path);
        std::string line;
        if (in && std::getline(in, line) && !line.empty()) return net::Endpoint::parse(line);
        if (!child.alive()) throw Error(Errc::ConnectFailure, "helper exited before publishing " + path.string());
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    throw Error(Errc::Timeout, "no port published at " + path.string());
}

void write_port_file(const fs::path& path, const net::Endpoint& ep) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        out << ep.str() << "\n";
        if (!out) throw Error(Errc::IoError, "cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

namespace {

sigset_t termination_set() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    return set;
}

}  // namespace

void block_termination_signals() {
    sigset_t set = termination_set();
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

void wait_for_termination() {
    sigset_t set = termination_set();
    int sig = 0;
    sigwait(&set, &sig);
}

fs::path self_executable() { return fs::read_symlink("/proc/self/exe"); }

}  // namespace props
