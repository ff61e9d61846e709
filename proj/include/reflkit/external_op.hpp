#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <string>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include "reflkit/operators.hpp"
#include "reflkit/raster_io.hpp"

namespace reflkit {

namespace detail {

using Clock = std::chrono::steady_clock;

inline int remaining_ms(Clock::time_point deadline) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    long ms = left.count();
    if (ms < 0)
        return 0;
    if (ms > 1000)
        return 1000;
    return int(ms);
}

// One child process speaking the raster wire protocol over its stdio.
class ChildProcess {
public:
    explicit ChildProcess(const std::string &command) {
        static const int sigpipe_ignored = [] {
            std::signal(SIGPIPE, SIG_IGN);
            return 0;
        }();
        (void)sigpipe_ignored;

        int to_child[2], from_child[2];
        require(pipe2(to_child, O_CLOEXEC) == 0, "external: pipe failed");
        if (pipe2(from_child, O_CLOEXEC) != 0) {
            close(to_child[0]);
            close(to_child[1]);
            fail("external: pipe failed");
        }
        pid_ = fork();
        require(pid_ >= 0, "external: fork failed");
        if (pid_ == 0) {
            // Own process group, so a group kill reaches the shell's children
            // too; dup2 clears the close-on-exec flag on the stdio slots.
            setpgid(0, 0);
            dup2(to_child[0], 0);
            dup2(from_child[1], 1);
            execl("/bin/sh", "sh", "-c", command.c_str(), (char *)nullptr);
            _exit(127);
        }
        setpgid(pid_, pid_);
        close(to_child[0]);
        close(from_child[1]);
        in_fd_ = to_child[1];
        out_fd_ = from_child[0];
        fcntl(in_fd_, F_SETFL, O_NONBLOCK);
        fcntl(out_fd_, F_SETFL, O_NONBLOCK);
    }

    ChildProcess(const ChildProcess &) = delete;
    ChildProcess &operator=(const ChildProcess &) = delete;

    ~ChildProcess() {
        if (in_fd_ >= 0)
            close(in_fd_);
        if (out_fd_ >= 0)
            close(out_fd_);
        if (pid_ > 0 && !reaped_) {
            for (int i = 0; i < 50; ++i) {
                if (try_reap())
                    return;
                usleep(10000);
            }
            kill(-pid_, SIGKILL);
            int status = 0;
            waitpid(pid_, &status, 0);
        }
    }

    void write_all(const uint8_t *data, size_t n, Clock::time_point deadline) {
        size_t done = 0;
        while (done < n) {
            struct pollfd pfd = {in_fd_, POLLOUT, 0};
            int r = poll(&pfd, 1, remaining_ms(deadline));
            if (Clock::now() >= deadline)
                timeout();
            if (r <= 0)
                continue;
            ssize_t k = write(in_fd_, data + done, n - done);
            if (k < 0) {
                if (errno == EAGAIN || errno == EINTR)
                    continue;
                child_failure("stopped reading requests");
            }
            done += size_t(k);
        }
    }

    void read_all(uint8_t *data, size_t n, Clock::time_point deadline) {
        size_t done = 0;
        while (done < n) {
            struct pollfd pfd = {out_fd_, POLLIN, 0};
            int r = poll(&pfd, 1, remaining_ms(deadline));
            if (Clock::now() >= deadline)
                timeout();
            if (r <= 0)
                continue;
            ssize_t k = read(out_fd_, data + done, n - done);
            if (k == 0)
                child_failure("closed its output stream");
            if (k < 0) {
                if (errno == EAGAIN || errno == EINTR)
                    continue;
                child_failure("read error");
            }
            done += size_t(k);
        }
    }

private:
    [[noreturn]] void timeout() {
        kill(-pid_, SIGKILL);
        int status = 0;
        waitpid(pid_, &status, 0);
        reaped_ = true;
        fail("child timed out");
    }

    [[noreturn]] void child_failure(const std::string &what) {
        std::string detail = what;
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == pid_) {
            reaped_ = true;
            if (WIFEXITED(status))
                detail += "; child exited with status " + std::to_string(WEXITSTATUS(status));
            else if (WIFSIGNALED(status))
                detail += "; child killed by signal " + std::to_string(WTERMSIG(status));
        }
        fail("child " + detail);
    }

    bool try_reap() {
        int status = 0;
        if (waitpid(pid_, &status, WNOHANG) == pid_) {
            reaped_ = true;
            return true;
        }
        return false;
    }

    pid_t pid_ = -1;
    int in_fd_ = -1, out_fd_ = -1;
    bool reaped_ = false;
};

} // namespace detail

// Declares the typed layers an external operator must produce.
struct WireLayer {
    MapKind kind = MapKind::Gray;
    Colorspace colorspace = Colorspace::Raw;
};

// Runs a shell command as the operator backend. Each patch is one
// request/response on the child's stdio in the RMAP framing; a session keeps
// one child alive across patches.
class ExternalOperator final : public PatchOperator {
public:
    ExternalOperator(std::string name, std::string command,
                     std::vector<std::string> input_layout, std::vector<WireLayer> output_layers,
                     int scale = 1, int timeout_ms = 60000)
        : name_(std::move(name)), command_(std::move(command)), in_(std::move(input_layout)),
          scale_(scale), timeout_ms_(timeout_ms) {
        std::vector<RasterMap> protos;
        for (const auto &l : output_layers)
            protos.push_back(make_map(1, 1, l.kind, l.colorspace));
        proto_ = stack_maps(std::move(protos));
    }

    std::string name() const override { return name_; }
    std::vector<std::string> input_layout() const override { return in_; }
    std::vector<std::string> output_layout() const override { return proto_.layout; }
    int scale() const override { return scale_; }

    MapStack apply(const MapStack &in) const override { return open_session()->run(in); }

    class WireSession final : public Session {
    public:
        WireSession(const ExternalOperator &op)
            : op_(&op), child_(op.command_) {}

        MapStack run(const MapStack &in) override {
            auto deadline = detail::Clock::now() +
                            std::chrono::milliseconds(op_->timeout_ms_);
            std::vector<uint8_t> frame;
            std::vector<float> payload = flatten(in);
            frame.reserve(kRmapHeaderSize + payload.size() * 4);
            frame.push_back('R');
            frame.push_back('M');
            frame.push_back('A');
            frame.push_back('P');
            detail::put_u32le(frame, uint32_t(in.width));
            detail::put_u32le(frame, uint32_t(in.height));
            detail::put_u32le(frame, uint32_t(in.total_channels));
            detail::put_u32le(frame, uint32_t(Colorspace::Raw));
            for (float f : payload)
                detail::put_u32le(frame, std::bit_cast<uint32_t>(f));
            child_.write_all(frame.data(), frame.size(), deadline);

            uint8_t header[kRmapHeaderSize];
            child_.read_all(header, kRmapHeaderSize, deadline);
            RmapHeader h = parse_rmap_header(header, kRmapHeaderSize);
            require(h.channels == op_->proto_.total_channels,
                    "wire: expected " + std::to_string(op_->proto_.total_channels) +
                        " channels, got " + std::to_string(h.channels));
            std::vector<uint8_t> bytes(h.payload_bytes());
            child_.read_all(bytes.data(), bytes.size(), deadline);
            std::vector<float> values(bytes.size() / 4);
            for (size_t i = 0; i < values.size(); ++i)
                values[i] = std::bit_cast<float>(detail::get_u32le(bytes.data() + i * 4));
            return unflatten(values, op_->proto_, h.width, h.height);
        }

    private:
        const ExternalOperator *op_;
        detail::ChildProcess child_;
    };

    std::unique_ptr<Session> open_session() const override {
        return std::make_unique<WireSession>(*this);
    }

private:
    std::string name_, command_;
    std::vector<std::string> in_;
    MapStack proto_;
    int scale_;
    int timeout_ms_;
};

} // namespace reflkit
