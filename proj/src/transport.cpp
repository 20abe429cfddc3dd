#include "spoofkit/transport.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <thread>

#include "spoofkit/errors.hpp"

namespace spoofkit {

std::string_view fault_kind_name(FaultKind kind) {
  switch (kind) {
    case FaultKind::send_error: return "send_error";
    case FaultKind::drop_response: return "drop_response";
    case FaultKind::nack: return "nack";
    case FaultKind::crash: return "crash";
  }
  return "unknown";
}

class MockTransport::MockConnection : public Connection {
 public:
  MockConnection(std::shared_ptr<MockApp> app, const FaultPlan& faults,
                 std::shared_ptr<SentLog> sent)
      : app_(std::move(app)), faults_(faults.faults), sent_(std::move(sent)) {}

  void send(const std::string& line) override {
    if (detached_) throw TransportError("connection detached");
    const std::size_t index = index_++;
    const auto fault = faults_.find(index);
    if (fault != faults_.end()) {
      switch (fault->second) {
        case FaultKind::send_error:
          throw TransportError("send failed");
        case FaultKind::crash:
          crashed_ = true;
          break;
        case FaultKind::nack: {
          std::uint64_t ref = 0;
          const Json j = Json::parse(line, nullptr, false);
          if (j.is_object() && j.contains("seq") && j["seq"].is_number_unsigned()) {
            ref = j["seq"].get<std::uint64_t>();
          }
          inbox_.push_back(encode(AgentMessage{msg::Nack{ref, "injected fault"}}));
          return;
        }
        case FaultKind::drop_response:
          sent_->append(line);
          app_->deliver_line(line);
          return;
      }
    }
    if (crashed_) return;
    sent_->append(line);
    for (auto& reply : app_->deliver_line(line)) inbox_.push_back(std::move(reply));
  }

  std::optional<std::string> receive(std::chrono::milliseconds) override {
    if (inbox_.empty()) return std::nullopt;
    std::string line = std::move(inbox_.front());
    inbox_.pop_front();
    return line;
  }

  void detach() override {
    detached_ = true;
    inbox_.clear();
  }

 private:
  std::shared_ptr<MockApp> app_;
  std::map<std::size_t, FaultKind> faults_;
  std::shared_ptr<SentLog> sent_;
  std::deque<std::string> inbox_;
  std::size_t index_ = 0;
  bool crashed_ = false;
  bool detached_ = false;
};

MockTransport::MockTransport(MockDevice& device, FaultPlan faults)
    : device_(device), faults_(std::move(faults)),
      sent_(std::make_shared<SentLog>()) {}

std::unique_ptr<Connection> MockTransport::attach(const std::string& process) {
  if (faults_.refuse_attach) throw AttachError("transport refused attach to " + process);
  auto app = device_.find(process);
  if (!app) throw AttachError("no such process: " + process);
  app->on_attach();
  return std::make_unique<MockConnection>(std::move(app), faults_, sent_);
}

std::vector<std::string> MockTransport::sent() const {
  std::lock_guard lock(sent_->mu);
  return sent_->lines;
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

// Time the agent command gets to fail before attach is considered successful.
constexpr int kAttachGraceMs = 200;

class PipeConnection : public Connection {
 public:
  PipeConnection(int fd, pid_t pid) : fd_(fd), pid_(pid) {}
  ~PipeConnection() override { detach(); }

  void send(const std::string& line) override {
    if (fd_ < 0) throw TransportError("connection detached");
    std::string framed = line + "\n";
    std::size_t off = 0;
    while (off < framed.size()) {
      const ssize_t n = ::send(fd_, framed.data() + off, framed.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(std::string("send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::optional<std::string> receive(std::chrono::milliseconds timeout) override {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      if (fd_ < 0 || eof_) return std::nullopt;
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, static_cast<int>(std::max<std::int64_t>(0, left.count())));
      if (r < 0 && errno == EINTR) continue;
      if (r <= 0) return std::nullopt;
      std::array<char, 4096> chunk{};
      const ssize_t n = ::recv(fd_, chunk.data(), chunk.size(), 0);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        eof_ = true;
        return std::nullopt;
      }
      buffer_.append(chunk.data(), static_cast<std::size_t>(n));
    }
  }

  void detach() override {
    if (fd_ >= 0) {
      ::close(fd_);
      fd_ = -1;
    }
    if (pid_ > 0) {
      int status = 0;
      bool exited = false;
      for (int i = 0; i < 50 && !exited; ++i) {
        exited = ::waitpid(pid_, &status, WNOHANG) != 0;
        if (!exited) std::this_thread::sleep_for(std::chrono::milliseconds(10));
      }
      ::kill(-pid_, SIGKILL);
      if (!exited) ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
  }

 private:
  int fd_;
  pid_t pid_;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace

PipeTransport::PipeTransport(std::string command) : command_(std::move(command)) {}

std::unique_ptr<Connection> PipeTransport::attach(const std::string& process) {
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw AttachError(std::string("socketpair failed: ") + std::strerror(errno));
  }
  const std::string line = command_ + " " + shell_quote(process);
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    throw AttachError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    // Own process group, so detach reaps whatever the agent command spawned.
    ::setpgid(0, 0);
    ::dup2(fds[1], STDIN_FILENO);
    ::dup2(fds[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", line.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fds[1]);

  // An agent that cannot reach the process exits before speaking.
  pollfd p{fds[0], POLLIN, 0};
  if (::poll(&p, 1, kAttachGraceMs) > 0 && (p.revents & (POLLHUP | POLLERR)) != 0) {
    char probe;
    if (::recv(fds[0], &probe, 1, MSG_PEEK | MSG_DONTWAIT) <= 0) {
      ::close(fds[0]);
      int status = 0;
      ::waitpid(pid, &status, 0);
      ::kill(-pid, SIGKILL);
      const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
      throw AttachError("agent command exited with status " + std::to_string(code) +
                        " for process " + process);
    }
  }
  return std::make_unique<PipeConnection>(fds[0], pid);
}

}  // namespace spoofkit
