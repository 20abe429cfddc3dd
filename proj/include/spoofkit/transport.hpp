#pragma once

// Transports carry newline-free protocol lines between the host and one
// agent. A connection is an ordered, reliable channel: lines arrive in send
// order or not at all.

#include <chrono>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spoofkit/mock_device.hpp"

namespace spoofkit {

class Connection {
 public:
  virtual ~Connection() = default;
  /// Throws TransportError when the line cannot be delivered.
  virtual void send(const std::string& line) = 0;
  /// Next agent line, or nullopt when none arrives within `timeout`.
  virtual std::optional<std::string> receive(std::chrono::milliseconds timeout) = 0;
  virtual void detach() = 0;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Throws AttachError when the process cannot be reached.
  virtual std::unique_ptr<Connection> attach(const std::string& process) = 0;
};

enum class FaultKind : std::uint8_t {
  send_error,     // send throws TransportError; the line is lost
  drop_response,  // the app handles the line but every reply is discarded
  nack,           // the line is lost and a synthetic nack comes back
  crash,          // the line and everything after it go unanswered
};

std::string_view fault_kind_name(FaultKind kind);

/// Faults keyed by the 0-based index of the host line on a connection.
struct FaultPlan {
  std::map<std::size_t, FaultKind> faults;
  bool refuse_attach = false;
};

/// In-process transport over a MockDevice. Replies are produced synchronously
/// on send, so receive never blocks.
class MockTransport : public Transport {
 public:
  explicit MockTransport(MockDevice& device, FaultPlan faults = {});

  std::unique_ptr<Connection> attach(const std::string& process) override;

  /// Every host line sent on any connection of this transport, in order.
  std::vector<std::string> sent() const;

 private:
  class MockConnection;

  struct SentLog {
    std::mutex mu;
    std::vector<std::string> lines;
    void append(const std::string& line) {
      std::lock_guard lock(mu);
      lines.push_back(line);
    }
  };

  MockDevice& device_;
  FaultPlan faults_;
  std::shared_ptr<SentLog> sent_;
};

/// External adapter: runs `command` through /bin/sh with the target process
/// name appended as the last argument, writes host lines to its stdin and
/// reads agent lines from its stdout.
class PipeTransport : public Transport {
 public:
  explicit PipeTransport(std::string command);

  std::unique_ptr<Connection> attach(const std::string& process) override;

 private:
  std::string command_;
};

}  // namespace spoofkit
