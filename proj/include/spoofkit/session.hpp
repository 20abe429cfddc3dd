#pragma once

// Session lifecycle against one target process:
//   CREATED -> ATTACHED -> INJECTED -> RUNNING -> RESTORING -> CLOSED
// with FAILED reachable from any state. A session that fails after attach
// makes exactly one restore attempt and is then sealed.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "spoofkit/hookplan.hpp"
#include "spoofkit/protocol.hpp"
#include "spoofkit/signal.hpp"
#include "spoofkit/transport.hpp"

namespace spoofkit {

enum class SessionState : std::uint8_t { created, attached, injected, running, restoring, closed, failed };
enum class RestoreOutcome : std::uint8_t { verified, attempted, not_needed };
enum class ClockMode : std::uint8_t { virtual_time, wall };

std::string_view state_name(SessionState state);
std::string_view outcome_name(RestoreOutcome outcome);
std::optional<ClockMode> clock_mode_from_name(std::string_view name);

/// Session time in nanoseconds since the session was created.
class SessionClock {
 public:
  virtual ~SessionClock() = default;
  virtual std::int64_t now_ns() const = 0;
  virtual void sleep_until(std::int64_t t_ns) = 0;
  /// Called after a receive timed out; the virtual clock charges the wait.
  virtual void charge_timeout(std::chrono::milliseconds timeout) = 0;
};

/// Advances only when told to; never sleeps.
class VirtualClock : public SessionClock {
 public:
  std::int64_t now_ns() const override { return now_; }
  void sleep_until(std::int64_t t_ns) override;
  void charge_timeout(std::chrono::milliseconds timeout) override;

 private:
  std::int64_t now_ = 0;
};

class WallClock : public SessionClock {
 public:
  WallClock();
  std::int64_t now_ns() const override;
  void sleep_until(std::int64_t t_ns) override;
  void charge_timeout(std::chrono::milliseconds) override {}

 private:
  std::chrono::steady_clock::time_point start_;
};

struct LogEntry {
  std::int64_t t_ns = 0;
  std::string text;
  bool operator==(const LogEntry&) const = default;
};

struct ObservedEvent {
  std::string name;
  std::int64_t t_ns = 0;         // app-side timestamp
  std::int64_t received_ns = 0;  // session clock at receipt
  bool operator==(const ObservedEvent&) const = default;
};

struct SessionReport {
  std::string session_id;
  std::string plan_id;
  SessionState state = SessionState::created;
  std::map<SensorType, std::int64_t> samples_sent;
  std::vector<std::pair<SystemKey, PropertyValue>> properties_applied;
  std::int64_t property_pushes = 0;
  std::map<SystemKey, PropertyValue> last_pushed;
  std::vector<ObservedEvent> app_events;
  std::optional<RestoreOutcome> restore_outcome;
  double duration_s = 0.0;
  std::optional<std::string> failure_reason;
  std::vector<LogEntry> log;
};

Json report_to_json(const SessionReport& report);
std::string report_to_document(const SessionReport& report);

struct SessionOptions {
  ClockMode clock = ClockMode::virtual_time;
  std::chrono::milliseconds timeout{5000};
  /// Stored traces streamed instead of synthesizing the hook's signal.
  std::map<SensorType, SensorTrace> replay;
};

/// All public operations are mutually excluded; concurrent callers on one
/// session are serialized.
class Session {
 public:
  Session(HookPlan plan, Transport& transport, SessionOptions options = {});
  ~Session();
  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const HookPlan& plan() const { return plan_; }

  SessionState state() const;
  std::optional<RestoreOutcome> restore_outcome() const;
  std::vector<LogEntry> log() const;
  std::map<SystemKey, PropertyValue> baselines() const;
  SessionReport report() const;

  /// CREATED -> ATTACHED. Throws AttachError (session FAILED) or IllegalState.
  void attach();
  /// ATTACHED -> INJECTED. Captures baselines, then applies the plan.
  /// Throws InjectError (session FAILED after one restore attempt) or IllegalState.
  void inject();
  /// INJECTED -> RUNNING -> RESTORING -> CLOSED. Transport failures end in
  /// FAILED with failure_reason set; the report is returned either way.
  /// Throws IllegalState, or InvalidParams for a negative duration.
  SessionReport run(double duration_s);
  /// Restores from ATTACHED or INJECTED. Throws IllegalState otherwise.
  RestoreOutcome restore();

 private:
  struct Reply {
    enum class Kind { ack, nack, value, timeout } kind = Kind::timeout;
    std::string reason;
    std::optional<PropertyValue> value;
  };

  void require(SessionState expected, const char* op) const;
  void note(std::string text);
  void fail(std::string reason);
  std::uint64_t send(HostMessage message);
  Reply await(std::uint64_t ref);
  void drain();
  void handle_incoming(const std::string& line, std::optional<std::uint64_t> awaited, Reply* out);
  RestoreOutcome restore_locked();
  SessionReport report_locked() const;

  mutable std::mutex mu_;
  std::string id_;
  HookPlan plan_;
  Transport& transport_;
  SessionOptions options_;
  std::unique_ptr<SessionClock> clock_;
  std::unique_ptr<Connection> conn_;
  SessionState state_ = SessionState::created;
  std::optional<RestoreOutcome> outcome_;
  std::optional<std::string> failure_reason_;
  std::vector<LogEntry> log_;
  std::map<SystemKey, PropertyValue> baselines_;
  std::uint64_t next_seq_ = 1;
  std::optional<std::string> pending_failure_;
  std::uint64_t last_event_seq_ = 0;
  bool restore_tried_ = false;

  std::map<SensorType, std::int64_t> samples_sent_;
  std::vector<std::pair<SystemKey, PropertyValue>> properties_applied_;
  std::int64_t property_pushes_ = 0;
  std::map<SystemKey, PropertyValue> last_pushed_;
  std::vector<ObservedEvent> events_;
  double duration_s_ = 0.0;
};

std::unique_ptr<Session> create_session(HookPlan plan, Transport& transport,
                                        ClockMode clock = ClockMode::virtual_time);

}  // namespace spoofkit
