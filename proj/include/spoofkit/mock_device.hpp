#pragma once

// In-process stand-in for an instrumented device: mock apps with fixed
// baselines and condition -> event behavior rules, reachable through the same
// wire protocol a real agent speaks.
//
// Config document:
//   {"process": "com.example.app",
//    "baseline": {"battery.level": 87, ...},
//    "rules": [{"name": "battery_saver",
//               "when": {"threshold": {"key": "battery.level", "op": "<", "value": 20}},
//               "emit": "battery_saver_on", "flag": "saver"}],
//    "tamper_mode": "none"}
// Condition forms:
//   {"threshold": {"key", "op", "value"}}
//   {"magnitude": {"sensor", "op", "value", "sustain_samples"?}}
//   {"delta": {"sensor": "step_counter", "min_increase", "window_s"}}

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/hookplan.hpp"
#include "spoofkit/protocol.hpp"

namespace spoofkit {

enum class Comparator : std::uint8_t { lt, le, gt, ge, eq, ne };

std::string_view comparator_symbol(Comparator op);
std::optional<Comparator> comparator_from_symbol(std::string_view symbol);
bool compare(double lhs, Comparator op, double rhs);

struct ThresholdCondition {
  SystemKey key = SystemKey::battery_level;
  Comparator op = Comparator::lt;
  PropertyValue value;
  bool operator==(const ThresholdCondition&) const = default;
};

struct MagnitudeCondition {
  SensorType sensor = SensorType::accelerometer;
  Comparator op = Comparator::gt;
  double value = 0.0;
  int sustain_samples = 1;  // >= 1
  bool operator==(const MagnitudeCondition&) const = default;
};

/// Holds when the counter rose by at least min_increase within the last
/// window_s seconds of sample time.
struct DeltaCondition {
  SensorType sensor = SensorType::step_counter;
  double min_increase = 0.0;
  double window_s = 0.0;
  bool operator==(const DeltaCondition&) const = default;
};

using Condition = std::variant<ThresholdCondition, MagnitudeCondition, DeltaCondition>;

struct BehaviorRule {
  std::string name;
  Condition when;
  std::optional<std::string> emit;  // at least one of emit / flag
  std::optional<std::string> flag;  // tracks the condition's truth
  bool operator==(const BehaviorRule&) const = default;
};

enum class TamperMode : std::uint8_t { none, reject_injection };

struct MockAppConfig {
  std::string process;
  std::map<SystemKey, PropertyValue> baseline;  // every key, defaults filled in
  std::vector<BehaviorRule> rules;
  TamperMode tamper_mode = TamperMode::none;
};

/// Baseline used for keys a config leaves out.
PropertyValue default_baseline(SystemKey key);

/// Throws ConfigError.
MockAppConfig parse_app_config(std::string_view text);

struct AppEvent {
  std::uint64_t seq = 0;
  std::string name;
  std::int64_t t_ns = 0;
  bool operator==(const AppEvent&) const = default;
};

/// One simulated target process. Messages are processed serially; replies
/// come first, then any events the message triggered.
class MockApp {
 public:
  explicit MockApp(MockAppConfig config);

  const std::string& process() const { return config_.process; }
  const MockAppConfig& config() const { return config_; }

  /// A fresh agent connection: host sequence numbering starts over.
  void on_attach();

  std::vector<AgentMessage> deliver(const HostMessage& message);
  /// Decodes, delivers and encodes. A line that fails to decode is answered
  /// with a nack carrying the decoder's reason and the line's seq when it is
  /// readable, 0 otherwise.
  std::vector<std::string> deliver_line(std::string_view line);

  /// Perceived value: override first, then baseline.
  PropertyValue perceived(SystemKey key) const;
  /// Latest delivered sample, or the baseline stream value; nullopt for a
  /// frozen step counter with no samples.
  std::optional<std::vector<double>> perceived_sample(SensorType sensor) const;

  bool plan_active() const;
  std::optional<std::string> active_plan_id() const;
  std::vector<AppEvent> event_log() const;
  bool flag(std::string_view name) const;
  /// Types of every host message delivered, in order.
  std::vector<std::string> received() const;
  std::map<SystemKey, PropertyValue> overrides() const;

 private:
  struct RuleState {
    bool last = false;
    int streak = 0;
    std::deque<std::pair<std::int64_t, double>> window;
  };

  std::vector<AgentMessage> handle(const HostMessage& message);
  void observe_sample(const msg::Sample& s);
  void clear_streams();
  void evaluate(std::vector<AgentMessage>& out);
  bool holds(std::size_t index) const;

  mutable std::mutex mu_;
  MockAppConfig config_;
  std::optional<HookPlan> plan_;
  std::map<SystemKey, PropertyValue> overrides_;
  std::map<SensorType, std::vector<double>> samples_;
  std::set<SensorType> hooked_sensors_;
  std::set<SystemKey> hooked_keys_;
  std::vector<RuleState> rule_state_;
  std::map<std::string, bool, std::less<>> flags_;
  std::vector<AppEvent> events_;
  std::vector<std::string> received_;
  std::uint64_t last_seq_ = 0;
  std::uint64_t event_seq_ = 0;
  std::int64_t now_ns_ = 0;
};

/// Registry of spawned apps keyed by process name.
class MockDevice {
 public:
  /// Throws DuplicateProcess when the name is taken.
  std::shared_ptr<MockApp> spawn(MockAppConfig config);
  /// Parses then spawns; throws ConfigError or DuplicateProcess.
  std::shared_ptr<MockApp> spawn_from_document(std::string_view text);
  std::shared_ptr<MockApp> find(std::string_view process) const;
  bool kill(std::string_view process);

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<MockApp>, std::less<>> apps_;
};

}  // namespace spoofkit
