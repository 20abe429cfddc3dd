#pragma once

// Spoof profiles: the operator-authored description of every sensor stream
// and system value to fake in one target process.
//
// Document form (JSON):
//   {
//     "version": 1,
//     "target": {"process": "com.example.app"},
//     "default_rate_hz": 50.0,
//     "overrides": {
//       "sensors": [{"sensor": "accelerometer", "mode": "walking",
//                    "params": {"cadence_hz": 2.0}, "rate_hz": 50.0}],
//       "system": [{"key": "battery.level", "value": 5},
//                  {"key": "clock.offset_ms",
//                   "program": {"mode": "clock_warp", "params": {"offset_ms": 3600000}}}]
//     }
//   }

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/errors.hpp"
#include "spoofkit/signal.hpp"

namespace spoofkit {

inline constexpr int kProfileVersion = 1;
inline constexpr double kDefaultRateHz = 50.0;
inline constexpr double kHighRateWarningHz = 1000.0;

struct ProcessSelector {
  std::string process;
  bool operator==(const ProcessSelector&) const = default;
};

struct SensorOverride {
  SensorType sensor = SensorType::accelerometer;
  SignalSpec signal;
  std::optional<double> rate_hz;  // absent: inherits default_rate_hz

  bool operator==(const SensorOverride&) const = default;
};

/// A constant, or a parametric program (battery_discharge, clock_warp).
using ValueProgram = std::variant<PropertyValue, SignalSpec>;

struct SystemOverride {
  SystemKey key = SystemKey::battery_level;
  ValueProgram value_program;

  const PropertyValue* constant() const { return std::get_if<PropertyValue>(&value_program); }
  const SignalSpec* program() const { return std::get_if<SignalSpec>(&value_program); }

  bool operator==(const SystemOverride&) const = default;
};

struct SpoofProfile {
  int version = kProfileVersion;
  ProcessSelector target;
  std::vector<SensorOverride> sensor_overrides;
  std::vector<SystemOverride> system_overrides;
  double default_rate_hz = kDefaultRateHz;

  double rate_for(const SensorOverride& o) const { return o.rate_hz.value_or(default_rate_hz); }
  const SensorOverride* find_sensor(SensorType sensor) const;
  const SystemOverride* find_key(SystemKey key) const;

  bool operator==(const SpoofProfile&) const = default;
};

/// Never throws: a syntax error or any error diagnostic leaves `profile` empty.
struct ProfileAnalysis {
  std::optional<SpoofProfile> profile;
  std::vector<Diagnostic> diagnostics;
  std::optional<SyntaxError> syntax_error;

  bool ok() const { return profile.has_value(); }
};

ProfileAnalysis analyze_profile(std::string_view text);

/// Throws SyntaxError or SchemaError.
SpoofProfile parse_profile(std::string_view text);

std::vector<Diagnostic> validate_profile(const SpoofProfile& profile);

std::string serialize_profile(const SpoofProfile& profile);

}  // namespace spoofkit
