#pragma once

// Hook plans: the compiled form of a spoof profile. One hook per runtime API,
// ordered by the TargetApi catalog so equal profiles compile to byte-equal
// plans. plan_id is the SHA-256 of the canonical plan document with the
// plan_id field left out.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/json_codec.hpp"
#include "spoofkit/profile.hpp"
#include "spoofkit/signal.hpp"

namespace spoofkit {

enum class TargetApi : std::uint8_t {
  sensor_accelerometer,
  sensor_gyroscope,
  sensor_step_counter,
  sensor_ambient_temperature,
  battery_capacity,
  battery_is_charging,
  clock_current_time_millis,
  clock_elapsed_realtime,
  build_model,
  build_manufacturer,
  build_version_release,
};

enum class ApiFamily : std::uint8_t { sensor, battery, clock, build };

/// Fixed TargetApi -> runtime class/method table. Extending it is a schema
/// change: the emitter and the golden scripts depend on every row.
struct ApiBinding {
  TargetApi api;
  std::string_view name;        // wire spelling, e.g. "battery.capacity"
  ApiFamily family;
  std::string_view class_token;  // "SensorManager", "BatteryManager", "System", "SystemClock", "Build"
  std::string_view java_class;   // fully qualified class hooked by the agent
  std::string_view member;       // method or static field intercepted
};

std::span<const ApiBinding> api_table();
const ApiBinding& binding(TargetApi api);
std::string_view api_name(TargetApi api);
std::optional<TargetApi> api_from_name(std::string_view name);

TargetApi api_for_sensor(SensorType sensor);
std::optional<SensorType> sensor_for_api(TargetApi api);

/// APIs a system key is served by; the two clock keys share both clock APIs.
std::vector<TargetApi> apis_for_key(SystemKey key);

/// System keys whose perceived value an API controls (queried for restore checks).
std::vector<SystemKey> property_keys_for_api(TargetApi api);

enum class HookKind : std::uint8_t { sensor_stream, property_constant, property_program };

std::string_view hook_kind_name(HookKind kind);
std::optional<HookKind> hook_kind_from_name(std::string_view name);

struct Hook {
  TargetApi api = TargetApi::sensor_accelerometer;
  HookKind kind = HookKind::sensor_stream;
  // sensor_stream: the stream's signal; property_program: the value program.
  std::optional<SignalSpec> signal;
  // property_constant: the value. On an ambient-temperature stream: the
  // property value served until the first sample arrives.
  std::optional<PropertyValue> value;
  std::optional<double> rate_hz;  // sensor_stream only

  bool operator==(const Hook&) const = default;
};

struct HookPlan {
  std::string plan_id;
  ProcessSelector target;
  std::vector<Hook> hooks;
  std::string created_from;  // SHA-256 of the serialized source profile

  const Hook* find(TargetApi api) const;
  /// Every system key the plan changes, in catalog order.
  std::vector<SystemKey> property_keys() const;

  bool operator==(const HookPlan&) const = default;
};

/// Throws SchemaError for an invalid profile, UnmappableOverride if an
/// override has no hook mapping.
HookPlan compile(const SpoofProfile& profile);

Json plan_to_json(const HookPlan& plan);
std::string plan_to_document(const HookPlan& plan);

/// Throws FormatError on malformed documents, duplicate or unknown APIs,
/// payloads that do not match their API, or a plan_id that does not match
/// the content.
HookPlan plan_from_json(const Json& doc);
HookPlan plan_from_document(std::string_view text);

/// Recomputes plan_id from content.
std::string compute_plan_id(const HookPlan& plan);

}  // namespace spoofkit
