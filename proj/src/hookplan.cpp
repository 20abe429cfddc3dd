#include "spoofkit/hookplan.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spoofkit/digest.hpp"
#include "spoofkit/errors.hpp"

namespace spoofkit {

namespace {

constexpr std::array<ApiBinding, 11> kApiTable = {{
    {TargetApi::sensor_accelerometer, "sensor.accelerometer.onSensorChanged", ApiFamily::sensor,
     "SensorManager", "android.hardware.SystemSensorManager$SensorEventQueue",
     "dispatchSensorEvent"},
    {TargetApi::sensor_gyroscope, "sensor.gyroscope.onSensorChanged", ApiFamily::sensor,
     "SensorManager", "android.hardware.SystemSensorManager$SensorEventQueue",
     "dispatchSensorEvent"},
    {TargetApi::sensor_step_counter, "sensor.step_counter.onSensorChanged", ApiFamily::sensor,
     "SensorManager", "android.hardware.SystemSensorManager$SensorEventQueue",
     "dispatchSensorEvent"},
    {TargetApi::sensor_ambient_temperature, "sensor.ambient_temperature.onSensorChanged",
     ApiFamily::sensor, "SensorManager", "android.hardware.SystemSensorManager$SensorEventQueue",
     "dispatchSensorEvent"},
    {TargetApi::battery_capacity, "battery.capacity", ApiFamily::battery, "BatteryManager",
     "android.os.BatteryManager", "getIntProperty"},
    {TargetApi::battery_is_charging, "battery.isCharging", ApiFamily::battery, "BatteryManager",
     "android.os.BatteryManager", "isCharging"},
    {TargetApi::clock_current_time_millis, "clock.currentTimeMillis", ApiFamily::clock, "System",
     "java.lang.System", "currentTimeMillis"},
    {TargetApi::clock_elapsed_realtime, "clock.elapsedRealtime", ApiFamily::clock, "SystemClock",
     "android.os.SystemClock", "elapsedRealtime"},
    {TargetApi::build_model, "build.MODEL", ApiFamily::build, "Build", "android.os.Build", "MODEL"},
    {TargetApi::build_manufacturer, "build.MANUFACTURER", ApiFamily::build, "Build",
     "android.os.Build", "MANUFACTURER"},
    {TargetApi::build_version_release, "build.VERSION.RELEASE", ApiFamily::build, "Build",
     "android.os.Build$VERSION", "RELEASE"},
}};

constexpr std::array<std::string_view, 3> kKindNames = {"sensor_stream", "property_constant",
                                                        "property_program"};

[[noreturn]] void format_fail(const std::string& message) { throw FormatError(message); }

Json payload_to_json(const Hook& hook) {
  Json payload = Json::object();
  if (hook.signal) {
    const Json spec = spec_to_json(*hook.signal);
    payload["mode"] = spec["mode"];
    payload["params"] = spec["params"];
  }
  if (hook.value) payload["value"] = value_to_json(*hook.value);
  return payload;
}

Json plan_body_json(const HookPlan& plan, bool with_id) {
  Json hooks = Json::array();
  for (const auto& hook : plan.hooks) {
    Json h = Json::object();
    h["api"] = std::string(api_name(hook.api));
    h["kind"] = std::string(hook_kind_name(hook.kind));
    h["payload"] = payload_to_json(hook);
    if (hook.rate_hz) h["rate_hz"] = *hook.rate_hz;
    hooks.push_back(std::move(h));
  }
  Json doc = Json::object();
  if (with_id) doc["plan_id"] = plan.plan_id;
  doc["created_from"] = plan.created_from;
  doc["target"] = Json{{"process", plan.target.process}};
  doc["hooks"] = std::move(hooks);
  return doc;
}

void check_value_for_key(SystemKey key, const PropertyValue& value, const std::string& where) {
  if (auto msg = check_key_value(key, value)) format_fail(where + ": " + *msg);
}

void check_hook(const Hook& hook) {
  const std::string where = "hook " + std::string(api_name(hook.api));
  const auto family = binding(hook.api).family;
  if (hook.rate_hz && hook.kind != HookKind::sensor_stream) {
    format_fail(where + ": rate_hz is only valid on sensor_stream hooks");
  }
  switch (hook.kind) {
    case HookKind::sensor_stream: {
      const auto sensor = sensor_for_api(hook.api);
      if (!sensor) format_fail(where + ": sensor_stream on a non-sensor api");
      if (!hook.signal) format_fail(where + ": sensor_stream needs mode and params");
      if (!hook.rate_hz || !std::isfinite(*hook.rate_hz) || *hook.rate_hz <= 0.0) {
        format_fail(where + ": sensor_stream needs rate_hz > 0");
      }
      if (const auto issues = check_signal_spec(*hook.signal, *sensor); !issues.empty()) {
        format_fail(where + ": " + issues.front().message);
      }
      if (hook.value) {
        if (hook.api != TargetApi::sensor_ambient_temperature) {
          format_fail(where + ": only the ambient temperature stream carries a value");
        }
        check_value_for_key(SystemKey::ambient_temperature_c, *hook.value, where);
      }
      return;
    }
    case HookKind::property_constant: {
      if (hook.signal) format_fail(where + ": property_constant takes only a value");
      if (!hook.value) format_fail(where + ": property_constant needs a value");
      const auto keys = property_keys_for_api(hook.api);
      if (keys.size() != 1 || family == ApiFamily::clock) {
        format_fail(where + ": api does not take a constant");
      }
      check_value_for_key(keys.front(), *hook.value, where);
      return;
    }
    case HookKind::property_program: {
      if (!hook.signal) format_fail(where + ": property_program needs mode and params");
      if (hook.value) format_fail(where + ": property_program takes no value");
      SystemKey key;
      if (hook.api == TargetApi::battery_capacity) {
        key = SystemKey::battery_level;
      } else if (family == ApiFamily::clock) {
        key = SystemKey::clock_offset_ms;
      } else {
        format_fail(where + ": api does not take a program");
      }
      if (const auto issues = check_program_spec(*hook.signal, key); !issues.empty()) {
        format_fail(where + ": " + issues.front().message);
      }
      return;
    }
  }
}

Hook hook_from_json(const Json& h, std::size_t index) {
  const std::string where = "hooks[" + std::to_string(index) + "]";
  if (!h.is_object()) format_fail(where + ": expected an object");
  for (const auto& [k, _] : h.items()) {
    if (k != "api" && k != "kind" && k != "payload" && k != "rate_hz") {
      format_fail(where + ": unknown field '" + k + "'");
    }
  }
  if (!h.contains("api") || !h["api"].is_string()) format_fail(where + ": api must be a string");
  const auto api = api_from_name(h["api"].get<std::string>());
  if (!api) format_fail(where + ": unknown api '" + h["api"].get<std::string>() + "'");
  if (!h.contains("kind") || !h["kind"].is_string()) format_fail(where + ": kind must be a string");
  const auto kind = hook_kind_from_name(h["kind"].get<std::string>());
  if (!kind) format_fail(where + ": unknown kind '" + h["kind"].get<std::string>() + "'");
  if (!h.contains("payload") || !h["payload"].is_object()) {
    format_fail(where + ": payload must be an object");
  }
  Hook hook;
  hook.api = *api;
  hook.kind = *kind;
  const auto& payload = h["payload"];
  if (payload.contains("mode")) {
    std::vector<JsonIssue> issues;
    auto spec = spec_from_json(payload, issues, {"value"});
    if (!spec) format_fail(where + ".payload." + issues.front().path + ": " + issues.front().message);
    hook.signal = std::move(*spec);
  } else {
    for (const auto& [k, _] : payload.items()) {
      if (k != "value") format_fail(where + ".payload: unknown field '" + k + "'");
    }
  }
  if (payload.contains("value")) {
    auto value = value_from_json(payload["value"]);
    if (!value) format_fail(where + ".payload.value: unsupported value type");
    const auto keys = property_keys_for_api(hook.api);
    if (keys.size() == 1) {
      if (auto coerced = coerce_key_value(keys.front(), *value)) value = std::move(coerced);
    }
    hook.value = std::move(*value);
  }
  if (h.contains("rate_hz")) {
    if (!h["rate_hz"].is_number()) format_fail(where + ": rate_hz must be a number");
    hook.rate_hz = h["rate_hz"].get<double>();
  }
  check_hook(hook);
  return hook;
}

}  // namespace

std::span<const ApiBinding> api_table() { return kApiTable; }

const ApiBinding& binding(TargetApi api) { return kApiTable[static_cast<std::size_t>(api)]; }

std::string_view api_name(TargetApi api) { return binding(api).name; }

std::optional<TargetApi> api_from_name(std::string_view name) {
  for (const auto& b : kApiTable) {
    if (b.name == name) return b.api;
  }
  return std::nullopt;
}

TargetApi api_for_sensor(SensorType sensor) {
  switch (sensor) {
    case SensorType::accelerometer: return TargetApi::sensor_accelerometer;
    case SensorType::gyroscope: return TargetApi::sensor_gyroscope;
    case SensorType::step_counter: return TargetApi::sensor_step_counter;
    case SensorType::ambient_temperature: return TargetApi::sensor_ambient_temperature;
  }
  return TargetApi::sensor_accelerometer;
}

std::optional<SensorType> sensor_for_api(TargetApi api) {
  switch (api) {
    case TargetApi::sensor_accelerometer: return SensorType::accelerometer;
    case TargetApi::sensor_gyroscope: return SensorType::gyroscope;
    case TargetApi::sensor_step_counter: return SensorType::step_counter;
    case TargetApi::sensor_ambient_temperature: return SensorType::ambient_temperature;
    default: return std::nullopt;
  }
}

std::vector<TargetApi> apis_for_key(SystemKey key) {
  switch (key) {
    case SystemKey::battery_level: return {TargetApi::battery_capacity};
    case SystemKey::battery_charging: return {TargetApi::battery_is_charging};
    case SystemKey::clock_offset_ms:
    case SystemKey::clock_scale:
      return {TargetApi::clock_current_time_millis, TargetApi::clock_elapsed_realtime};
    case SystemKey::build_model: return {TargetApi::build_model};
    case SystemKey::build_manufacturer: return {TargetApi::build_manufacturer};
    case SystemKey::build_android_version: return {TargetApi::build_version_release};
    case SystemKey::ambient_temperature_c: return {TargetApi::sensor_ambient_temperature};
  }
  return {};
}

std::vector<SystemKey> property_keys_for_api(TargetApi api) {
  switch (api) {
    case TargetApi::sensor_ambient_temperature: return {SystemKey::ambient_temperature_c};
    case TargetApi::battery_capacity: return {SystemKey::battery_level};
    case TargetApi::battery_is_charging: return {SystemKey::battery_charging};
    case TargetApi::clock_current_time_millis:
    case TargetApi::clock_elapsed_realtime:
      return {SystemKey::clock_offset_ms, SystemKey::clock_scale};
    case TargetApi::build_model: return {SystemKey::build_model};
    case TargetApi::build_manufacturer: return {SystemKey::build_manufacturer};
    case TargetApi::build_version_release: return {SystemKey::build_android_version};
    default: return {};
  }
}

std::string_view hook_kind_name(HookKind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<HookKind> hook_kind_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == name) return static_cast<HookKind>(i);
  }
  return std::nullopt;
}

const Hook* HookPlan::find(TargetApi api) const {
  for (const auto& h : hooks) {
    if (h.api == api) return &h;
  }
  return nullptr;
}

std::vector<SystemKey> HookPlan::property_keys() const {
  std::vector<SystemKey> keys;
  for (const auto& h : hooks) {
    for (auto k : property_keys_for_api(h.api)) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

HookPlan compile(const SpoofProfile& profile) {
  {
    auto diags = validate_profile(profile);
    if (std::any_of(diags.begin(), diags.end(), [](const Diagnostic& d) { return d.is_error(); })) {
      throw SchemaError(std::move(diags));
    }
  }
  HookPlan plan;
  plan.target = profile.target;
  plan.created_from = sha256_hex(serialize_profile(profile));

  for (const auto& o : profile.sensor_overrides) {
    Hook hook;
    hook.api = api_for_sensor(o.sensor);
    hook.kind = HookKind::sensor_stream;
    hook.signal = o.signal;
    hook.rate_hz = profile.rate_for(o);
    plan.hooks.push_back(std::move(hook));
  }

  std::optional<std::int64_t> clock_offset;
  std::optional<double> clock_scale;
  bool clock_hooked = false;
  for (const auto& o : profile.system_overrides) {
    switch (o.key) {
      case SystemKey::clock_offset_ms:
      case SystemKey::clock_scale: {
        clock_hooked = true;
        if (const auto* value = o.constant()) {
          if (o.key == SystemKey::clock_offset_ms) {
            clock_offset = std::get<std::int64_t>(*value);
          } else {
            clock_scale = std::get<double>(*value);
          }
        } else {
          const auto& program = *o.program();
          if (program.mode != SignalMode::clock_warp) {
            throw UnmappableOverride(std::string(key_name(o.key)) + " needs a clock_warp program");
          }
          if (auto v = program.scalar("offset_ms")) clock_offset = std::llround(*v);
          if (auto v = program.scalar("scale")) clock_scale = *v;
        }
        continue;
      }
      case SystemKey::ambient_temperature_c:
        if (profile.find_sensor(SensorType::ambient_temperature) != nullptr) {
          // Merged into the stream hook below.
          continue;
        }
        break;
      default:
        break;
    }
    const auto apis = apis_for_key(o.key);
    if (apis.size() != 1) throw UnmappableOverride("no hook for " + std::string(key_name(o.key)));
    Hook hook;
    hook.api = apis.front();
    if (const auto* value = o.constant()) {
      hook.kind = HookKind::property_constant;
      hook.value = *value;
    } else {
      const auto& program = *o.program();
      if (o.key != SystemKey::battery_level || program.mode != SignalMode::battery_discharge) {
        throw UnmappableOverride("no program hook for " + std::string(key_name(o.key)));
      }
      SignalSpec resolved;
      resolved.mode = SignalMode::battery_discharge;
      resolved.params["start_level"] =
          program.scalar("start_level").value_or(static_cast<double>(kDefaultStartLevel));
      resolved.params["discharge_rate"] =
          program.scalar("discharge_rate").value_or(kDefaultDischargeRate);
      hook.kind = HookKind::property_program;
      hook.signal = std::move(resolved);
    }
    plan.hooks.push_back(std::move(hook));
  }

  if (const auto* temp = profile.find_key(SystemKey::ambient_temperature_c);
      temp != nullptr && profile.find_sensor(SensorType::ambient_temperature) != nullptr) {
    for (auto& hook : plan.hooks) {
      if (hook.api == TargetApi::sensor_ambient_temperature) hook.value = *temp->constant();
    }
  }

  if (clock_hooked) {
    SignalSpec warp;
    warp.mode = SignalMode::clock_warp;
    warp.params["offset_ms"] = static_cast<double>(clock_offset.value_or(0));
    warp.params["scale"] = clock_scale.value_or(1.0);
    for (auto api : {TargetApi::clock_current_time_millis, TargetApi::clock_elapsed_realtime}) {
      Hook hook;
      hook.api = api;
      hook.kind = HookKind::property_program;
      hook.signal = warp;
      plan.hooks.push_back(std::move(hook));
    }
  }

  std::stable_sort(plan.hooks.begin(), plan.hooks.end(),
                   [](const Hook& a, const Hook& b) { return a.api < b.api; });
  for (std::size_t i = 1; i < plan.hooks.size(); ++i) {
    if (plan.hooks[i].api == plan.hooks[i - 1].api) {
      throw UnmappableOverride("two overrides map to " + std::string(api_name(plan.hooks[i].api)));
    }
  }
  plan.plan_id = compute_plan_id(plan);
  return plan;
}

std::string compute_plan_id(const HookPlan& plan) {
  return sha256_hex(plan_body_json(plan, false).dump());
}

Json plan_to_json(const HookPlan& plan) { return plan_body_json(plan, true); }

std::string plan_to_document(const HookPlan& plan) { return plan_to_json(plan).dump(2) + "\n"; }

HookPlan plan_from_json(const Json& doc) {
  if (!doc.is_object()) format_fail("plan document must be an object");
  for (const auto& [k, _] : doc.items()) {
    if (k != "plan_id" && k != "created_from" && k != "target" && k != "hooks") {
      format_fail("unknown field '" + k + "'");
    }
  }
  if (!doc.contains("plan_id") || !doc["plan_id"].is_string()) format_fail("plan_id must be a string");
  if (!doc.contains("target") || !doc["target"].is_object() || !doc["target"].contains("process") ||
      !doc["target"]["process"].is_string() || doc["target"].size() != 1) {
    format_fail("target must be {\"process\": <name>}");
  }
  if (!doc.contains("hooks") || !doc["hooks"].is_array()) format_fail("hooks must be an array");
  HookPlan plan;
  plan.plan_id = doc["plan_id"].get<std::string>();
  plan.target.process = doc["target"]["process"].get<std::string>();
  if (doc.contains("created_from")) {
    if (!doc["created_from"].is_string()) format_fail("created_from must be a string");
    plan.created_from = doc["created_from"].get<std::string>();
  }
  for (std::size_t i = 0; i < doc["hooks"].size(); ++i) {
    plan.hooks.push_back(hook_from_json(doc["hooks"][i], i));
  }
  std::stable_sort(plan.hooks.begin(), plan.hooks.end(),
                   [](const Hook& a, const Hook& b) { return a.api < b.api; });
  for (std::size_t i = 1; i < plan.hooks.size(); ++i) {
    if (plan.hooks[i].api == plan.hooks[i - 1].api) {
      format_fail("duplicate api '" + std::string(api_name(plan.hooks[i].api)) + "'");
    }
  }
  const Hook* wall = plan.find(TargetApi::clock_current_time_millis);
  const Hook* mono = plan.find(TargetApi::clock_elapsed_realtime);
  if ((wall == nullptr) != (mono == nullptr) ||
      (wall != nullptr && wall->signal != mono->signal)) {
    format_fail("clock hooks must come in pairs sharing one warp program");
  }
  if (compute_plan_id(plan) != plan.plan_id) format_fail("plan_id does not match plan content");
  return plan;
}

HookPlan plan_from_document(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    format_fail(std::string("malformed plan document: ") + e.what());
  }
  return plan_from_json(doc);
}

}  // namespace spoofkit
