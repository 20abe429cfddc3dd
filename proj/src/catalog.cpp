#include "spoofkit/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "spoofkit/errors.hpp"

namespace spoofkit {

namespace {

constexpr std::array<std::string_view, 4> kSensorNames = {
    "accelerometer", "gyroscope", "step_counter", "ambient_temperature"};

constexpr std::array<std::string_view, 8> kKeyNames = {
    "battery.level",       "battery.charging",   "clock.offset_ms",
    "clock.scale",         "build.model",        "build.manufacturer",
    "build.android_version", "ambient.temperature_c"};

}  // namespace

std::string_view sensor_name(SensorType sensor) {
  return kSensorNames[static_cast<std::size_t>(sensor)];
}

std::optional<SensorType> sensor_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kSensorNames.size(); ++i) {
    if (kSensorNames[i] == name) return static_cast<SensorType>(i);
  }
  return std::nullopt;
}

std::size_t sensor_dims(SensorType sensor) {
  switch (sensor) {
    case SensorType::accelerometer:
    case SensorType::gyroscope:
      return 3;
    case SensorType::step_counter:
    case SensorType::ambient_temperature:
      return 1;
  }
  return 0;
}

std::string_view sensor_unit(SensorType sensor) {
  switch (sensor) {
    case SensorType::accelerometer: return "m/s^2";
    case SensorType::gyroscope: return "rad/s";
    case SensorType::step_counter: return "steps";
    case SensorType::ambient_temperature: return "degC";
  }
  return "";
}

std::string_view key_name(SystemKey key) {
  return kKeyNames[static_cast<std::size_t>(key)];
}

std::optional<SystemKey> key_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kKeyNames.size(); ++i) {
    if (kKeyNames[i] == name) return static_cast<SystemKey>(i);
  }
  return std::nullopt;
}

ValueKind key_value_kind(SystemKey key) {
  switch (key) {
    case SystemKey::battery_level:
    case SystemKey::clock_offset_ms:
      return ValueKind::integer;
    case SystemKey::battery_charging:
      return ValueKind::boolean;
    case SystemKey::clock_scale:
    case SystemKey::ambient_temperature_c:
      return ValueKind::real;
    case SystemKey::build_model:
    case SystemKey::build_manufacturer:
    case SystemKey::build_android_version:
      return ValueKind::text;
  }
  return ValueKind::text;
}

std::optional<PropertyValue> coerce_key_value(SystemKey key, const PropertyValue& value) {
  switch (key_value_kind(key)) {
    case ValueKind::boolean:
      if (std::holds_alternative<bool>(value)) return value;
      return std::nullopt;
    case ValueKind::integer:
      if (std::holds_alternative<std::int64_t>(value)) return value;
      if (const auto* d = std::get_if<double>(&value)) {
        if (std::isfinite(*d) && std::trunc(*d) == *d &&
            std::fabs(*d) < 9.0e15) {
          return PropertyValue{static_cast<std::int64_t>(*d)};
        }
      }
      return std::nullopt;
    case ValueKind::real:
      if (std::holds_alternative<double>(value)) return value;
      if (const auto* i = std::get_if<std::int64_t>(&value)) {
        return PropertyValue{static_cast<double>(*i)};
      }
      return std::nullopt;
    case ValueKind::text:
      if (std::holds_alternative<std::string>(value)) return value;
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<std::string> check_key_value(SystemKey key, const PropertyValue& value) {
  const std::string name{key_name(key)};
  switch (key) {
    case SystemKey::battery_level: {
      const auto* v = std::get_if<std::int64_t>(&value);
      if (v == nullptr) return name + " must be an integer";
      if (*v < 0 || *v > 100) return name + " out of [0,100]";
      return std::nullopt;
    }
    case SystemKey::battery_charging:
      if (!std::holds_alternative<bool>(value)) return name + " must be true or false";
      return std::nullopt;
    case SystemKey::clock_offset_ms:
      if (!std::holds_alternative<std::int64_t>(value)) return name + " must be an integer";
      return std::nullopt;
    case SystemKey::clock_scale: {
      const auto* v = std::get_if<double>(&value);
      if (v == nullptr) return name + " must be a number";
      if (!std::isfinite(*v) || *v <= 0.0) return name + " must be > 0";
      return std::nullopt;
    }
    case SystemKey::ambient_temperature_c: {
      const auto* v = std::get_if<double>(&value);
      if (v == nullptr) return name + " must be a number";
      if (!std::isfinite(*v)) return name + " must be finite";
      return std::nullopt;
    }
    case SystemKey::build_model:
    case SystemKey::build_manufacturer:
    case SystemKey::build_android_version: {
      const auto* v = std::get_if<std::string>(&value);
      if (v == nullptr) return name + " must be a string";
      if (v->empty()) return name + " must be non-empty";
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string to_display(const PropertyValue& value) {
  struct Visitor {
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(std::int64_t i) const { return std::to_string(i); }
    std::string operator()(double d) const {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", d);
      return buf;
    }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, value);
}

std::string format_diagnostic(const Diagnostic& d) {
  return std::string(d.severity == Diagnostic::Severity::error ? "error" : "warning") +
         " " + (d.path.empty() ? "." : d.path) + " " + d.message;
}

namespace {
std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  for (const auto& d : diagnostics) {
    if (d.is_error()) return d.path + ": " + d.message;
  }
  return diagnostics.empty() ? "schema error" : diagnostics.front().message;
}
}  // namespace

SchemaError::SchemaError(std::vector<Diagnostic> diagnostics)
    : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {
  if (diagnostics_.empty()) {
    diagnostics_.push_back({Diagnostic::Severity::error, "", "schema error"});
  }
  // Errors first so path() names the first error.
  std::stable_partition(diagnostics_.begin(), diagnostics_.end(),
                        [](const Diagnostic& d) { return d.is_error(); });
}

}  // namespace spoofkit
