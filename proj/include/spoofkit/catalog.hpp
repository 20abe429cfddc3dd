#pragma once

// Closed catalogs shared by every layer: sensor types, system keys and the
// value type carried by system properties.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace spoofkit {

inline constexpr double kGravity = 9.81;

enum class SensorType : std::uint8_t {
  accelerometer,
  gyroscope,
  step_counter,
  ambient_temperature,
};

inline constexpr std::array<SensorType, 4> kAllSensors = {
    SensorType::accelerometer, SensorType::gyroscope, SensorType::step_counter,
    SensorType::ambient_temperature};

std::string_view sensor_name(SensorType sensor);
std::optional<SensorType> sensor_from_name(std::string_view name);
std::size_t sensor_dims(SensorType sensor);
std::string_view sensor_unit(SensorType sensor);

enum class SystemKey : std::uint8_t {
  battery_level,
  battery_charging,
  clock_offset_ms,
  clock_scale,
  build_model,
  build_manufacturer,
  build_android_version,
  ambient_temperature_c,
};

inline constexpr std::array<SystemKey, 8> kAllSystemKeys = {
    SystemKey::battery_level,      SystemKey::battery_charging,
    SystemKey::clock_offset_ms,    SystemKey::clock_scale,
    SystemKey::build_model,        SystemKey::build_manufacturer,
    SystemKey::build_android_version, SystemKey::ambient_temperature_c};

std::string_view key_name(SystemKey key);
std::optional<SystemKey> key_from_name(std::string_view name);

/// Value of a system property. Each key admits exactly one alternative:
/// integers for battery.level and clock.offset_ms, bool for battery.charging,
/// reals for clock.scale and ambient.temperature_c, strings for build.*.
using PropertyValue = std::variant<bool, std::int64_t, double, std::string>;

enum class ValueKind : std::uint8_t { boolean, integer, real, text };

ValueKind key_value_kind(SystemKey key);

/// Checks a value against the key's domain; returns a message on violation.
std::optional<std::string> check_key_value(SystemKey key, const PropertyValue& value);

/// Coerces integral reals to integers and integers to reals where the key's
/// kind demands it. Returns nullopt when the alternative cannot be converted.
std::optional<PropertyValue> coerce_key_value(SystemKey key, const PropertyValue& value);

std::string to_display(const PropertyValue& value);

}  // namespace spoofkit
