#pragma once

// Shared test helpers: fixture access and hand-rolled random generators.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/profile.hpp"
#include "spoofkit/signal.hpp"

namespace testing {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::string fixture(const std::string& name) { return std::string(SPOOFKIT_FIXTURES) + "/" + name; }
inline std::string fixture_text(const std::string& name) { return read_file(fixture(name)); }

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : engine_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  bool coin(double p = 0.5) { return real(0.0, 1.0) < p; }
  std::uint64_t u64() { return engine_(); }

  template <class T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(integer(0, static_cast<int>(items.size()) - 1))];
  }

  // A real with at most three decimals so it survives text round trips exactly
  // either way; the codec must also preserve arbitrary doubles, tested separately.
  double tidy(double lo, double hi) { return std::round(real(lo, hi) * 1000.0) / 1000.0; }

 private:
  std::mt19937_64 engine_;
};

inline spoofkit::SignalSpec random_stream_spec(Gen& g, spoofkit::SensorType sensor) {
  using namespace spoofkit;
  SignalSpec spec;
  if (g.coin(0.3)) spec.seed = g.u64() >> 1;
  const bool motion = sensor == SensorType::accelerometer || sensor == SensorType::gyroscope;
  std::vector<SignalMode> modes = {SignalMode::constant};
  if (motion) {
    modes.insert(modes.end(), {SignalMode::walking, SignalMode::running, SignalMode::shake_spike, SignalMode::sine});
  } else if (sensor == SensorType::step_counter) {
    modes.insert(modes.end(), {SignalMode::walking, SignalMode::running});
  } else {
    modes.push_back(SignalMode::sine);
  }
  spec.mode = g.pick(modes);
  switch (spec.mode) {
    case SignalMode::constant: {
      std::vector<double> values;
      for (std::size_t i = 0; i < sensor_dims(sensor); ++i) {
        values.push_back(sensor == SensorType::step_counter ? static_cast<double>(g.integer(0, 5000))
                                                            : g.real(-50.0, 50.0));
      }
      spec.params["values"] = values;
      break;
    }
    case SignalMode::walking:
    case SignalMode::running:
      if (g.coin()) spec.params["cadence_hz"] = g.tidy(0.5, 4.0);
      if (motion) {
        if (g.coin()) spec.params["amplitude"] = g.tidy(0.1, 10.0);
        if (g.coin()) spec.params["noise_sigma"] = g.tidy(0.0, 0.5);
      } else if (g.coin()) {
        spec.params["initial"] = static_cast<double>(g.integer(0, 100000));
      }
      break;
    case SignalMode::shake_spike:
      if (g.coin()) spec.params["spike_magnitude"] = g.tidy(1.0, 80.0);
      if (g.coin()) spec.params["spike_at_s"] = g.tidy(0.0, 20.0);
      if (g.coin()) spec.params["noise_sigma"] = g.tidy(0.0, 0.5);
      break;
    case SignalMode::sine:
      if (g.coin()) spec.params["frequency_hz"] = g.tidy(0.01, 10.0);
      if (g.coin()) spec.params["amplitude"] = g.tidy(0.0, 10.0);
      if (g.coin()) spec.params["offset"] = g.tidy(-10.0, 40.0);
      if (g.coin()) spec.params["phase_rad"] = g.tidy(-3.0, 3.0);
      if (g.coin()) spec.params["noise_sigma"] = g.tidy(0.0, 0.5);
      break;
    default:
      break;
  }
  return spec;
}

inline spoofkit::PropertyValue random_key_value(Gen& g, spoofkit::SystemKey key) {
  using namespace spoofkit;
  switch (key) {
    case SystemKey::battery_level: return std::int64_t{g.integer(0, 100)};
    case SystemKey::battery_charging: return g.coin();
    case SystemKey::clock_offset_ms: return std::int64_t{g.integer(-86400000, 86400000)};
    case SystemKey::clock_scale: return g.tidy(0.001, 10.0) + 0.001;
    case SystemKey::build_model: return g.pick(std::vector<std::string>{"Pixel 8", "SM-S918B", "X", "Mock \"Q\""});
    case SystemKey::build_manufacturer: return g.pick(std::vector<std::string>{"Google", "Samsung", "Ünicode"});
    case SystemKey::build_android_version: return g.pick(std::vector<std::string>{"10", "13", "14", "15"});
    case SystemKey::ambient_temperature_c: return g.real(-40.0, 60.0);
  }
  return std::int64_t{0};
}

/// A profile that satisfies every schema invariant.
inline spoofkit::SpoofProfile random_profile(Gen& g) {
  using namespace spoofkit;
  SpoofProfile p;
  p.target.process = "com.example.app" + std::to_string(g.integer(0, 99));
  if (g.coin()) p.default_rate_hz = g.pick(std::vector<double>{1.0, 10.0, 25.0, 50.0, 100.0, 200.0});
  std::vector<SensorType> sensors(kAllSensors.begin(), kAllSensors.end());
  std::shuffle(sensors.begin(), sensors.end(), std::mt19937_64(g.u64()));
  const int n_sensors = g.integer(0, 4);
  for (int i = 0; i < n_sensors; ++i) {
    SensorOverride o;
    o.sensor = sensors[static_cast<std::size_t>(i)];
    o.signal = random_stream_spec(g, o.sensor);
    if (g.coin(0.4)) o.rate_hz = g.pick(std::vector<double>{5.0, 20.0, 50.0, 100.0});
    p.sensor_overrides.push_back(std::move(o));
  }
  std::vector<SystemKey> keys(kAllSystemKeys.begin(), kAllSystemKeys.end());
  std::shuffle(keys.begin(), keys.end(), std::mt19937_64(g.u64()));
  const int n_keys = g.integer(0, 8);
  bool clock_program = false;
  for (int i = 0; i < n_keys; ++i) {
    SystemOverride o;
    o.key = keys[static_cast<std::size_t>(i)];
    if (o.key == SystemKey::battery_level && g.coin(0.4)) {
      SignalSpec spec;
      spec.mode = SignalMode::battery_discharge;
      if (g.coin()) spec.params["start_level"] = static_cast<double>(g.integer(0, 100));
      if (g.coin()) spec.params["discharge_rate"] = g.tidy(0.0, 5.0);
      o.value_program = spec;
    } else if ((o.key == SystemKey::clock_offset_ms || o.key == SystemKey::clock_scale) && !clock_program &&
               g.coin(0.3)) {
      // A warp program may set only the parameter its key names so it never
      // collides with a constant on the other clock key.
      SignalSpec spec;
      spec.mode = SignalMode::clock_warp;
      if (o.key == SystemKey::clock_offset_ms) {
        spec.params["offset_ms"] = static_cast<double>(g.integer(-100000, 100000));
      } else {
        spec.params["scale"] = g.tidy(0.1, 4.0) + 0.001;
      }
      o.value_program = spec;
      clock_program = true;
    } else {
      o.value_program = random_key_value(g, o.key);
    }
    p.system_overrides.push_back(std::move(o));
  }
  return p;
}

}  // namespace testing
