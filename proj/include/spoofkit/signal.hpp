#pragma once

// Deterministic, seeded sensor and system-value signal synthesis.
//
// Motion model (accelerometer, device flat, +z up):
//   a(t) = g*z + A*sin(2*pi*f*t)*z + 0.3*A*sin(2*pi*f*t + pi/2)*x + N(0, sigma^2)
// with one step per vertical period, so a step counter driven by the same
// cadence f reads initial + floor(f*t).
//
// Sample k of a trace (k = 0..N-1) is stamped at (k+1)*round(1e9/rate) ns,
// so a trace of duration T covers (0, T] and its last sample lands on T when
// the rate divides evenly.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spoofkit/catalog.hpp"

namespace spoofkit {

enum class SignalMode : std::uint8_t {
  constant,
  walking,
  running,
  shake_spike,
  sine,
  battery_discharge,
  clock_warp,
};

std::string_view mode_name(SignalMode mode);
std::optional<SignalMode> mode_from_name(std::string_view name);

using ParamValue = std::variant<double, std::vector<double>>;
using ParamMap = std::map<std::string, ParamValue, std::less<>>;

struct SignalSpec {
  SignalMode mode = SignalMode::constant;
  ParamMap params;
  std::uint64_t seed = 0;

  std::optional<double> scalar(std::string_view name) const;
  std::optional<std::vector<double>> vec(std::string_view name) const;

  bool operator==(const SignalSpec&) const = default;
};

SignalSpec constant_spec(std::vector<double> values);

struct SpecIssue {
  std::string param;  // empty for spec-level problems
  std::string message;
  bool incompatible_mode = false;
};

/// Every problem with `spec` as a stream for `sensor`; empty when valid.
std::vector<SpecIssue> check_signal_spec(const SignalSpec& spec, SensorType sensor);

/// Every problem with `spec` as a value program for a system key.
std::vector<SpecIssue> check_program_spec(const SignalSpec& spec, SystemKey key);

/// Throws IncompatibleMode or InvalidParams for the first issue found.
void require_valid(const SignalSpec& spec, SensorType sensor);

// Motion defaults.
inline constexpr double kWalkingAmplitude = 2.0;
inline constexpr double kWalkingCadenceHz = 1.9;
inline constexpr double kRunningAmplitude = 6.0;
inline constexpr double kRunningCadenceHz = 2.8;
inline constexpr double kWalkingGyroAmplitude = 0.5;
inline constexpr double kRunningGyroAmplitude = 1.5;
inline constexpr double kLateralRatio = 0.3;
inline constexpr double kSpikeMagnitude = 35.0;
inline constexpr double kSpikeStartS = 1.0;
inline constexpr double kSpikeWidthS = 0.2;
inline constexpr std::int64_t kDefaultStartLevel = 100;
inline constexpr double kDefaultDischargeRate = 1.0;  // %/min

struct MotionParams {
  double amplitude = kWalkingAmplitude;
  double cadence_hz = kWalkingCadenceHz;
  double noise_sigma = 0.0;
};

/// Resolves walking/running parameters, filling per-mode defaults.
MotionParams resolve_motion(const SignalSpec& spec, SensorType sensor);

using Vec3 = std::array<double, 3>;

/// Standard normal variates from mt19937_64 via the Box-Muller transform:
/// u1 = (x >> 11) * 2^-53 mapped to (0, 1], u2 likewise in [0, 1),
/// z0 = sqrt(-2 ln u1) cos(2 pi u2), z1 = sqrt(-2 ln u1) sin(2 pi u2).
/// z1 is cached and returned by the following call.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  double uniform_open_closed();
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

Vec3 walking_accel(double t_s, const MotionParams& params, GaussianSource* noise = nullptr);
Vec3 motion_gyro(double t_s, const MotionParams& params, GaussianSource* noise = nullptr);

/// Half-sine pulse of width kSpikeWidthS starting at start_s; zero elsewhere.
double shake_pulse(double t_s, double magnitude, double start_s);

std::int64_t step_count_at(double cadence_hz, double t_s, std::int64_t initial);
std::int64_t battery_level_at(std::int64_t start_level, double discharge_rate_per_min, double t_s);
std::int64_t warped_clock(std::int64_t real_now_ms, std::int64_t offset_ms, double scale,
                          std::int64_t epoch_ms);

/// floor(x), except that values within 1e-9 (relative) of an integer snap to
/// it, so 1.9 * 60 counts as 114.
std::int64_t floor_snapped(double x);
std::int64_t sample_count(double rate_hz, double duration_s);
std::int64_t sample_period_ns(double rate_hz);

struct SensorSample {
  std::int64_t t_ns = 0;
  SensorType sensor = SensorType::accelerometer;
  std::vector<double> values;
  int accuracy = 3;

  bool operator==(const SensorSample&) const = default;
};

struct SensorTrace {
  SensorType sensor = SensorType::accelerometer;
  double rate_hz = 50.0;
  std::vector<SensorSample> samples;
  std::uint64_t seed = 0;
  // Provenance; absent for traces read back from files.
  std::optional<SignalSpec> spec;

  bool operator==(const SensorTrace&) const = default;
};

/// Checks trace invariants; returns a message describing the first violation.
std::optional<std::string> check_trace(const SensorTrace& trace);

/// Incremental sample source; synth_trace is a loop over next().
class SignalGenerator {
 public:
  SignalGenerator(SignalSpec spec, SensorType sensor, double rate_hz);

  SensorSample next();
  std::int64_t period_ns() const { return period_ns_; }
  SensorType sensor() const { return sensor_; }
  const SignalSpec& spec() const { return spec_; }

 private:
  std::vector<double> evaluate(double t_s);

  SignalSpec spec_;
  SensorType sensor_;
  double rate_hz_;
  std::int64_t period_ns_;
  std::int64_t index_ = 0;
  GaussianSource noise_;
};

SensorTrace synth_trace(const SignalSpec& spec, SensorType sensor, double rate_hz,
                        double duration_s);

struct StepDetectorConfig {
  double threshold = kGravity + kWalkingAmplitude / 2.0;
  double min_separation_s = 0.25;
};

/// Threshold g + A/2 using the trace's motion amplitude when its provenance
/// is a walking or running spec, the walking default otherwise.
StepDetectorConfig step_detector_for(const SensorTrace& trace);

/// Counts vertical-axis local maxima above the threshold that are at least
/// min_separation_s apart (the taller of two close peaks wins).
std::int64_t detect_steps(const SensorTrace& trace);
std::int64_t detect_steps(const SensorTrace& trace, const StepDetectorConfig& config);

}  // namespace spoofkit
