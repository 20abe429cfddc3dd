#include "spoofkit/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spoofkit/errors.hpp"

namespace spoofkit {

namespace {

constexpr std::array<std::string_view, 7> kModeNames = {
    "constant", "walking", "running", "shake_spike", "sine", "battery_discharge", "clock_warp"};

constexpr double kTwoPi = 2.0 * std::numbers::pi;

enum class Shape { scalar, vector, scalar_or_vector };
enum class Domain { any, positive, non_negative, percent_int, non_negative_int, integer };

struct ParamRule {
  std::string_view name;
  Shape shape;
  Domain domain;
  bool required = false;
};

bool is_integral(double v) { return std::isfinite(v) && std::trunc(v) == v; }

std::optional<std::string> check_domain(double v, Domain domain) {
  if (!std::isfinite(v)) return "must be finite";
  switch (domain) {
    case Domain::any: return std::nullopt;
    case Domain::positive:
      if (v <= 0.0) return "must be > 0";
      return std::nullopt;
    case Domain::non_negative:
      if (v < 0.0) return "must be >= 0";
      return std::nullopt;
    case Domain::percent_int:
      if (!is_integral(v) || v < 0.0 || v > 100.0) return "must be an integer in [0,100]";
      return std::nullopt;
    case Domain::non_negative_int:
      if (!is_integral(v) || v < 0.0) return "must be a non-negative integer";
      return std::nullopt;
    case Domain::integer:
      if (!is_integral(v)) return "must be an integer";
      return std::nullopt;
  }
  return std::nullopt;
}

void check_params(const SignalSpec& spec, std::initializer_list<ParamRule> rules,
                  std::size_t dims, std::vector<SpecIssue>& issues) {
  for (const auto& [name, value] : spec.params) {
    const auto rule = std::find_if(rules.begin(), rules.end(),
                                   [&](const ParamRule& r) { return r.name == name; });
    if (rule == rules.end()) {
      issues.push_back({name,
                        "unknown parameter '" + name + "' for mode " +
                            std::string(mode_name(spec.mode)),
                        false});
      continue;
    }
    if (const auto* scalar = std::get_if<double>(&value)) {
      if (rule->shape == Shape::vector) {
        issues.push_back({name, "dimensionality mismatch: expected " + std::to_string(dims) +
                                    " values, got a scalar"});
        continue;
      }
      if (auto msg = check_domain(*scalar, rule->domain)) {
        issues.push_back({name, name + " " + *msg});
      }
      continue;
    }
    const auto& vec = std::get<std::vector<double>>(value);
    if (rule->shape == Shape::scalar) {
      issues.push_back({name, name + " must be a number"});
      continue;
    }
    if (vec.size() != dims) {
      issues.push_back({name, "dimensionality mismatch: expected " + std::to_string(dims) +
                                  " values, got " + std::to_string(vec.size())});
      continue;
    }
    for (double v : vec) {
      if (auto msg = check_domain(v, rule->domain)) {
        issues.push_back({name, name + " " + *msg});
        break;
      }
    }
  }
  for (const auto& rule : rules) {
    if (rule.required && !spec.params.contains(rule.name)) {
      issues.push_back({std::string(rule.name),
                        "missing required parameter '" + std::string(rule.name) + "'"});
    }
  }
}

SpecIssue incompatible(SignalMode mode, std::string_view target) {
  return {"", "mode " + std::string(mode_name(mode)) + " is not valid for " + std::string(target),
          true};
}

double param_or(const SignalSpec& spec, std::string_view name, double fallback) {
  return spec.scalar(name).value_or(fallback);
}

std::vector<double> param_vec_or(const SignalSpec& spec, std::string_view name, std::size_t dims,
                                 double fallback) {
  if (auto v = spec.vec(name)) return *v;
  return std::vector<double>(dims, spec.scalar(name).value_or(fallback));
}

}  // namespace

std::string_view mode_name(SignalMode mode) {
  return kModeNames[static_cast<std::size_t>(mode)];
}

std::optional<SignalMode> mode_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kModeNames.size(); ++i) {
    if (kModeNames[i] == name) return static_cast<SignalMode>(i);
  }
  return std::nullopt;
}

std::optional<double> SignalSpec::scalar(std::string_view name) const {
  const auto it = params.find(name);
  if (it == params.end()) return std::nullopt;
  if (const auto* d = std::get_if<double>(&it->second)) return *d;
  return std::nullopt;
}

std::optional<std::vector<double>> SignalSpec::vec(std::string_view name) const {
  const auto it = params.find(name);
  if (it == params.end()) return std::nullopt;
  if (const auto* v = std::get_if<std::vector<double>>(&it->second)) return *v;
  return std::nullopt;
}

SignalSpec constant_spec(std::vector<double> values) {
  SignalSpec spec;
  spec.mode = SignalMode::constant;
  spec.params.emplace("values", std::move(values));
  return spec;
}

std::vector<SpecIssue> check_signal_spec(const SignalSpec& spec, SensorType sensor) {
  std::vector<SpecIssue> issues;
  const std::size_t dims = sensor_dims(sensor);
  const bool motion_sensor =
      sensor == SensorType::accelerometer || sensor == SensorType::gyroscope;
  switch (spec.mode) {
    case SignalMode::constant:
      check_params(spec,
                   {{"values", Shape::vector,
                     sensor == SensorType::step_counter ? Domain::non_negative_int : Domain::any,
                     true}},
                   dims, issues);
      break;
    case SignalMode::sine:
      if (sensor == SensorType::step_counter) {
        issues.push_back(incompatible(spec.mode, sensor_name(sensor)));
        break;
      }
      check_params(spec,
                   {{"frequency_hz", Shape::scalar, Domain::positive},
                    {"amplitude", Shape::scalar_or_vector, Domain::any},
                    {"offset", Shape::scalar_or_vector, Domain::any},
                    {"phase_rad", Shape::scalar, Domain::any},
                    {"noise_sigma", Shape::scalar, Domain::non_negative}},
                   dims, issues);
      break;
    case SignalMode::walking:
    case SignalMode::running:
      if (motion_sensor) {
        check_params(spec,
                     {{"amplitude", Shape::scalar, Domain::non_negative},
                      {"cadence_hz", Shape::scalar, Domain::positive},
                      {"noise_sigma", Shape::scalar, Domain::non_negative}},
                     dims, issues);
      } else if (sensor == SensorType::step_counter) {
        check_params(spec,
                     {{"cadence_hz", Shape::scalar, Domain::positive},
                      {"initial", Shape::scalar, Domain::non_negative_int}},
                     dims, issues);
      } else {
        issues.push_back(incompatible(spec.mode, sensor_name(sensor)));
      }
      break;
    case SignalMode::shake_spike:
      if (!motion_sensor) {
        issues.push_back(incompatible(spec.mode, sensor_name(sensor)));
        break;
      }
      check_params(spec,
                   {{"spike_magnitude", Shape::scalar, Domain::non_negative},
                    {"spike_at_s", Shape::scalar, Domain::non_negative},
                    {"noise_sigma", Shape::scalar, Domain::non_negative}},
                   dims, issues);
      break;
    case SignalMode::battery_discharge:
    case SignalMode::clock_warp:
      issues.push_back(incompatible(spec.mode, sensor_name(sensor)));
      break;
  }
  return issues;
}

std::vector<SpecIssue> check_program_spec(const SignalSpec& spec, SystemKey key) {
  std::vector<SpecIssue> issues;
  if (spec.mode == SignalMode::battery_discharge && key == SystemKey::battery_level) {
    check_params(spec,
                 {{"start_level", Shape::scalar, Domain::percent_int},
                  {"discharge_rate", Shape::scalar, Domain::non_negative}},
                 1, issues);
  } else if (spec.mode == SignalMode::clock_warp &&
             (key == SystemKey::clock_offset_ms || key == SystemKey::clock_scale)) {
    check_params(spec,
                 {{"offset_ms", Shape::scalar, Domain::integer},
                  {"scale", Shape::scalar, Domain::positive}},
                 1, issues);
  } else {
    issues.push_back(incompatible(spec.mode, key_name(key)));
  }
  return issues;
}

void require_valid(const SignalSpec& spec, SensorType sensor) {
  const auto issues = check_signal_spec(spec, sensor);
  if (issues.empty()) return;
  const auto& first = issues.front();
  if (first.incompatible_mode) throw IncompatibleMode(first.message);
  throw InvalidParams(first.message);
}

MotionParams resolve_motion(const SignalSpec& spec, SensorType sensor) {
  const bool running = spec.mode == SignalMode::running;
  const bool gyro = sensor == SensorType::gyroscope;
  const double default_amplitude = gyro ? (running ? kRunningGyroAmplitude : kWalkingGyroAmplitude)
                                        : (running ? kRunningAmplitude : kWalkingAmplitude);
  MotionParams p;
  p.amplitude = param_or(spec, "amplitude", default_amplitude);
  p.cadence_hz = param_or(spec, "cadence_hz", running ? kRunningCadenceHz : kWalkingCadenceHz);
  p.noise_sigma = param_or(spec, "noise_sigma", 0.0);
  return p;
}

double GaussianSource::uniform_open_closed() {
  // (x >> 11) * 2^-53 lies in [0, 1); flip to (0, 1] so log() stays finite.
  const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return 1.0 - u;
}

double GaussianSource::next() {
  if (spare_) {
    const double z = *spare_;
    spare_.reset();
    return z;
  }
  const double u1 = uniform_open_closed();
  const double u2 = 1.0 - uniform_open_closed();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(kTwoPi * u2);
  return r * std::cos(kTwoPi * u2);
}

namespace {
void add_noise(Vec3& v, double sigma, GaussianSource* noise) {
  if (noise == nullptr || sigma <= 0.0) return;
  for (double& c : v) c += sigma * noise->next();
}
}  // namespace

Vec3 walking_accel(double t_s, const MotionParams& params, GaussianSource* noise) {
  const double phase = kTwoPi * params.cadence_hz * t_s;
  Vec3 v{kLateralRatio * params.amplitude * std::sin(phase + std::numbers::pi / 2.0), 0.0,
         kGravity + params.amplitude * std::sin(phase)};
  add_noise(v, params.noise_sigma, noise);
  return v;
}

Vec3 motion_gyro(double t_s, const MotionParams& params, GaussianSource* noise) {
  // Pitch oscillates with the step, roll follows a quarter period behind.
  const double phase = kTwoPi * params.cadence_hz * t_s;
  Vec3 v{params.amplitude * std::sin(phase),
         kLateralRatio * params.amplitude * std::sin(phase + std::numbers::pi / 2.0), 0.0};
  add_noise(v, params.noise_sigma, noise);
  return v;
}

double shake_pulse(double t_s, double magnitude, double start_s) {
  const double u = (t_s - start_s) / kSpikeWidthS;
  if (u < 0.0 || u >= 1.0) return 0.0;
  return magnitude * std::sin(std::numbers::pi * u);
}

std::int64_t floor_snapped(double x) {
  const double r = std::nearbyint(x);
  if (std::fabs(x - r) <= 1e-9 * std::max(1.0, std::fabs(x))) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::floor(x));
}

std::int64_t step_count_at(double cadence_hz, double t_s, std::int64_t initial) {
  if (t_s <= 0.0) return initial;
  return initial + floor_snapped(cadence_hz * t_s);
}

std::int64_t battery_level_at(std::int64_t start_level, double discharge_rate_per_min,
                              double t_s) {
  const double level = static_cast<double>(start_level) - discharge_rate_per_min * t_s / 60.0;
  return std::clamp<std::int64_t>(std::llround(level), 0, 100);
}

std::int64_t warped_clock(std::int64_t real_now_ms, std::int64_t offset_ms, double scale,
                          std::int64_t epoch_ms) {
  return epoch_ms + std::llround(scale * static_cast<double>(real_now_ms - epoch_ms)) + offset_ms;
}

std::int64_t sample_count(double rate_hz, double duration_s) {
  if (duration_s <= 0.0) return 0;
  return floor_snapped(rate_hz * duration_s);
}

std::int64_t sample_period_ns(double rate_hz) { return std::llround(1e9 / rate_hz); }

std::optional<std::string> check_trace(const SensorTrace& trace) {
  if (!std::isfinite(trace.rate_hz) || trace.rate_hz <= 0.0) return "rate_hz must be > 0";
  const std::int64_t period = sample_period_ns(trace.rate_hz);
  const std::size_t dims = sensor_dims(trace.sensor);
  for (std::size_t i = 0; i < trace.samples.size(); ++i) {
    const auto& s = trace.samples[i];
    const std::string where = "sample " + std::to_string(i) + ": ";
    if (s.sensor != trace.sensor) return where + "sensor does not match trace";
    if (s.values.size() != dims) {
      return where + "expected " + std::to_string(dims) + " values, got " +
             std::to_string(s.values.size());
    }
    if (s.t_ns < 0) return where + "t_ns must be >= 0";
    if (trace.sensor == SensorType::step_counter && !(is_integral(s.values[0]) && s.values[0] >= 0)) {
      return where + "step counter values must be non-negative integers";
    }
    if (i == 0) continue;
    const auto& prev = trace.samples[i - 1];
    if (s.t_ns <= prev.t_ns) return where + "t_ns not strictly increasing";
    if (s.t_ns - prev.t_ns != period) {
      return where + "spacing " + std::to_string(s.t_ns - prev.t_ns) + " ns, expected " +
             std::to_string(period);
    }
    if (trace.sensor == SensorType::step_counter && s.values[0] < prev.values[0]) {
      return where + "step counter decreased";
    }
  }
  return std::nullopt;
}

SignalGenerator::SignalGenerator(SignalSpec spec, SensorType sensor, double rate_hz)
    : spec_(std::move(spec)),
      sensor_(sensor),
      rate_hz_(rate_hz),
      period_ns_(0),
      noise_(spec_.seed) {
  if (!std::isfinite(rate_hz_) || rate_hz_ <= 0.0) throw InvalidParams("rate_hz must be > 0");
  require_valid(spec_, sensor_);
  period_ns_ = sample_period_ns(rate_hz_);
}

SensorSample SignalGenerator::next() {
  SensorSample sample;
  sample.sensor = sensor_;
  sample.t_ns = (index_ + 1) * period_ns_;
  sample.values = evaluate(static_cast<double>(sample.t_ns) * 1e-9);
  ++index_;
  return sample;
}

std::vector<double> SignalGenerator::evaluate(double t_s) {
  const std::size_t dims = sensor_dims(sensor_);
  switch (spec_.mode) {
    case SignalMode::constant:
      return *spec_.vec("values");
    case SignalMode::sine: {
      const double f = param_or(spec_, "frequency_hz", 1.0);
      const double phase = param_or(spec_, "phase_rad", 0.0);
      const double sigma = param_or(spec_, "noise_sigma", 0.0);
      const auto amplitude = param_vec_or(spec_, "amplitude", dims, 1.0);
      const auto offset = param_vec_or(spec_, "offset", dims, 0.0);
      std::vector<double> out(dims);
      const double s = std::sin(kTwoPi * f * t_s + phase);
      for (std::size_t i = 0; i < dims; ++i) {
        out[i] = offset[i] + amplitude[i] * s;
        if (sigma > 0.0) out[i] += sigma * noise_.next();
      }
      return out;
    }
    case SignalMode::walking:
    case SignalMode::running: {
      if (sensor_ == SensorType::step_counter) {
        const double cadence = param_or(
            spec_, "cadence_hz",
            spec_.mode == SignalMode::running ? kRunningCadenceHz : kWalkingCadenceHz);
        const auto initial = static_cast<std::int64_t>(param_or(spec_, "initial", 0.0));
        return {static_cast<double>(step_count_at(cadence, t_s, initial))};
      }
      const auto p = resolve_motion(spec_, sensor_);
      const Vec3 v = sensor_ == SensorType::gyroscope ? motion_gyro(t_s, p, &noise_)
                                                      : walking_accel(t_s, p, &noise_);
      return {v.begin(), v.end()};
    }
    case SignalMode::shake_spike: {
      const double pulse = shake_pulse(t_s, param_or(spec_, "spike_magnitude", kSpikeMagnitude),
                                       param_or(spec_, "spike_at_s", kSpikeStartS));
      Vec3 v = sensor_ == SensorType::gyroscope ? Vec3{pulse, 0.0, 0.0}
                                                : Vec3{0.0, 0.0, kGravity + pulse};
      add_noise(v, param_or(spec_, "noise_sigma", 0.0), &noise_);
      return {v.begin(), v.end()};
    }
    case SignalMode::battery_discharge:
    case SignalMode::clock_warp:
      break;
  }
  throw IncompatibleMode("mode " + std::string(mode_name(spec_.mode)) + " cannot drive a sensor");
}

SensorTrace synth_trace(const SignalSpec& spec, SensorType sensor, double rate_hz,
                        double duration_s) {
  if (!std::isfinite(duration_s) || duration_s < 0.0) {
    throw InvalidParams("duration_s must be >= 0");
  }
  SignalGenerator gen(spec, sensor, rate_hz);
  SensorTrace trace;
  trace.sensor = sensor;
  trace.rate_hz = rate_hz;
  trace.seed = spec.seed;
  trace.spec = spec;
  const std::int64_t n = sample_count(rate_hz, duration_s);
  trace.samples.reserve(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) trace.samples.push_back(gen.next());
  return trace;
}

StepDetectorConfig step_detector_for(const SensorTrace& trace) {
  StepDetectorConfig config;
  if (trace.spec && (trace.spec->mode == SignalMode::walking ||
                     trace.spec->mode == SignalMode::running)) {
    config.threshold = kGravity + resolve_motion(*trace.spec, trace.sensor).amplitude / 2.0;
  }
  return config;
}

std::int64_t detect_steps(const SensorTrace& trace) {
  return detect_steps(trace, step_detector_for(trace));
}

std::int64_t detect_steps(const SensorTrace& trace, const StepDetectorConfig& config) {
  if (trace.samples.empty()) throw EmptyTrace("cannot detect steps in an empty trace");
  if (trace.sensor != SensorType::accelerometer) {
    throw IncompatibleMode("step detection needs an accelerometer trace");
  }
  const auto& s = trace.samples;
  const auto min_gap_ns = static_cast<std::int64_t>(config.min_separation_s * 1e9);
  std::int64_t count = 0;
  std::int64_t last_t = 0;
  double last_z = 0.0;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double z = s[i].values[2];
    if (!(z > s[i - 1].values[2] && z >= s[i + 1].values[2] && z > config.threshold)) continue;
    if (count > 0 && s[i].t_ns - last_t < min_gap_ns) {
      if (z > last_z) {
        last_t = s[i].t_ns;
        last_z = z;
      }
      continue;
    }
    ++count;
    last_t = s[i].t_ns;
    last_z = z;
  }
  return count;
}

}  // namespace spoofkit
