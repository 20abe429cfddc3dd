#include "spoofkit/profile.hpp"

#include <algorithm>
#include <cmath>

#include "spoofkit/json_codec.hpp"

namespace spoofkit {

namespace {

using Severity = Diagnostic::Severity;

std::string sensor_path(std::size_t i) { return "overrides.sensors[" + std::to_string(i) + "]"; }
std::string system_path(std::size_t i) { return "overrides.system[" + std::to_string(i) + "]"; }

std::string join(const std::string& base, const std::string& rel) {
  if (rel.empty()) return base;
  return base + "." + rel;
}

class Collector {
 public:
  void error(std::string path, std::string message) {
    out.push_back({Severity::error, std::move(path), std::move(message)});
  }
  void warning(std::string path, std::string message) {
    out.push_back({Severity::warning, std::move(path), std::move(message)});
  }
  bool has_errors() const {
    return std::any_of(out.begin(), out.end(), [](const Diagnostic& d) { return d.is_error(); });
  }
  std::vector<Diagnostic> out;
};

void reject_unknown_fields(const Json& j, std::initializer_list<std::string_view> known,
                           const std::string& path, Collector& diags) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      diags.error(join(path, k), "unknown field '" + k + "'");
    }
  }
}

void check_rate(double rate, const std::string& path, Collector& diags) {
  if (!std::isfinite(rate) || rate <= 0.0) {
    diags.error(path, "sampling rate must be > 0");
  } else if (rate > kHighRateWarningHz) {
    diags.warning(path, "unusually high sampling rate");
  }
}

std::optional<SensorOverride> read_sensor(const Json& j, const std::string& path,
                                          Collector& diags) {
  if (!j.is_object()) {
    diags.error(path, "sensor override must be an object");
    return std::nullopt;
  }
  bool ok = true;
  SensorOverride o;
  if (!j.contains("sensor") || !j["sensor"].is_string()) {
    diags.error(join(path, "sensor"), "sensor must be a string");
    ok = false;
  } else if (auto sensor = sensor_from_name(j["sensor"].get<std::string>())) {
    o.sensor = *sensor;
  } else {
    diags.error(join(path, "sensor"), "unknown sensor '" + j["sensor"].get<std::string>() + "'");
    ok = false;
  }
  std::vector<JsonIssue> issues;
  auto spec = spec_from_json(j, issues, {"sensor", "rate_hz"});
  for (const auto& issue : issues) diags.error(join(path, issue.path), issue.message);
  if (spec) {
    o.signal = std::move(*spec);
  } else {
    ok = false;
  }
  if (j.contains("rate_hz")) {
    if (!j["rate_hz"].is_number()) {
      diags.error(join(path, "rate_hz"), "rate_hz must be a number");
      ok = false;
    } else {
      o.rate_hz = j["rate_hz"].get<double>();
    }
  }
  if (!ok) return std::nullopt;
  return o;
}

std::optional<SystemOverride> read_system(const Json& j, const std::string& path,
                                          Collector& diags) {
  if (!j.is_object()) {
    diags.error(path, "system override must be an object");
    return std::nullopt;
  }
  reject_unknown_fields(j, {"key", "value", "program"}, path, diags);
  SystemOverride o;
  if (!j.contains("key") || !j["key"].is_string()) {
    diags.error(join(path, "key"), "key must be a string");
    return std::nullopt;
  }
  const auto name = j["key"].get<std::string>();
  const auto key = key_from_name(name);
  if (!key) {
    diags.error(join(path, "key"), "unknown system key '" + name + "'");
    return std::nullopt;
  }
  o.key = *key;
  const bool has_value = j.contains("value");
  const bool has_program = j.contains("program");
  if (has_value == has_program) {
    diags.error(path, "exactly one of 'value' or 'program' is required");
    return std::nullopt;
  }
  if (has_value) {
    const auto raw = value_from_json(j["value"]);
    if (!raw) {
      diags.error(join(path, "value"), name + " has an unsupported value type");
      return std::nullopt;
    }
    const auto coerced = coerce_key_value(*key, *raw);
    if (!coerced) {
      // Report the domain message for the raw value, e.g. "must be an integer".
      diags.error(join(path, "value"), check_key_value(*key, *raw).value_or(name + " has the wrong type"));
      return std::nullopt;
    }
    o.value_program = *coerced;
    return o;
  }
  std::vector<JsonIssue> issues;
  auto spec = spec_from_json(j["program"], issues);
  for (const auto& issue : issues) diags.error(join(join(path, "program"), issue.path), issue.message);
  if (!spec) return std::nullopt;
  o.value_program = std::move(*spec);
  return o;
}

// Which clock warp parameters an override supplies.
struct ClockContribution {
  bool offset = false;
  bool scale = false;
};

ClockContribution clock_contribution(const SystemOverride& o) {
  ClockContribution c;
  if (o.key == SystemKey::clock_offset_ms) c.offset = true;
  if (o.key == SystemKey::clock_scale) c.scale = true;
  if (const auto* program = o.program(); program && program->mode == SignalMode::clock_warp) {
    c.offset = c.offset || program->params.contains("offset_ms");
    c.scale = c.scale || program->params.contains("scale");
  }
  return c;
}

Json profile_to_json(const SpoofProfile& p) {
  Json sensors = Json::array();
  for (const auto& o : p.sensor_overrides) {
    Json entry = Json::object();
    entry["sensor"] = std::string(sensor_name(o.sensor));
    const Json spec = spec_to_json(o.signal);
    entry["mode"] = spec["mode"];
    entry["params"] = spec["params"];
    if (o.rate_hz) entry["rate_hz"] = *o.rate_hz;
    sensors.push_back(std::move(entry));
  }
  Json system = Json::array();
  for (const auto& o : p.system_overrides) {
    Json entry = Json::object();
    entry["key"] = std::string(key_name(o.key));
    if (const auto* value = o.constant()) {
      entry["value"] = value_to_json(*value);
    } else {
      entry["program"] = spec_to_json(*o.program());
    }
    system.push_back(std::move(entry));
  }
  Json doc = Json::object();
  doc["version"] = p.version;
  doc["target"] = Json{{"process", p.target.process}};
  doc["default_rate_hz"] = p.default_rate_hz;
  doc["overrides"] = Json{{"sensors", std::move(sensors)}, {"system", std::move(system)}};
  return doc;
}

}  // namespace

const SensorOverride* SpoofProfile::find_sensor(SensorType sensor) const {
  for (const auto& o : sensor_overrides) {
    if (o.sensor == sensor) return &o;
  }
  return nullptr;
}

const SystemOverride* SpoofProfile::find_key(SystemKey key) const {
  for (const auto& o : system_overrides) {
    if (o.key == key) return &o;
  }
  return nullptr;
}

std::vector<Diagnostic> validate_profile(const SpoofProfile& profile) {
  Collector diags;
  if (profile.version != kProfileVersion) {
    diags.error("version", "unsupported version " + std::to_string(profile.version) +
                               " (expected " + std::to_string(kProfileVersion) + ")");
  }
  if (profile.target.process.empty()) diags.error("target.process", "target process must be non-empty");
  check_rate(profile.default_rate_hz, "default_rate_hz", diags);

  std::vector<SensorType> seen_sensors;
  for (std::size_t i = 0; i < profile.sensor_overrides.size(); ++i) {
    const auto& o = profile.sensor_overrides[i];
    const auto path = sensor_path(i);
    if (std::find(seen_sensors.begin(), seen_sensors.end(), o.sensor) != seen_sensors.end()) {
      diags.error(join(path, "sensor"), "duplicate sensor type " + std::string(sensor_name(o.sensor)));
    }
    seen_sensors.push_back(o.sensor);
    for (const auto& issue : check_signal_spec(o.signal, o.sensor)) {
      diags.error(issue.param.empty() ? join(path, "mode") : join(path, "params." + issue.param),
                  issue.message);
    }
    if (o.rate_hz) check_rate(*o.rate_hz, join(path, "rate_hz"), diags);
  }

  std::vector<SystemKey> seen_keys;
  ClockContribution clock_seen;
  for (std::size_t i = 0; i < profile.system_overrides.size(); ++i) {
    const auto& o = profile.system_overrides[i];
    const auto path = system_path(i);
    if (std::find(seen_keys.begin(), seen_keys.end(), o.key) != seen_keys.end()) {
      diags.error(join(path, "key"), "duplicate system key " + std::string(key_name(o.key)));
      continue;
    }
    seen_keys.push_back(o.key);
    if (const auto* value = o.constant()) {
      if (auto msg = check_key_value(o.key, *value)) diags.error(join(path, "value"), *msg);
    } else {
      for (const auto& issue : check_program_spec(*o.program(), o.key)) {
        diags.error(issue.param.empty() ? join(path, "program.mode")
                                        : join(path, "program.params." + issue.param),
                    issue.message);
      }
    }
    const auto c = clock_contribution(o);
    if ((c.offset && clock_seen.offset) || (c.scale && clock_seen.scale)) {
      diags.error(path, "conflicting clock warp parameters: offset and scale may each be set once");
    }
    clock_seen.offset = clock_seen.offset || c.offset;
    clock_seen.scale = clock_seen.scale || c.scale;
  }

  if (profile.find_sensor(SensorType::ambient_temperature) != nullptr &&
      profile.find_key(SystemKey::ambient_temperature_c) != nullptr) {
    diags.warning("overrides",
                  "ambient temperature set by both a sensor stream and ambient.temperature_c; "
                  "the stream replaces the property value from its first sample");
  }
  return diags.out;
}

ProfileAnalysis analyze_profile(std::string_view text) {
  ProfileAnalysis result;
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    result.syntax_error = SyntaxError("", std::string("malformed profile document: ") + e.what());
    result.diagnostics.push_back({Severity::error, "", result.syntax_error->what()});
    return result;
  }
  Collector diags;
  if (!doc.is_object()) {
    diags.error("", "profile document must be an object");
    result.diagnostics = std::move(diags.out);
    return result;
  }
  reject_unknown_fields(doc, {"version", "target", "overrides", "default_rate_hz"}, "", diags);

  SpoofProfile profile;
  if (!doc.contains("version")) {
    diags.error("version", "missing version");
  } else if (!doc["version"].is_number_integer()) {
    diags.error("version", "version must be an integer");
  } else if (doc["version"].is_number_unsigned() ? doc["version"].get<std::uint64_t>() > 1000000
                                                 : doc["version"].get<std::int64_t>() < -1000000) {
    diags.error("version", "unsupported version");
  } else {
    profile.version = doc["version"].get<int>();
  }

  if (!doc.contains("target") || !doc["target"].is_object()) {
    diags.error("target", "target must be an object with a process name");
  } else {
    const auto& target = doc["target"];
    reject_unknown_fields(target, {"process"}, "target", diags);
    if (!target.contains("process") || !target["process"].is_string()) {
      diags.error("target.process", "target.process must be a string");
    } else {
      profile.target.process = target["process"].get<std::string>();
    }
  }

  if (doc.contains("default_rate_hz")) {
    if (!doc["default_rate_hz"].is_number()) {
      diags.error("default_rate_hz", "default_rate_hz must be a number");
    } else {
      profile.default_rate_hz = doc["default_rate_hz"].get<double>();
    }
  }

  // Entries that fail to read are dropped, so later checks must not rely on
  // their indexes; paths are taken from the document position.
  std::vector<std::size_t> sensor_index;
  std::vector<std::size_t> system_index;
  if (doc.contains("overrides")) {
    const auto& overrides = doc["overrides"];
    if (!overrides.is_object()) {
      diags.error("overrides", "overrides must be an object");
    } else {
      reject_unknown_fields(overrides, {"sensors", "system"}, "overrides", diags);
      if (overrides.contains("sensors")) {
        if (!overrides["sensors"].is_array()) {
          diags.error("overrides.sensors", "overrides.sensors must be an array");
        } else {
          for (std::size_t i = 0; i < overrides["sensors"].size(); ++i) {
            if (auto o = read_sensor(overrides["sensors"][i], sensor_path(i), diags)) {
              profile.sensor_overrides.push_back(std::move(*o));
              sensor_index.push_back(i);
            }
          }
        }
      }
      if (overrides.contains("system")) {
        if (!overrides["system"].is_array()) {
          diags.error("overrides.system", "overrides.system must be an array");
        } else {
          for (std::size_t i = 0; i < overrides["system"].size(); ++i) {
            if (auto o = read_system(overrides["system"][i], system_path(i), diags)) {
              profile.system_overrides.push_back(std::move(*o));
              system_index.push_back(i);
            }
          }
        }
      }
    }
  }

  // Re-anchor semantic diagnostics onto document positions.
  for (auto d : validate_profile(profile)) {
    auto remap = [&](std::string_view prefix, const std::vector<std::size_t>& index,
                     auto make_path) {
      if (!d.path.starts_with(prefix)) return;
      const auto close = d.path.find(']', prefix.size());
      const auto i = std::stoul(d.path.substr(prefix.size(), close - prefix.size()));
      d.path = make_path(index[i]) + d.path.substr(close + 1);
    };
    remap("overrides.sensors[", sensor_index, sensor_path);
    remap("overrides.system[", system_index, system_path);
    diags.out.push_back(std::move(d));
  }

  if (!diags.has_errors()) result.profile = std::move(profile);
  result.diagnostics = std::move(diags.out);
  return result;
}

SpoofProfile parse_profile(std::string_view text) {
  auto analysis = analyze_profile(text);
  if (analysis.syntax_error) throw *analysis.syntax_error;
  if (!analysis.profile) throw SchemaError(std::move(analysis.diagnostics));
  return std::move(*analysis.profile);
}

std::string serialize_profile(const SpoofProfile& profile) {
  return profile_to_json(profile).dump(2) + "\n";
}

}  // namespace spoofkit
