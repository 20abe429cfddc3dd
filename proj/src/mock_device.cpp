#include "spoofkit/mock_device.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "spoofkit/errors.hpp"
#include "spoofkit/json_codec.hpp"

namespace spoofkit {

namespace {

constexpr std::array<std::string_view, 6> kComparatorSymbols = {"<", "<=", ">", ">=", "==", "!="};

[[noreturn]] void config_fail(const std::string& message) { throw ConfigError(message); }

void only_fields(const Json& j, std::initializer_list<std::string_view> fields,
                 const std::string& where) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(fields.begin(), fields.end(), k) == fields.end()) {
      config_fail(where + ": unknown field '" + k + "'");
    }
  }
}

const Json& required(const Json& j, const char* field, const std::string& where) {
  if (!j.contains(field)) config_fail(where + ": missing '" + field + "'");
  return j[field];
}

std::string required_string(const Json& j, const char* field, const std::string& where) {
  const Json& v = required(j, field, where);
  if (!v.is_string() || v.get<std::string>().empty()) {
    config_fail(where + "." + field + ": must be a non-empty string");
  }
  return v.get<std::string>();
}

double required_number(const Json& j, const char* field, const std::string& where) {
  const Json& v = required(j, field, where);
  if (!v.is_number() || !std::isfinite(v.get<double>())) {
    config_fail(where + "." + field + ": must be a finite number");
  }
  return v.get<double>();
}

Comparator required_op(const Json& j, const std::string& where) {
  const Json& v = required(j, "op", where);
  if (!v.is_string()) config_fail(where + ".op: must be a string");
  const auto op = comparator_from_symbol(v.get<std::string>());
  if (!op) config_fail(where + ".op: unknown comparator '" + v.get<std::string>() + "'");
  return *op;
}

SensorType required_sensor(const Json& j, const std::string& where) {
  const auto name = required_string(j, "sensor", where);
  const auto sensor = sensor_from_name(name);
  if (!sensor) config_fail(where + ".sensor: unknown sensor '" + name + "'");
  return *sensor;
}

Condition parse_condition(const Json& when, const std::string& where) {
  if (!when.is_object() || when.size() != 1) {
    config_fail(where + ": must name exactly one of threshold, magnitude, delta");
  }
  const auto& [form, body] = *when.items().begin();
  const std::string at = where + "." + form;
  if (!body.is_object()) config_fail(at + ": must be an object");
  if (form == "threshold") {
    only_fields(body, {"key", "op", "value"}, at);
    ThresholdCondition c;
    const auto name = required_string(body, "key", at);
    const auto key = key_from_name(name);
    if (!key) config_fail(at + ".key: unknown key '" + name + "'");
    c.key = *key;
    c.op = required_op(body, at);
    const auto value = value_from_json(required(body, "value", at));
    if (!value) config_fail(at + ".value: must be a boolean, number or string");
    const auto kind = key_value_kind(c.key);
    const bool numeric = kind == ValueKind::integer || kind == ValueKind::real;
    if (numeric) {
      if (!std::holds_alternative<std::int64_t>(*value) && !std::holds_alternative<double>(*value)) {
        config_fail(at + ".value: " + name + " compares against numbers");
      }
      const double d = std::holds_alternative<double>(*value)
                           ? std::get<double>(*value)
                           : static_cast<double>(std::get<std::int64_t>(*value));
      c.value = PropertyValue{d};
    } else {
      const auto coerced = coerce_key_value(c.key, *value);
      if (!coerced) config_fail(at + ".value: wrong type for " + name);
      if (c.op != Comparator::eq && c.op != Comparator::ne) {
        config_fail(at + ".op: " + name + " only supports == and !=");
      }
      c.value = *coerced;
    }
    return c;
  }
  if (form == "magnitude") {
    only_fields(body, {"sensor", "op", "value", "sustain_samples"}, at);
    MagnitudeCondition c;
    c.sensor = required_sensor(body, at);
    c.op = required_op(body, at);
    c.value = required_number(body, "value", at);
    if (body.contains("sustain_samples")) {
      const Json& s = body["sustain_samples"];
      if (!s.is_number_integer() || s.get<std::int64_t>() < 1 || s.get<std::int64_t>() > 1000000) {
        config_fail(at + ".sustain_samples: must be an integer >= 1");
      }
      c.sustain_samples = s.get<int>();
    }
    return c;
  }
  if (form == "delta") {
    only_fields(body, {"sensor", "min_increase", "window_s"}, at);
    DeltaCondition c;
    c.sensor = required_sensor(body, at);
    if (c.sensor != SensorType::step_counter) {
      config_fail(at + ".sensor: delta rules watch the step_counter");
    }
    c.min_increase = required_number(body, "min_increase", at);
    if (c.min_increase <= 0.0) config_fail(at + ".min_increase: must be > 0");
    c.window_s = required_number(body, "window_s", at);
    if (c.window_s <= 0.0) config_fail(at + ".window_s: must be > 0");
    return c;
  }
  config_fail(where + ": unknown condition form '" + form + "'");
}

double as_number(const PropertyValue& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  return std::nan("");
}

double norm(const std::vector<double>& values) {
  double sum = 0.0;
  for (double v : values) sum += v * v;
  return std::sqrt(sum);
}

}  // namespace

std::string_view comparator_symbol(Comparator op) {
  return kComparatorSymbols[static_cast<std::size_t>(op)];
}

std::optional<Comparator> comparator_from_symbol(std::string_view symbol) {
  for (std::size_t i = 0; i < kComparatorSymbols.size(); ++i) {
    if (kComparatorSymbols[i] == symbol) return static_cast<Comparator>(i);
  }
  return std::nullopt;
}

bool compare(double lhs, Comparator op, double rhs) {
  switch (op) {
    case Comparator::lt: return lhs < rhs;
    case Comparator::le: return lhs <= rhs;
    case Comparator::gt: return lhs > rhs;
    case Comparator::ge: return lhs >= rhs;
    case Comparator::eq: return lhs == rhs;
    case Comparator::ne: return lhs != rhs;
  }
  return false;
}

PropertyValue default_baseline(SystemKey key) {
  switch (key) {
    case SystemKey::battery_level: return std::int64_t{87};
    case SystemKey::battery_charging: return false;
    case SystemKey::clock_offset_ms: return std::int64_t{0};
    case SystemKey::clock_scale: return 1.0;
    case SystemKey::build_model: return std::string("MockPhone");
    case SystemKey::build_manufacturer: return std::string("MockCorp");
    case SystemKey::build_android_version: return std::string("14");
    case SystemKey::ambient_temperature_c: return 22.0;
  }
  return std::int64_t{0};
}

MockAppConfig parse_app_config(std::string_view text) {
  const Json doc = Json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded()) config_fail("app config is not valid JSON");
  if (!doc.is_object()) config_fail("app config must be an object");
  only_fields(doc, {"process", "baseline", "rules", "tamper_mode"}, "config");

  MockAppConfig config;
  config.process = required_string(doc, "process", "config");
  for (auto key : kAllSystemKeys) config.baseline[key] = default_baseline(key);

  if (doc.contains("baseline")) {
    const Json& baseline = doc["baseline"];
    if (!baseline.is_object()) config_fail("baseline: must be an object");
    for (const auto& [name, raw] : baseline.items()) {
      const auto key = key_from_name(name);
      if (!key) config_fail("baseline: unknown key '" + name + "'");
      const auto value = value_from_json(raw);
      const auto coerced = value ? coerce_key_value(*key, *value) : std::nullopt;
      if (!coerced) config_fail("baseline." + name + ": wrong value type");
      if (auto msg = check_key_value(*key, *coerced)) config_fail("baseline." + name + ": " + *msg);
      config.baseline[*key] = *coerced;
    }
  }

  if (doc.contains("rules")) {
    const Json& rules = doc["rules"];
    if (!rules.is_array()) config_fail("rules: must be an array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const std::string where = "rules[" + std::to_string(i) + "]";
      const Json& r = rules[i];
      if (!r.is_object()) config_fail(where + ": must be an object");
      only_fields(r, {"name", "when", "emit", "flag"}, where);
      BehaviorRule rule;
      rule.name = required_string(r, "name", where);
      for (const auto& existing : config.rules) {
        if (existing.name == rule.name) config_fail(where + ".name: duplicate rule '" + rule.name + "'");
      }
      rule.when = parse_condition(required(r, "when", where), where + ".when");
      if (r.contains("emit")) rule.emit = required_string(r, "emit", where);
      if (r.contains("flag")) rule.flag = required_string(r, "flag", where);
      if (!rule.emit && !rule.flag) config_fail(where + ": needs emit or flag");
      config.rules.push_back(std::move(rule));
    }
  }

  if (doc.contains("tamper_mode")) {
    const Json& t = doc["tamper_mode"];
    if (t == "none") {
      config.tamper_mode = TamperMode::none;
    } else if (t == "reject_injection") {
      config.tamper_mode = TamperMode::reject_injection;
    } else {
      config_fail("tamper_mode: must be \"none\" or \"reject_injection\"");
    }
  }
  return config;
}

MockApp::MockApp(MockAppConfig config) : config_(std::move(config)) {
  for (auto key : kAllSystemKeys) {
    if (!config_.baseline.count(key)) config_.baseline[key] = default_baseline(key);
  }
  rule_state_.resize(config_.rules.size());
  for (const auto& rule : config_.rules) {
    if (rule.flag) flags_[*rule.flag] = false;
  }
}

void MockApp::on_attach() {
  std::lock_guard lock(mu_);
  last_seq_ = 0;
}

std::vector<AgentMessage> MockApp::deliver(const HostMessage& message) {
  std::lock_guard lock(mu_);
  return handle(message);
}

std::vector<std::string> MockApp::deliver_line(std::string_view line) {
  std::vector<AgentMessage> replies;
  try {
    replies = deliver(decode_host(line));
  } catch (const ProtocolError& e) {
    std::uint64_t ref = 0;
    const Json j = Json::parse(line.begin(), line.end(), nullptr, false);
    if (j.is_object() && j.contains("seq") && j["seq"].is_number_unsigned()) {
      ref = j["seq"].get<std::uint64_t>();
    }
    replies.push_back(msg::Nack{ref, e.what()});
  }
  std::vector<std::string> lines;
  lines.reserve(replies.size());
  for (const auto& r : replies) lines.push_back(encode(r));
  return lines;
}

std::vector<AgentMessage> MockApp::handle(const HostMessage& message) {
  std::vector<AgentMessage> out;
  const std::uint64_t seq = seq_of(message);
  if (seq <= last_seq_) {
    out.push_back(msg::Ack{seq});
    return out;
  }
  last_seq_ = seq;
  received_.emplace_back(type_of(message));

  auto nack = [&](std::string reason) { out.push_back(msg::Nack{seq, std::move(reason)}); };

  if (const auto* m = std::get_if<msg::ApplyPlan>(&message)) {
    if (config_.tamper_mode == TamperMode::reject_injection) {
      nack("injection rejected");
      return out;
    }
    if (plan_) {
      nack("plan already applied");
      return out;
    }
    if (m->plan.target.process != config_.process) {
      nack("plan targets " + m->plan.target.process);
      return out;
    }
    plan_ = m->plan;
    for (const auto& hook : m->plan.hooks) {
      for (auto key : property_keys_for_api(hook.api)) hooked_keys_.insert(key);
      if (auto sensor = sensor_for_api(hook.api)) hooked_sensors_.insert(*sensor);
      switch (hook.kind) {
        case HookKind::sensor_stream:
          if (hook.value) overrides_[SystemKey::ambient_temperature_c] = *hook.value;
          break;
        case HookKind::property_constant:
          overrides_[property_keys_for_api(hook.api).front()] = *hook.value;
          break;
        case HookKind::property_program:
          if (hook.signal->mode == SignalMode::battery_discharge) {
            const double start =
                hook.signal->scalar("start_level").value_or(static_cast<double>(kDefaultStartLevel));
            overrides_[SystemKey::battery_level] = static_cast<std::int64_t>(std::llround(start));
          } else {
            const double offset = hook.signal->scalar("offset_ms").value_or(0.0);
            overrides_[SystemKey::clock_offset_ms] = static_cast<std::int64_t>(std::llround(offset));
            overrides_[SystemKey::clock_scale] = hook.signal->scalar("scale").value_or(1.0);
          }
          break;
      }
    }
    out.push_back(msg::Ack{seq});
  } else if (const auto* m = std::get_if<msg::Sample>(&message)) {
    if (!plan_) {
      nack("no plan applied");
      return out;
    }
    if (!hooked_sensors_.count(m->sensor)) {
      nack("sensor not hooked");
      return out;
    }
    observe_sample(*m);
    out.push_back(msg::Ack{seq});
  } else if (const auto* m = std::get_if<msg::SetProperty>(&message)) {
    if (!plan_) {
      nack("no plan applied");
      return out;
    }
    if (!hooked_keys_.count(m->key)) {
      nack("key not hooked");
      return out;
    }
    if (auto problem = check_key_value(m->key, m->value)) {
      nack("invalid value: " + *problem);
      return out;
    }
    overrides_[m->key] = m->value;
    out.push_back(msg::Ack{seq});
  } else if (const auto* m = std::get_if<msg::Query>(&message)) {
    auto it = overrides_.find(m->key);
    out.push_back(msg::Value{seq, m->key,
                             it != overrides_.end() ? it->second : config_.baseline.at(m->key)});
    return out;
  } else {
    plan_.reset();
    overrides_.clear();
    hooked_keys_.clear();
    hooked_sensors_.clear();
    clear_streams();
    out.push_back(msg::Ack{seq});
  }
  evaluate(out);
  return out;
}

void MockApp::observe_sample(const msg::Sample& s) {
  now_ns_ = std::max(now_ns_, s.t_ns);
  samples_[s.sensor] = s.values;
  if (s.sensor == SensorType::ambient_temperature) {
    overrides_[SystemKey::ambient_temperature_c] = s.values.front();
  }
  for (std::size_t i = 0; i < config_.rules.size(); ++i) {
    auto& st = rule_state_[i];
    if (const auto* c = std::get_if<MagnitudeCondition>(&config_.rules[i].when)) {
      if (c->sensor != s.sensor) continue;
      st.streak = compare(norm(s.values), c->op, c->value) ? st.streak + 1 : 0;
    } else if (const auto* c = std::get_if<DeltaCondition>(&config_.rules[i].when)) {
      if (c->sensor != s.sensor) continue;
      st.window.emplace_back(s.t_ns, s.values.front());
      const auto horizon = s.t_ns - static_cast<std::int64_t>(std::llround(c->window_s * 1e9));
      while (st.window.front().first < horizon) st.window.pop_front();
    }
  }
}

void MockApp::clear_streams() {
  samples_.clear();
  for (auto& st : rule_state_) {
    st.streak = 0;
    st.window.clear();
  }
}

bool MockApp::holds(std::size_t index) const {
  const auto& rule = config_.rules[index];
  const auto& st = rule_state_[index];
  if (const auto* c = std::get_if<ThresholdCondition>(&rule.when)) {
    auto it = overrides_.find(c->key);
    const PropertyValue& v = it != overrides_.end() ? it->second : config_.baseline.at(c->key);
    if (std::holds_alternative<double>(c->value)) {
      return compare(as_number(v), c->op, std::get<double>(c->value));
    }
    return (v == c->value) == (c->op == Comparator::eq);
  }
  if (const auto* c = std::get_if<MagnitudeCondition>(&rule.when)) {
    return st.streak >= c->sustain_samples;
  }
  const auto& c = std::get<DeltaCondition>(rule.when);
  if (st.window.empty()) return false;
  double lowest = st.window.front().second;
  for (const auto& [t, v] : st.window) lowest = std::min(lowest, v);
  return st.window.back().second - lowest >= c.min_increase;
}

void MockApp::evaluate(std::vector<AgentMessage>& out) {
  for (std::size_t i = 0; i < config_.rules.size(); ++i) {
    const auto& rule = config_.rules[i];
    const bool now = holds(i);
    const bool rising = now && !rule_state_[i].last;
    rule_state_[i].last = now;
    if (rule.flag) flags_[*rule.flag] = now;
    if (rising && rule.emit) {
      AppEvent e{++event_seq_, *rule.emit, now_ns_};
      events_.push_back(e);
      out.push_back(msg::Event{e.seq, e.name, e.t_ns});
    }
  }
}

PropertyValue MockApp::perceived(SystemKey key) const {
  std::lock_guard lock(mu_);
  auto it = overrides_.find(key);
  return it != overrides_.end() ? it->second : config_.baseline.at(key);
}

std::optional<std::vector<double>> MockApp::perceived_sample(SensorType sensor) const {
  std::lock_guard lock(mu_);
  if (auto it = samples_.find(sensor); it != samples_.end()) return it->second;
  switch (sensor) {
    case SensorType::accelerometer: return std::vector<double>{0.0, 0.0, kGravity};
    case SensorType::gyroscope: return std::vector<double>{0.0, 0.0, 0.0};
    case SensorType::ambient_temperature: {
      auto it = overrides_.find(SystemKey::ambient_temperature_c);
      const auto& v = it != overrides_.end() ? it->second
                                             : config_.baseline.at(SystemKey::ambient_temperature_c);
      return std::vector<double>{as_number(v)};
    }
    case SensorType::step_counter: return std::nullopt;
  }
  return std::nullopt;
}

bool MockApp::plan_active() const {
  std::lock_guard lock(mu_);
  return plan_.has_value();
}

std::optional<std::string> MockApp::active_plan_id() const {
  std::lock_guard lock(mu_);
  if (!plan_) return std::nullopt;
  return plan_->plan_id;
}

std::vector<AppEvent> MockApp::event_log() const {
  std::lock_guard lock(mu_);
  return events_;
}

bool MockApp::flag(std::string_view name) const {
  std::lock_guard lock(mu_);
  auto it = flags_.find(name);
  return it != flags_.end() && it->second;
}

std::vector<std::string> MockApp::received() const {
  std::lock_guard lock(mu_);
  return received_;
}

std::map<SystemKey, PropertyValue> MockApp::overrides() const {
  std::lock_guard lock(mu_);
  return overrides_;
}

std::shared_ptr<MockApp> MockDevice::spawn(MockAppConfig config) {
  if (config.process.empty()) throw ConfigError("process name must be non-empty");
  std::lock_guard lock(mu_);
  if (apps_.count(config.process)) throw DuplicateProcess("process already running: " + config.process);
  auto app = std::make_shared<MockApp>(std::move(config));
  apps_.emplace(app->process(), app);
  return app;
}

std::shared_ptr<MockApp> MockDevice::spawn_from_document(std::string_view text) {
  return spawn(parse_app_config(text));
}

std::shared_ptr<MockApp> MockDevice::find(std::string_view process) const {
  std::lock_guard lock(mu_);
  auto it = apps_.find(process);
  return it == apps_.end() ? nullptr : it->second;
}

bool MockDevice::kill(std::string_view process) {
  std::lock_guard lock(mu_);
  auto it = apps_.find(process);
  if (it == apps_.end()) return false;
  apps_.erase(it);
  return true;
}

}  // namespace spoofkit
