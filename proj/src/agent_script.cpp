#include "spoofkit/agent_script.hpp"

#include <sstream>

namespace spoofkit {

namespace {

std::string js(const std::string& s) { return Json(s).dump(); }
std::string js(std::string_view s) { return Json(std::string(s)).dump(); }

// android.hardware.Sensor TYPE_* constants.
int android_sensor_type(SensorType sensor) {
  switch (sensor) {
    case SensorType::accelerometer: return 1;
    case SensorType::gyroscope: return 4;
    case SensorType::ambient_temperature: return 13;
    case SensorType::step_counter: return 19;
  }
  return 0;
}

// Property values the stanza installs before the first host message.
Json initial_props(const Hook& hook) {
  Json initial = Json::object();
  switch (hook.kind) {
    case HookKind::property_constant:
      initial[std::string(key_name(property_keys_for_api(hook.api).front()))] =
          value_to_json(*hook.value);
      break;
    case HookKind::property_program:
      if (hook.signal->mode == SignalMode::battery_discharge) {
        initial["battery.level"] = static_cast<std::int64_t>(
            hook.signal->scalar("start_level").value_or(static_cast<double>(kDefaultStartLevel)));
      } else {
        initial["clock.offset_ms"] =
            static_cast<std::int64_t>(hook.signal->scalar("offset_ms").value_or(0.0));
        initial["clock.scale"] = hook.signal->scalar("scale").value_or(1.0);
      }
      break;
    case HookKind::sensor_stream:
      if (hook.value) initial["ambient.temperature_c"] = value_to_json(*hook.value);
      break;
  }
  return initial;
}

Json key_list(TargetApi api) {
  Json keys = Json::array();
  for (auto k : property_keys_for_api(api)) keys.push_back(std::string(key_name(k)));
  return keys;
}

void sensor_body(std::ostream& out, const Hook& hook, SensorType sensor) {
  const auto& b = binding(hook.api);
  const std::string name = js(sensor_name(sensor));
  const bool temperature = sensor == SensorType::ambient_temperature;
  out << "  install: function () {\n"
      << "    const SensorEventQueue = Java.use(" << js(b.java_class) << ");\n"
      << "    const Sensor = Java.use('android.hardware.Sensor');\n"
      << "    const dispatch = SensorEventQueue." << b.member
      << ".overload('int', '[F', 'int', 'long');\n"
      << "    const previous = dispatch.implementation;\n"
      << "    dispatch.implementation = function (handle, values, accuracy, timestamp) {\n"
      << "      const sensor = this.mManager.value.mHandleToSensor.value.get(handle);\n"
      << "      if (sensor !== null && Java.cast(sensor, Sensor).getType() === "
      << android_sensor_type(sensor) << ") {\n";
  if (temperature) {
    out << "        state.real['ambient.temperature_c'] = values[0];\n"
        << "        const spoofed = state.props['ambient.temperature_c'];\n"
        << "        if (!state.bypass && spoofed !== undefined) {\n"
        << "          values[0] = spoofed;\n"
        << "        }\n";
  } else {
    out << "        const spoofed = state.samples[" << name << "];\n"
        << "        if (!state.bypass && spoofed !== undefined) {\n"
        << "          for (let i = 0; i < spoofed.length; i++) {\n"
        << "            values[i] = spoofed[i];\n"
        << "          }\n"
        << "        }\n";
  }
  out << "      }\n"
      << "      if (previous) {\n"
      << "        return previous.call(this, handle, values, accuracy, timestamp);\n"
      << "      }\n"
      << "      return dispatch.call(this, handle, values, accuracy, timestamp);\n"
      << "    };\n"
      << "    return function () {\n"
      << "      dispatch.implementation = previous;\n"
      << "    };\n"
      << "  },\n";
  if (temperature) {
    out << "  read: function () {\n"
        << "    const last = state.real['ambient.temperature_c'];\n"
        << "    return last === undefined ? {} : { 'ambient.temperature_c': last };\n"
        << "  },\n";
  } else {
    out << "  read: function () {\n"
        << "    return {};\n"
        << "  },\n";
  }
}

void battery_body(std::ostream& out, const Hook& hook) {
  const auto& b = binding(hook.api);
  out << "  install: function () {\n"
      << "    const BatteryManager = Java.use(" << js(b.java_class) << ");\n";
  if (hook.api == TargetApi::battery_capacity) {
    // BATTERY_PROPERTY_CAPACITY == 4.
    out << "    const getIntProperty = BatteryManager.getIntProperty.overload('int');\n"
        << "    getIntProperty.implementation = function (id) {\n"
        << "      const spoofed = state.props['battery.level'];\n"
        << "      if (id === 4 && !state.bypass && spoofed !== undefined) {\n"
        << "        return spoofed;\n"
        << "      }\n"
        << "      return getIntProperty.call(this, id);\n"
        << "    };\n"
        << "    return function () {\n"
        << "      getIntProperty.implementation = null;\n"
        << "    };\n"
        << "  },\n"
        << "  read: function () {\n"
        << "    const BatteryManager = Java.use(" << js(b.java_class) << ");\n"
        << "    const manager = Java.cast(systemService('batterymanager'), BatteryManager);\n"
        << "    return { 'battery.level': manager.getIntProperty(4) };\n"
        << "  },\n";
  } else {
    out << "    const isCharging = BatteryManager.isCharging.overload();\n"
        << "    isCharging.implementation = function () {\n"
        << "      const spoofed = state.props['battery.charging'];\n"
        << "      if (!state.bypass && spoofed !== undefined) {\n"
        << "        return spoofed;\n"
        << "      }\n"
        << "      return isCharging.call(this);\n"
        << "    };\n"
        << "    return function () {\n"
        << "      isCharging.implementation = null;\n"
        << "    };\n"
        << "  },\n"
        << "  read: function () {\n"
        << "    const BatteryManager = Java.use(" << js(b.java_class) << ");\n"
        << "    const manager = Java.cast(systemService('batterymanager'), BatteryManager);\n"
        << "    return { 'battery.charging': manager.isCharging() };\n"
        << "  },\n";
  }
}

void clock_body(std::ostream& out, const Hook& hook) {
  const auto& b = binding(hook.api);
  const std::string var = hook.api == TargetApi::clock_current_time_millis ? "JavaSystem"
                                                                           : "SystemClock";
  const std::string method{b.member};
  out << "  install: function () {\n"
      << "    const " << var << " = Java.use(" << js(b.java_class) << ");\n"
      << "    const " << method << " = " << var << "." << method << ".overload();\n"
      << "    " << method << ".implementation = function () {\n"
      << "      const real = " << method << ".call(" << var << ");\n"
      << "      const offset = state.props['clock.offset_ms'];\n"
      << "      if (state.bypass || offset === undefined) {\n"
      << "        return real;\n"
      << "      }\n"
      << "      return real + offset;\n"
      << "    };\n"
      << "    return function () {\n"
      << "      " << method << ".implementation = null;\n"
      << "    };\n"
      << "  },\n"
      << "  read: function () {\n"
      << "    return { 'clock.offset_ms': 0, 'clock.scale': 1.0 };\n"
      << "  },\n";
}

void build_body(std::ostream& out, const Hook& hook) {
  const auto& b = binding(hook.api);
  const std::string key = js(key_name(property_keys_for_api(hook.api).front()));
  const std::string field{b.member};
  out << "  install: function () {\n"
      << "    const Build = Java.use(" << js(b.java_class) << ");\n"
      << "    const original = Build." << field << ".value;\n"
      << "    state.real[" << key << "] = original;\n"
      << "    Build." << field << ".value = state.props[" << key << "];\n"
      << "    return function () {\n"
      << "      Build." << field << ".value = original;\n"
      << "    };\n"
      << "  },\n"
      << "  refresh: function () {\n"
      << "    const Build = Java.use(" << js(b.java_class) << ");\n"
      << "    Build." << field << ".value = state.props[" << key << "];\n"
      << "  },\n"
      << "  read: function () {\n"
      << "    const Build = Java.use(" << js(b.java_class) << ");\n"
      << "    const real = state.real[" << key << "];\n"
      << "    return { [" << key << "]: real === undefined ? Build." << field
      << ".value : real };\n"
      << "  },\n";
}

void stanza(std::ostream& out, const Hook& hook) {
  const auto& b = binding(hook.api);
  out << "// @hook " << b.name << " class=" << b.class_token
      << " kind=" << hook_kind_name(hook.kind) << "\n"
      << "hooks.push({\n"
      << "  api: " << js(b.name) << ",\n"
      << "  keys: " << key_list(hook.api).dump() << ",\n"
      << "  initial: " << initial_props(hook).dump() << ",\n";
  if (hook.rate_hz) out << "  rateHz: " << Json(*hook.rate_hz).dump() << ",\n";
  switch (b.family) {
    case ApiFamily::sensor: sensor_body(out, hook, *sensor_for_api(hook.api)); break;
    case ApiFamily::battery: battery_body(out, hook); break;
    case ApiFamily::clock: clock_body(out, hook); break;
    case ApiFamily::build: build_body(out, hook); break;
  }
  out << "});\n"
      << "// @end " << b.name << "\n\n";
}

constexpr const char* kPrelude = R"JS('use strict';

const state = {
  props: {},
  samples: {},
  real: {},
  installed: [],
  bypass: false,
  planActive: false,
  lastSeq: 0,
};
const hooks = [];

function systemService(name) {
  const app = Java.use('android.app.ActivityThread').currentApplication();
  return app.getApplicationContext().getSystemService(name);
}

)JS";

constexpr const char* kScaffold = R"JS(function installHooks() {
  for (const hook of hooks) {
    Object.assign(state.props, hook.initial);
    try {
      state.installed.push(hook.install());
    } catch (e) {
      restoreAll();
      throw e;
    }
  }
}

function refreshAll() {
  for (const hook of hooks) {
    if (hook.refresh) {
      hook.refresh();
    }
  }
}

function readReal(key) {
  for (const hook of hooks) {
    if (hook.keys.indexOf(key) < 0) {
      continue;
    }
    state.bypass = true;
    try {
      const values = hook.read();
      if (key in values) {
        return values[key];
      }
    } finally {
      state.bypass = false;
    }
  }
  return undefined;
}

// @restore
function restoreAll() {
  while (state.installed.length > 0) {
    const detach = state.installed.pop();
    detach();
  }
  state.props = {};
  state.samples = {};
  state.planActive = false;
}
// @end restore

function hookedSensor(name) {
  return hooks.some(function (hook) {
    return hook.api === 'sensor.' + name + '.onSensorChanged';
  });
}

function hookedKey(key) {
  return hooks.some(function (hook) {
    return hook.keys.indexOf(key) >= 0;
  });
}

function reply(message) {
  send(message);
}

function onMessage(message) {
  if (message.seq <= state.lastSeq) {
    reply({ type: 'ack', ref: message.seq });
    recv(onMessage);
    return;
  }
  state.lastSeq = message.seq;
  try {
    switch (message.type) {
      case 'apply_plan':
        if (message.plan.plan_id !== PLAN_ID) {
          reply({ type: 'nack', ref: message.seq, reason: 'plan mismatch' });
          break;
        }
        if (state.planActive) {
          reply({ type: 'nack', ref: message.seq, reason: 'plan already applied' });
          break;
        }
        Java.perform(installHooks);
        state.planActive = true;
        reply({ type: 'ack', ref: message.seq });
        break;
      case 'sample':
        if (!state.planActive) {
          reply({ type: 'nack', ref: message.seq, reason: 'no plan applied' });
          break;
        }
        if (!hookedSensor(message.sensor)) {
          reply({ type: 'nack', ref: message.seq, reason: 'sensor not hooked' });
          break;
        }
        state.samples[message.sensor] = message.values;
        if (message.sensor === 'ambient_temperature') {
          state.props['ambient.temperature_c'] = message.values[0];
        }
        reply({ type: 'ack', ref: message.seq });
        break;
      case 'set_property':
        if (!state.planActive) {
          reply({ type: 'nack', ref: message.seq, reason: 'no plan applied' });
          break;
        }
        if (!hookedKey(message.key)) {
          reply({ type: 'nack', ref: message.seq, reason: 'key not hooked' });
          break;
        }
        state.props[message.key] = message.value;
        Java.perform(refreshAll);
        reply({ type: 'ack', ref: message.seq });
        break;
      case 'query': {
        let value = state.props[message.key];
        if (value === undefined) {
          Java.perform(function () {
            value = readReal(message.key);
          });
        }
        if (value === undefined) {
          reply({ type: 'nack', ref: message.seq, reason: 'unreadable key' });
        } else {
          reply({ type: 'value', ref: message.seq, key: message.key, value: value });
        }
        break;
      }
      case 'restore':
        Java.perform(restoreAll);
        reply({ type: 'ack', ref: message.seq });
        break;
      default:
        reply({ type: 'nack', ref: message.seq, reason: 'unknown message type' });
    }
  } catch (e) {
    reply({ type: 'nack', ref: message.seq, reason: String(e) });
  }
  recv(onMessage);
}

recv(onMessage);
)JS";

}  // namespace

std::string emit_agent_script(const HookPlan& plan) {
  std::ostringstream out;
  out << "// spoofkit agent\n"
      << "// plan " << plan.plan_id << "\n"
      << "// target " << plan.target.process << "\n"
      << kPrelude << "const PLAN_ID = " << js(plan.plan_id) << ";\n\n";
  for (const auto& hook : plan.hooks) stanza(out, hook);
  out << kScaffold;
  return out.str();
}

}  // namespace spoofkit
