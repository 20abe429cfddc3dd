#include "spoofkit/protocol.hpp"

#include <cmath>
#include <initializer_list>

#include "spoofkit/errors.hpp"

namespace spoofkit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void fail(const std::string& message) { throw ProtocolError(message); }

Json parse_line(std::string_view line) {
  Json j = Json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) fail("malformed message");
  if (!j.is_object()) fail("message must be an object");
  if (!j.contains("type") || !j["type"].is_string()) fail("message type missing");
  return j;
}

void expect_fields(const Json& j, std::initializer_list<std::string_view> fields) {
  for (const auto& [k, _] : j.items()) {
    bool known = false;
    for (auto f : fields) known = known || k == f;
    if (!known) fail("unexpected field '" + k + "'");
  }
  for (auto f : fields) {
    if (!j.contains(f)) fail("missing field '" + std::string(f) + "'");
  }
}

std::uint64_t get_uint(const Json& j, const char* field) {
  const Json& v = j[field];
  if (!v.is_number_unsigned()) fail(std::string(field) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

std::int64_t get_int(const Json& j, const char* field) {
  const Json& v = j[field];
  if (!v.is_number_integer()) fail(std::string(field) + " must be an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
    fail(std::string(field) + " out of range");
  }
  return v.get<std::int64_t>();
}

std::string get_string(const Json& j, const char* field) {
  const Json& v = j[field];
  if (!v.is_string()) fail(std::string(field) + " must be a string");
  return v.get<std::string>();
}

SystemKey get_key(const Json& j) {
  const auto name = get_string(j, "key");
  const auto key = key_from_name(name);
  if (!key) fail("unknown key '" + name + "'");
  return *key;
}

PropertyValue get_value(const Json& j, SystemKey key) {
  auto value = value_from_json(j["value"]);
  if (!value) fail("value must be a boolean, number or string");
  auto coerced = coerce_key_value(key, *value);
  if (!coerced) fail("value has the wrong type for " + std::string(key_name(key)));
  return *coerced;
}

}  // namespace

std::uint64_t seq_of(const HostMessage& m) {
  return std::visit([](const auto& v) { return v.seq; }, m);
}

std::string_view type_of(const HostMessage& m) {
  return std::visit(overloaded{
                        [](const msg::ApplyPlan&) { return std::string_view("apply_plan"); },
                        [](const msg::Sample&) { return std::string_view("sample"); },
                        [](const msg::SetProperty&) { return std::string_view("set_property"); },
                        [](const msg::Query&) { return std::string_view("query"); },
                        [](const msg::Restore&) { return std::string_view("restore"); },
                    },
                    m);
}

std::string_view type_of(const AgentMessage& m) {
  return std::visit(overloaded{
                        [](const msg::Ack&) { return std::string_view("ack"); },
                        [](const msg::Nack&) { return std::string_view("nack"); },
                        [](const msg::Value&) { return std::string_view("value"); },
                        [](const msg::Event&) { return std::string_view("event"); },
                    },
                    m);
}

std::string encode(const HostMessage& m) {
  Json j = Json::object();
  j["type"] = std::string(type_of(m));
  j["seq"] = seq_of(m);
  std::visit(overloaded{
                 [&](const msg::ApplyPlan& v) { j["plan"] = plan_to_json(v.plan); },
                 [&](const msg::Sample& v) {
                   j["sensor"] = std::string(sensor_name(v.sensor));
                   j["t_ns"] = v.t_ns;
                   j["values"] = v.values;
                 },
                 [&](const msg::SetProperty& v) {
                   j["key"] = std::string(key_name(v.key));
                   j["value"] = value_to_json(v.value);
                 },
                 [&](const msg::Query& v) { j["key"] = std::string(key_name(v.key)); },
                 [](const msg::Restore&) {},
             },
             m);
  return j.dump();
}

std::string encode(const AgentMessage& m) {
  Json j = Json::object();
  j["type"] = std::string(type_of(m));
  std::visit(overloaded{
                 [&](const msg::Ack& v) { j["ref"] = v.ref; },
                 [&](const msg::Nack& v) {
                   j["ref"] = v.ref;
                   j["reason"] = v.reason;
                 },
                 [&](const msg::Value& v) {
                   j["ref"] = v.ref;
                   j["key"] = std::string(key_name(v.key));
                   j["value"] = value_to_json(v.value);
                 },
                 [&](const msg::Event& v) {
                   j["seq"] = v.seq;
                   j["name"] = v.name;
                   j["t_ns"] = v.t_ns;
                 },
             },
             m);
  return j.dump();
}

HostMessage decode_host(std::string_view line) {
  const Json j = parse_line(line);
  const auto type = j["type"].get<std::string>();
  if (type == "apply_plan") {
    expect_fields(j, {"type", "seq", "plan"});
    msg::ApplyPlan m{get_uint(j, "seq"), {}};
    try {
      m.plan = plan_from_json(j["plan"]);
    } catch (const FormatError& e) {
      fail(e.what());
    }
    return m;
  }
  if (type == "sample") {
    expect_fields(j, {"type", "seq", "sensor", "t_ns", "values"});
    msg::Sample m;
    m.seq = get_uint(j, "seq");
    const auto name = get_string(j, "sensor");
    const auto sensor = sensor_from_name(name);
    if (!sensor) fail("unknown sensor '" + name + "'");
    m.sensor = *sensor;
    m.t_ns = get_int(j, "t_ns");
    if (m.t_ns < 0) fail("t_ns must be non-negative");
    const Json& values = j["values"];
    if (!values.is_array()) fail("values must be an array");
    for (const auto& v : values) {
      if (!v.is_number()) fail("values must be numbers");
      m.values.push_back(v.get<double>());
    }
    if (m.values.size() != sensor_dims(m.sensor)) {
      fail("expected " + std::to_string(sensor_dims(m.sensor)) + " values for " + name);
    }
    return m;
  }
  if (type == "set_property") {
    expect_fields(j, {"type", "seq", "key", "value"});
    msg::SetProperty m;
    m.seq = get_uint(j, "seq");
    m.key = get_key(j);
    m.value = get_value(j, m.key);
    return m;
  }
  if (type == "query") {
    expect_fields(j, {"type", "seq", "key"});
    return msg::Query{get_uint(j, "seq"), get_key(j)};
  }
  if (type == "restore") {
    expect_fields(j, {"type", "seq"});
    return msg::Restore{get_uint(j, "seq")};
  }
  fail("unknown message type '" + type + "'");
}

AgentMessage decode_agent(std::string_view line) {
  const Json j = parse_line(line);
  const auto type = j["type"].get<std::string>();
  if (type == "ack") {
    expect_fields(j, {"type", "ref"});
    return msg::Ack{get_uint(j, "ref")};
  }
  if (type == "nack") {
    expect_fields(j, {"type", "ref", "reason"});
    return msg::Nack{get_uint(j, "ref"), get_string(j, "reason")};
  }
  if (type == "value") {
    expect_fields(j, {"type", "ref", "key", "value"});
    msg::Value m;
    m.ref = get_uint(j, "ref");
    m.key = get_key(j);
    m.value = get_value(j, m.key);
    return m;
  }
  if (type == "event") {
    expect_fields(j, {"type", "seq", "name", "t_ns"});
    return msg::Event{get_uint(j, "seq"), get_string(j, "name"), get_int(j, "t_ns")};
  }
  fail("unknown message type '" + type + "'");
}

}  // namespace spoofkit
