#pragma once

// Host <-> agent wire protocol: one compact JSON object per line, UTF-8.
// Every host message carries a seq that increases by one per connection;
// agent replies reference it through `ref`, unsolicited app events carry the
// agent's own seq.

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/hookplan.hpp"
#include "spoofkit/json_codec.hpp"

namespace spoofkit {

namespace msg {

struct ApplyPlan {
  std::uint64_t seq = 0;
  HookPlan plan;
  bool operator==(const ApplyPlan&) const = default;
};

struct Sample {
  std::uint64_t seq = 0;
  SensorType sensor = SensorType::accelerometer;
  std::int64_t t_ns = 0;
  std::vector<double> values;
  bool operator==(const Sample&) const = default;
};

struct SetProperty {
  std::uint64_t seq = 0;
  SystemKey key = SystemKey::battery_level;
  PropertyValue value;
  bool operator==(const SetProperty&) const = default;
};

struct Query {
  std::uint64_t seq = 0;
  SystemKey key = SystemKey::battery_level;
  bool operator==(const Query&) const = default;
};

struct Restore {
  std::uint64_t seq = 0;
  bool operator==(const Restore&) const = default;
};

struct Ack {
  std::uint64_t ref = 0;
  bool operator==(const Ack&) const = default;
};

struct Nack {
  std::uint64_t ref = 0;
  std::string reason;
  bool operator==(const Nack&) const = default;
};

struct Value {
  std::uint64_t ref = 0;
  SystemKey key = SystemKey::battery_level;
  PropertyValue value;
  bool operator==(const Value&) const = default;
};

struct Event {
  std::uint64_t seq = 0;
  std::string name;
  std::int64_t t_ns = 0;
  bool operator==(const Event&) const = default;
};

}  // namespace msg

using HostMessage = std::variant<msg::ApplyPlan, msg::Sample, msg::SetProperty, msg::Query, msg::Restore>;
using AgentMessage = std::variant<msg::Ack, msg::Nack, msg::Value, msg::Event>;

std::uint64_t seq_of(const HostMessage& m);
std::string_view type_of(const HostMessage& m);
std::string_view type_of(const AgentMessage& m);

/// Compact single-line encodings, no trailing newline. Field order is fixed:
/// type first, then seq/ref, then the message body.
std::string encode(const HostMessage& m);
std::string encode(const AgentMessage& m);

/// Strict decoders; throw ProtocolError on malformed JSON, unknown types,
/// missing or extra fields and out-of-domain values.
HostMessage decode_host(std::string_view line);
AgentMessage decode_agent(std::string_view line);

}  // namespace spoofkit
