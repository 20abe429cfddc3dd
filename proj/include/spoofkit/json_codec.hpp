#pragma once

// JSON encodings shared by profile documents, plan documents, the wire
// protocol and reports. Insertion-ordered objects keep output deterministic.

#include <json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "spoofkit/catalog.hpp"
#include "spoofkit/signal.hpp"

namespace spoofkit {

using Json = nlohmann::ordered_json;

Json value_to_json(const PropertyValue& value);

/// bool, integer, real or string; nullopt for anything else.
std::optional<PropertyValue> value_from_json(const Json& j);

/// {"mode": ..., "params": {...}} with the seed folded into params when non-zero.
Json spec_to_json(const SignalSpec& spec);

struct JsonIssue {
  std::string path;  // relative to the object handed in
  std::string message;
};

/// Reads a params object into `spec.params` / `spec.seed`.
void params_from_json(const Json& params, SignalSpec& spec, std::vector<JsonIssue>& issues);

/// Reads {"mode", "params"} (extra fields listed in `allowed_extra` are ignored).
std::optional<SignalSpec> spec_from_json(const Json& j, std::vector<JsonIssue>& issues,
                                         std::initializer_list<std::string_view> allowed_extra = {});

}  // namespace spoofkit
