#include "spoofkit/json_codec.hpp"

#include <algorithm>

namespace spoofkit {

Json value_to_json(const PropertyValue& value) {
  return std::visit([](const auto& v) { return Json(v); }, value);
}

std::optional<PropertyValue> value_from_json(const Json& j) {
  if (j.is_boolean()) return PropertyValue{j.get<bool>()};
  if (j.is_number_integer()) {
    if (j.is_number_unsigned() && j.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX)) {
      return std::nullopt;
    }
    return PropertyValue{j.get<std::int64_t>()};
  }
  if (j.is_number_float()) return PropertyValue{j.get<double>()};
  if (j.is_string()) return PropertyValue{j.get<std::string>()};
  return std::nullopt;
}

Json spec_to_json(const SignalSpec& spec) {
  Json params = Json::object();
  for (const auto& [name, value] : spec.params) {
    if (const auto* d = std::get_if<double>(&value)) {
      params[name] = *d;
    } else {
      params[name] = std::get<std::vector<double>>(value);
    }
  }
  if (spec.seed != 0) params["seed"] = spec.seed;
  Json j = Json::object();
  j["mode"] = std::string(mode_name(spec.mode));
  j["params"] = std::move(params);
  return j;
}

void params_from_json(const Json& params, SignalSpec& spec, std::vector<JsonIssue>& issues) {
  if (!params.is_object()) {
    issues.push_back({"", "params must be an object"});
    return;
  }
  for (const auto& [name, value] : params.items()) {
    if (name == "seed") {
      if (!value.is_number_unsigned()) {
        issues.push_back({name, "seed must be a non-negative integer"});
      } else {
        spec.seed = value.get<std::uint64_t>();
      }
      continue;
    }
    if (value.is_number()) {
      spec.params[name] = value.get<double>();
      continue;
    }
    if (value.is_array()) {
      std::vector<double> vec;
      bool ok = true;
      for (const auto& v : value) {
        if (!v.is_number()) {
          ok = false;
          break;
        }
        vec.push_back(v.get<double>());
      }
      if (ok) {
        spec.params[name] = std::move(vec);
      } else {
        issues.push_back({name, name + " must be an array of numbers"});
      }
      continue;
    }
    issues.push_back({name, name + " must be a number or an array of numbers"});
  }
}

std::optional<SignalSpec> spec_from_json(const Json& j, std::vector<JsonIssue>& issues,
                                         std::initializer_list<std::string_view> allowed_extra) {
  if (!j.is_object()) {
    issues.push_back({"", "expected an object"});
    return std::nullopt;
  }
  const std::size_t before = issues.size();
  for (const auto& [k, _] : j.items()) {
    if (k != "mode" && k != "params" &&
        std::find(allowed_extra.begin(), allowed_extra.end(), k) == allowed_extra.end()) {
      issues.push_back({k, "unknown field '" + k + "'"});
    }
  }
  SignalSpec spec;
  if (!j.contains("mode") || !j["mode"].is_string()) {
    issues.push_back({"mode", "mode must be a string"});
  } else if (auto mode = mode_from_name(j["mode"].get<std::string>())) {
    spec.mode = *mode;
  } else {
    issues.push_back({"mode", "unknown mode '" + j["mode"].get<std::string>() + "'"});
  }
  if (j.contains("params")) {
    std::vector<JsonIssue> param_issues;
    params_from_json(j["params"], spec, param_issues);
    for (auto& issue : param_issues) {
      issues.push_back({issue.path.empty() ? "params" : "params." + issue.path, issue.message});
    }
  }
  if (issues.size() != before) return std::nullopt;
  return spec;
}

}  // namespace spoofkit
