#include "spoofkit/session.hpp"

namespace spoofkit {

Json report_to_json(const SessionReport& report) {
  Json samples = Json::object();
  for (const auto& [sensor, count] : report.samples_sent) samples[std::string(sensor_name(sensor))] = count;

  Json applied = Json::array();
  for (const auto& [key, value] : report.properties_applied) {
    applied.push_back(Json{{"key", std::string(key_name(key))}, {"value", value_to_json(value)}});
  }

  Json pushed = Json::object();
  for (const auto& [key, value] : report.last_pushed) pushed[std::string(key_name(key))] = value_to_json(value);

  Json events = Json::array();
  for (const auto& e : report.app_events) {
    events.push_back(Json{{"name", e.name}, {"t_ns", e.t_ns}, {"received_ns", e.received_ns}});
  }

  Json log = Json::array();
  for (const auto& entry : report.log) log.push_back(Json{{"t_ns", entry.t_ns}, {"text", entry.text}});

  Json j = Json::object();
  j["session_id"] = report.session_id;
  j["plan_id"] = report.plan_id;
  j["state"] = std::string(state_name(report.state));
  j["samples_sent"] = std::move(samples);
  j["properties_applied"] = std::move(applied);
  j["property_pushes"] = report.property_pushes;
  j["last_pushed"] = std::move(pushed);
  j["app_events"] = std::move(events);
  j["restore_outcome"] =
      report.restore_outcome ? Json(std::string(outcome_name(*report.restore_outcome))) : Json(nullptr);
  j["duration_s"] = report.duration_s;
  j["failure_reason"] = report.failure_reason ? Json(*report.failure_reason) : Json(nullptr);
  j["log"] = std::move(log);
  return j;
}

std::string report_to_document(const SessionReport& report) { return report_to_json(report).dump(2) + "\n"; }

}  // namespace spoofkit
