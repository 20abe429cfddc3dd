#include "spoofkit/trace_io.hpp"

#include <algorithm>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "spoofkit/errors.hpp"

namespace spoofkit {

using nlohmann::json;

namespace {

std::string number(double v) { return json(v).dump(); }

[[noreturn]] void fail(std::size_t line_no, const std::string& message) {
  throw FormatError("line " + std::to_string(line_no) + ": " + message);
}

json parse_line(const std::string& line, std::size_t line_no) {
  try {
    json j = json::parse(line);
    if (!j.is_object()) fail(line_no, "expected a JSON object");
    return j;
  } catch (const json::parse_error& e) {
    fail(line_no, std::string("malformed JSON: ") + e.what());
  }
}

void reject_unknown(const json& j, std::initializer_list<std::string_view> known,
                    std::size_t line_no) {
  for (const auto& [k, _] : j.items()) {
    if (std::find(known.begin(), known.end(), k) == known.end()) {
      fail(line_no, "unknown field '" + k + "'");
    }
  }
}

}  // namespace

void write_trace(const SensorTrace& trace, std::ostream& sink) {
  sink << "{\"sensor\": " << json(std::string(sensor_name(trace.sensor))).dump()
       << ", \"rate_hz\": " << number(trace.rate_hz) << ", \"seed\": " << trace.seed << "}\n";
  for (const auto& s : trace.samples) {
    sink << "{\"t_ns\": " << s.t_ns << ", \"values\": [";
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      if (i > 0) sink << ", ";
      sink << number(s.values[i]);
    }
    sink << "]}\n";
  }
}

std::string trace_to_string(const SensorTrace& trace) {
  std::ostringstream out;
  write_trace(trace, out);
  return out.str();
}

SensorTrace read_trace(std::istream& source) {
  SensorTrace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(source, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      if (source.peek() == std::char_traits<char>::eof()) break;
      fail(line_no, "blank line");
    }
    const json j = parse_line(line, line_no);
    if (!have_header) {
      reject_unknown(j, {"sensor", "rate_hz", "seed"}, line_no);
      if (!j.contains("sensor") || !j["sensor"].is_string()) fail(line_no, "header needs sensor");
      const auto sensor = sensor_from_name(j["sensor"].get<std::string>());
      if (!sensor) fail(line_no, "unknown sensor '" + j["sensor"].get<std::string>() + "'");
      if (!j.contains("rate_hz") || !j["rate_hz"].is_number()) {
        fail(line_no, "header needs numeric rate_hz");
      }
      if (!j.contains("seed") || !j["seed"].is_number_unsigned()) {
        fail(line_no, "header needs unsigned seed");
      }
      trace.sensor = *sensor;
      trace.rate_hz = j["rate_hz"].get<double>();
      trace.seed = j["seed"].get<std::uint64_t>();
      if (!(trace.rate_hz > 0.0)) fail(line_no, "rate_hz must be > 0");
      have_header = true;
      continue;
    }
    reject_unknown(j, {"t_ns", "values"}, line_no);
    if (!j.contains("t_ns") || !j["t_ns"].is_number_integer()) fail(line_no, "t_ns must be an integer");
    if (!j.contains("values") || !j["values"].is_array()) fail(line_no, "values must be an array");
    SensorSample sample;
    sample.sensor = trace.sensor;
    sample.t_ns = j["t_ns"].get<std::int64_t>();
    for (const auto& v : j["values"]) {
      if (!v.is_number()) fail(line_no, "values must be numbers");
      sample.values.push_back(v.get<double>());
    }
    trace.samples.push_back(std::move(sample));
  }
  if (!have_header) throw FormatError("missing trace header");
  if (auto problem = check_trace(trace)) throw FormatError(*problem);
  return trace;
}

SensorTrace trace_from_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return read_trace(in);
}

}  // namespace spoofkit
