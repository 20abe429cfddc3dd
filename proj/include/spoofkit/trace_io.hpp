#pragma once

// Newline-delimited trace files:
//   {"sensor": "accelerometer", "rate_hz": 50.0, "seed": 0}
//   {"t_ns": 20000000, "values": [0.0, 0.0, 9.81]}
//   ...
// Reals are written with shortest round-trip precision, so read(write(t))
// reproduces t exactly (minus provenance, which the format does not carry).

#include <iosfwd>
#include <string>
#include <string_view>

#include "spoofkit/signal.hpp"

namespace spoofkit {

void write_trace(const SensorTrace& trace, std::ostream& sink);
std::string trace_to_string(const SensorTrace& trace);

/// Throws FormatError on malformed lines or violated trace invariants.
SensorTrace read_trace(std::istream& source);
SensorTrace trace_from_string(std::string_view text);

}  // namespace spoofkit
