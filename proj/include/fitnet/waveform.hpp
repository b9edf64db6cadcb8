#pragma once

#include <string>
#include <string_view>
#include <variant>

namespace fitnet {

struct DcWave {
  double value = 0.0;
  bool operator==(const DcWave&) const = default;
};

/// offset + amplitude * sin(2 pi freq t)
struct SinWave {
  double offset = 0.0;
  double amplitude = 0.0;
  double freq_hz = 0.0;
  bool operator==(const SinWave&) const = default;
};

/// v0 + (v1 - v0) (1 - exp(-t / tau))
struct ExpWave {
  double v0 = 0.0;
  double v1 = 0.0;
  double tau = 1.0;
  bool operator==(const ExpWave&) const = default;
};

using Waveform = std::variant<DcWave, SinWave, ExpWave>;

double evaluate(const Waveform& w, double t);

/// Netlist spelling, e.g. "DC 1.00000000e+00" or "SIN(0.00000000e+00 ...)".
std::string to_netlist_string(const Waveform& w);

/// Inverse of to_netlist_string; a bare number means DC. SPICE suffixes are
/// accepted. Throws ParseError (line 0).
Waveform parse_waveform(std::string_view text);

}  // namespace fitnet
