#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace fitnet {

/// Scientific notation with 9 significant digits ("3.33333333e+02").
std::string format_number(double value);

/// Parses a SPICE number: decimal/exponent form with an optional scale suffix
/// (T, G, MEG, K, M, U, N, P, F; case-insensitive). Trailing letters after a
/// recognised suffix are ignored, as in SPICE ("1kohm" == 1000).
std::optional<double> parse_number(std::string_view text);

/// Length of the numeric prefix of `text` including any scale suffix, or 0.
std::size_t scan_number(std::string_view text, double& value);

}  // namespace fitnet
