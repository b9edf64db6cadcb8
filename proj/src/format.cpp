#include "fitnet/format.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>

namespace fitnet {

std::string format_number(double value) {
  char buf[32];
  // Avoid printing "-0.00000000e+00" for negative zero.
  if (value == 0.0) value = 0.0;
  std::snprintf(buf, sizeof buf, "%.8e", value);
  return buf;
}

namespace {

bool is_digit(char c) { return c >= '0' && c <= '9'; }

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

}  // namespace

std::size_t scan_number(std::string_view text, double& value) {
  std::size_t pos = 0;
  if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) ++pos;
  const std::size_t mantissa_start = pos;
  while (pos < text.size() && is_digit(text[pos])) ++pos;
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    while (pos < text.size() && is_digit(text[pos])) ++pos;
  }
  const std::size_t mantissa_digits = pos - mantissa_start;
  if (mantissa_digits == 0 || (mantissa_digits == 1 && text[mantissa_start] == '.')) return 0;
  if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
    std::size_t exp = pos + 1;
    if (exp < text.size() && (text[exp] == '+' || text[exp] == '-')) ++exp;
    if (exp < text.size() && is_digit(text[exp])) {
      while (exp < text.size() && is_digit(text[exp])) ++exp;
      pos = exp;
    }
  }
  std::string_view digits = text.substr(0, pos);
  if (!digits.empty() && digits.front() == '+') digits.remove_prefix(1);
  double parsed = 0.0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), parsed);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) return 0;

  double scale = 1.0;
  if (pos + 2 < text.size() && lower(text[pos]) == 'm' && lower(text[pos + 1]) == 'e' &&
      lower(text[pos + 2]) == 'g') {
    scale = 1e6;
    pos += 3;
  } else if (pos < text.size()) {
    switch (lower(text[pos])) {
      case 't': scale = 1e12; break;
      case 'g': scale = 1e9; break;
      case 'k': scale = 1e3; break;
      case 'm': scale = 1e-3; break;
      case 'u': scale = 1e-6; break;
      case 'n': scale = 1e-9; break;
      case 'p': scale = 1e-12; break;
      case 'f': scale = 1e-15; break;
      default: break;
    }
    if (scale != 1.0) ++pos;
  }
  value = parsed * scale;
  return pos;
}

std::optional<double> parse_number(std::string_view text) {
  double value = 0.0;
  std::size_t used = scan_number(text, value);
  if (used == 0) return std::nullopt;
  for (; used < text.size(); ++used) {
    if (!std::isalpha(static_cast<unsigned char>(text[used]))) return std::nullopt;
  }
  return value;
}

}  // namespace fitnet
