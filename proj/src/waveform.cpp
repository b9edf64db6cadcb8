#include "fitnet/waveform.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <vector>
#include <numbers>

#include "fitnet/error.hpp"
#include "fitnet/format.hpp"

namespace fitnet {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string_view next_token(std::string_view& s) {
  s = trim(s);
  std::size_t k = 0;
  while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k]))) ++k;
  const auto tok = s.substr(0, k);
  s.remove_prefix(k);
  return tok;
}

double number_or_throw(std::string_view tok, std::size_t line, const char* what) {
  const auto v = parse_number(tok);
  if (!v || !std::isfinite(*v)) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return *v;
}

}  // namespace


double evaluate(const Waveform& w, double t) {
  struct Visitor {
    double t;
    double operator()(const DcWave& d) const { return d.value; }
    double operator()(const SinWave& s) const {
      return s.offset + s.amplitude * std::sin(2.0 * std::numbers::pi * s.freq_hz * t);
    }
    double operator()(const ExpWave& e) const {
      return e.v0 + (e.v1 - e.v0) * (1.0 - std::exp(-t / e.tau));
    }
  };
  return std::visit(Visitor{t}, w);
}

std::string to_netlist_string(const Waveform& w) {
  struct Visitor {
    std::string operator()(const DcWave& d) const { return "DC " + format_number(d.value); }
    std::string operator()(const SinWave& s) const {
      return "SIN(" + format_number(s.offset) + " " + format_number(s.amplitude) + " " +
             format_number(s.freq_hz) + ")";
    }
    std::string operator()(const ExpWave& e) const {
      return "EXP(" + format_number(e.v0) + " " + format_number(e.v1) + " " +
             format_number(e.tau) + ")";
    }
  };
  return std::visit(Visitor{}, w);
}

Waveform parse_waveform(std::string_view rest) {
  const std::size_t line = 0;
  rest = trim(rest);
  if (rest.empty()) throw ParseError(line, "missing source value");
  const std::string head = upper(rest.substr(0, std::min<std::size_t>(3, rest.size())));
  if (head == "SIN" || head == "EXP") {
    auto args = trim(rest.substr(3));
    if (args.size() < 2 || args.front() != '(' || args.back() != ')') {
      throw ParseError(line, head + " expects a parenthesised argument list");
    }
    args = args.substr(1, args.size() - 2);
    std::vector<double> v;
    std::string buf(args);
    std::replace(buf.begin(), buf.end(), ',', ' ');
    std::string_view sv = buf;
    for (auto tok = next_token(sv); !tok.empty(); tok = next_token(sv)) {
      v.push_back(number_or_throw(tok, line, "waveform argument"));
    }
    if (v.size() != 3) throw ParseError(line, head + " expects 3 arguments");
    if (head == "SIN") return SinWave{v[0], v[1], v[2]};
    if (!(v[2] > 0.0)) throw ParseError(line, "EXP time constant must be positive");
    return ExpWave{v[0], v[1], v[2]};
  }
  std::string_view sv = rest;
  auto tok = next_token(sv);
  if (upper(tok) == "DC") tok = next_token(sv);
  if (tok.empty()) throw ParseError(line, "missing DC value");
  if (!trim(sv).empty()) throw ParseError(line, "unexpected text after source value");
  return DcWave{number_or_throw(tok, line, "source value")};
}

}  // namespace fitnet
