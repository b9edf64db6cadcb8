#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_set>

#include "fitnet/error.hpp"
#include "fitnet/format.hpp"
#include "fitnet/netlist.hpp"

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

// Splits off the next whitespace-delimited token.
std::string_view next_token(std::string_view& s) {
  s = trim(s);
  std::size_t k = 0;
  while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k]))) ++k;
  const auto tok = s.substr(0, k);
  s.remove_prefix(k);
  return tok;
}

std::string card_text(const Element& e) {
  std::string out = element_name(e) + ' ' + element_n_plus(e) + ' ' + element_n_minus(e) + ' ';
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Resistor>) {
          out += format_number(c.ohms);
        } else if constexpr (std::is_same_v<T, Capacitor>) {
          out += format_number(c.farads);
        } else if constexpr (std::is_same_v<T, VoltageSource> || std::is_same_v<T, CurrentSource>) {
          out += to_netlist_string(c.waveform);
        } else if constexpr (std::is_same_v<T, BehavioralResistor>) {
          out += "R=" + c.ohms.to_string();
        } else {
          out += "I=" + c.amperes.to_string();
        }
      },
      e);
  return out;
}

std::string strip_line_prefix(std::string msg) {
  const std::string prefix = "line 0: ";
  if (msg.rfind(prefix, 0) == 0) msg.erase(0, prefix.size());
  return msg;
}

struct Card {
  std::size_t line;
  std::string text;
};

double number_or_throw(std::string_view tok, std::size_t line, const char* what) {
  const auto v = parse_number(tok);
  if (!v || !std::isfinite(*v)) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(tok) + "'");
  }
  return *v;
}

Waveform parse_waveform_at(std::string_view rest, std::size_t line) {
  try {
    return parse_waveform(rest);
  } catch (const ParseError& e) {
    throw ParseError(line, strip_line_prefix(e.what()));
  }
}

Expression parse_assignment(std::string_view rest, char key, std::size_t line) {
  rest = trim(rest);
  if (rest.empty() || std::toupper(static_cast<unsigned char>(rest.front())) != key) {
    throw ParseError(line, std::string("expected ") + key + "=<expression>");
  }
  rest = trim(rest.substr(1));
  if (rest.empty() || rest.front() != '=') {
    throw ParseError(line, std::string("expected ") + key + "=<expression>");
  }
  try {
    return Expression::parse(rest.substr(1));
  } catch (const ParseError& e) {
    throw ParseError(line, strip_line_prefix(e.what()));
  }
}

Element parse_element(const Card& card) {
  std::string_view rest = card.text;
  const std::string name(next_token(rest));
  const std::string n_plus(next_token(rest));
  const std::string n_minus(next_token(rest));
  if (n_minus.empty()) throw ParseError(card.line, "card '" + name + "' needs two terminals");
  const char kind = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));

  const auto single_value = [&](const char* what) {
    std::string_view sv = rest;
    const auto tok = next_token(sv);
    if (tok.empty()) throw ParseError(card.line, std::string("missing ") + what);
    if (!trim(sv).empty()) throw ParseError(card.line, "unexpected text after value");
    return number_or_throw(tok, card.line, what);
  };

  switch (kind) {
    case 'R': {
      const double r = single_value("resistance");
      if (!(r > 0.0)) throw ParseError(card.line, "resistance must be positive");
      return Resistor{name, n_plus, n_minus, r};
    }
    case 'C': {
      const double c = single_value("capacitance");
      if (c < 0.0) throw ParseError(card.line, "capacitance must be non-negative");
      return Capacitor{name, n_plus, n_minus, c};
    }
    case 'V':
      return VoltageSource{name, n_plus, n_minus, parse_waveform_at(rest, card.line)};
    case 'I':
      return CurrentSource{name, n_plus, n_minus, parse_waveform_at(rest, card.line)};
    case 'B': {
      const char sub = name.size() > 1
                           ? static_cast<char>(std::toupper(static_cast<unsigned char>(name[1])))
                           : '\0';
      if (sub == 'R') return BehavioralResistor{name, n_plus, n_minus, parse_assignment(rest, 'R', card.line)};
      if (sub == 'I') return BehavioralCurrent{name, n_plus, n_minus, parse_assignment(rest, 'I', card.line)};
      throw ParseError(card.line, "behavioral card '" + name + "' must start with BR or BI");
    }
    default:
      throw ParseError(card.line, "unknown card type '" + name + "'");
  }
}

bool close(double a, double b, double rel_tol) {
  if (a == b) return true;
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

bool waveforms_close(const Waveform& a, const Waveform& b, double tol) {
  if (a.index() != b.index()) return false;
  if (const auto* x = std::get_if<DcWave>(&a)) return close(x->value, std::get<DcWave>(b).value, tol);
  if (const auto* x = std::get_if<SinWave>(&a)) {
    const auto& y = std::get<SinWave>(b);
    return close(x->offset, y.offset, tol) && close(x->amplitude, y.amplitude, tol) &&
           close(x->freq_hz, y.freq_hz, tol);
  }
  const auto& x = std::get<ExpWave>(a);
  const auto& y = std::get<ExpWave>(b);
  return close(x.v0, y.v0, tol) && close(x.v1, y.v1, tol) && close(x.tau, y.tau, tol);
}

}  // namespace

std::string emit(const Netlist& netlist) {
  std::string out = netlist.title + '\n';
  for (const auto& e : netlist.elements) {
    out += card_text(e);
    out += '\n';
  }
  for (const auto& [key, value] : netlist.options) out += ".OPTIONS " + key + '=' + value + '\n';
  if (netlist.tran) {
    out += ".TRAN " + format_number(netlist.tran->dt) + ' ' + format_number(netlist.tran->tstop) + '\n';
  }
  out += ".END\n";
  return out;
}

Netlist parse_netlist(std::string_view text) {
  std::vector<std::string> lines;
  {
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
      if (end == text.size()) break;
      start = end + 1;
    }
  }

  Netlist net;
  net.title = lines.empty() ? std::string{} : lines.front();

  std::vector<Card> cards;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto body = trim(lines[k]);
    if (body.empty() || body.front() == '*') continue;
    if (body.front() == '+') {
      if (cards.empty()) throw ParseError(k + 1, "continuation line without a preceding card");
      cards.back().text += ' ';
      cards.back().text += trim(body.substr(1));
      continue;
    }
    cards.push_back({k + 1, std::string(body)});
  }

  bool ended = false;
  std::unordered_set<std::string> names;
  std::vector<std::pair<std::size_t, std::size_t>> behavioral;  // (line, element index)
  for (const auto& card : cards) {
    if (card.text.front() == '.') {
      std::string_view rest = card.text;
      const std::string directive = upper(next_token(rest));
      if (directive == ".END") {
        ended = true;
        break;
      }
      if (directive == ".TRAN") {
        const auto dt_tok = next_token(rest);
        const auto stop_tok = next_token(rest);
        if (stop_tok.empty()) throw ParseError(card.line, ".TRAN needs dt and tstop");
        const double dt = number_or_throw(dt_tok, card.line, "time step");
        const double tstop = number_or_throw(stop_tok, card.line, "stop time");
        if (!(dt > 0.0) || !(tstop > 0.0)) throw ParseError(card.line, ".TRAN values must be positive");
        net.tran = TranDirective{dt, tstop};
      } else if (directive == ".OPTIONS") {
        for (auto tok = next_token(rest); !tok.empty(); tok = next_token(rest)) {
          const auto eq = tok.find('=');
          if (eq == std::string_view::npos || eq == 0) {
            throw ParseError(card.line, "malformed option '" + std::string(tok) + "'");
          }
          net.options[std::string(tok.substr(0, eq))] = std::string(tok.substr(eq + 1));
        }
      } else {
        throw ParseError(card.line, "unknown directive '" + directive + "'");
      }
      continue;
    }
    Element e = parse_element(card);
    if (!names.insert(upper(element_name(e))).second) {
      throw ParseError(card.line, "duplicate element name '" + element_name(e) + "'");
    }
    if (std::holds_alternative<BehavioralResistor>(e) || std::holds_alternative<BehavioralCurrent>(e)) {
      behavioral.emplace_back(card.line, net.elements.size());
    }
    net.elements.push_back(std::move(e));
  }
  if (!ended) throw ParseError(lines.size() + 1, "missing .END");

  rebuild_node_table(net);
  for (const auto& [line, idx] : behavioral) {
    std::set<std::string> refs;
    const auto& e = net.elements[idx];
    if (const auto* br = std::get_if<BehavioralResistor>(&e)) br->ohms.collect_nodes(refs);
    if (const auto* bi = std::get_if<BehavioralCurrent>(&e)) bi->amperes.collect_nodes(refs);
    for (const auto& node : refs) {
      if (node != kGround && !net.node_table.count(node)) {
        throw ParseError(line, "dangling node reference V(" + node + ")");
      }
    }
  }
  return net;
}

bool equivalent(const Netlist& a, const Netlist& b, double rel_tol) {
  if (a.title != b.title || a.options != b.options || a.elements.size() != b.elements.size()) {
    return false;
  }
  if (a.tran.has_value() != b.tran.has_value()) return false;
  if (a.tran && !(close(a.tran->dt, b.tran->dt, rel_tol) && close(a.tran->tstop, b.tran->tstop, rel_tol))) {
    return false;
  }
  for (std::size_t k = 0; k < a.elements.size(); ++k) {
    const auto& x = a.elements[k];
    const auto& y = b.elements[k];
    if (x.index() != y.index() || element_name(x) != element_name(y) ||
        element_n_plus(x) != element_n_plus(y) || element_n_minus(x) != element_n_minus(y)) {
      return false;
    }
    const bool same = std::visit(
        [&](const auto& c) {
          using T = std::decay_t<decltype(c)>;
          const auto& d = std::get<T>(y);
          if constexpr (std::is_same_v<T, Resistor>) return close(c.ohms, d.ohms, rel_tol);
          else if constexpr (std::is_same_v<T, Capacitor>) return close(c.farads, d.farads, rel_tol);
          else if constexpr (std::is_same_v<T, VoltageSource> || std::is_same_v<T, CurrentSource>)
            return waveforms_close(c.waveform, d.waveform, rel_tol);
          else if constexpr (std::is_same_v<T, BehavioralResistor>) return c.ohms.equivalent(d.ohms, rel_tol);
          else return c.amperes.equivalent(d.amperes, rel_tol);
        },
        x);
    if (!same) return false;
  }
  return true;
}

}  // namespace fitnet
