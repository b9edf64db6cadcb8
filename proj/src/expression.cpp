#include "fitnet/expression.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "fitnet/error.hpp"
#include "fitnet/format.hpp"

namespace fitnet {

struct Expression::Node {
  Op op = Op::number;
  double literal = 0.0;
  std::string a;
  std::string b;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

Expression::Expression() : node_(std::make_shared<Node>()) {}

Expression::Expression(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

Expression Expression::number(double value) {
  auto n = std::make_shared<Node>();
  n->literal = value;
  return Expression(std::move(n));
}

Expression Expression::voltage(std::string a, std::string b) {
  auto n = std::make_shared<Node>();
  n->op = Op::voltage;
  n->a = std::move(a);
  n->b = std::move(b);
  return Expression(std::move(n));
}

Expression Expression::binary(Op op, const Expression& l, const Expression& r) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = l.node_;
  n->rhs = r.node_;
  return Expression(std::move(n));
}

Expression operator+(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::add, l, r);
}
Expression operator-(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::sub, l, r);
}
Expression operator*(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::mul, l, r);
}
Expression operator/(const Expression& l, const Expression& r) {
  return Expression::binary(Expression::Op::div, l, r);
}
Expression operator-(const Expression& e) {
  auto n = std::make_shared<Expression::Node>();
  n->op = Expression::Op::negate;
  n->lhs = e.node_;
  return Expression(std::move(n));
}

Expression::Op Expression::op() const noexcept { return node_->op; }
double Expression::literal() const noexcept { return node_->literal; }
const std::string& Expression::node_a() const noexcept { return node_->a; }
const std::string& Expression::node_b() const noexcept { return node_->b; }
Expression Expression::lhs() const { return Expression(node_->lhs); }
Expression Expression::rhs() const { return Expression(node_->rhs); }

double Expression::evaluate(const std::function<double(const std::string&)>& voltage) const {
  const Node& n = *node_;
  switch (n.op) {
    case Op::number: return n.literal;
    case Op::voltage: return voltage(n.a) - (n.b.empty() ? 0.0 : voltage(n.b));
    case Op::negate: return -lhs().evaluate(voltage);
    case Op::add: return lhs().evaluate(voltage) + rhs().evaluate(voltage);
    case Op::sub: return lhs().evaluate(voltage) - rhs().evaluate(voltage);
    case Op::mul: return lhs().evaluate(voltage) * rhs().evaluate(voltage);
    case Op::div: return lhs().evaluate(voltage) / rhs().evaluate(voltage);
  }
  return 0.0;
}

void Expression::collect_nodes(std::set<std::string>& out) const {
  const Node& n = *node_;
  if (n.op == Op::voltage) {
    out.insert(n.a);
    if (!n.b.empty()) out.insert(n.b);
  }
  if (n.lhs) lhs().collect_nodes(out);
  if (n.rhs) rhs().collect_nodes(out);
}

namespace {

int precedence(Expression::Op op, double literal) {
  switch (op) {
    case Expression::Op::add:
    case Expression::Op::sub: return 1;
    case Expression::Op::mul:
    case Expression::Op::div: return 2;
    case Expression::Op::negate: return 3;
    case Expression::Op::number: return literal < 0.0 || std::signbit(literal) ? 3 : 4;
    case Expression::Op::voltage: return 4;
  }
  return 4;
}

char op_char(Expression::Op op) {
  switch (op) {
    case Expression::Op::add: return '+';
    case Expression::Op::sub: return '-';
    case Expression::Op::mul: return '*';
    case Expression::Op::div: return '/';
    default: return '?';
  }
}

void print(const Expression& e, std::string& out) {
  using Op = Expression::Op;
  switch (e.op()) {
    case Op::number:
      out += format_number(e.literal());
      return;
    case Op::voltage:
      out += "V(";
      out += e.node_a();
      if (!e.node_b().empty()) {
        out += ',';
        out += e.node_b();
      }
      out += ')';
      return;
    case Op::negate: {
      const Expression c = e.lhs();
      out += '-';
      const bool paren = precedence(c.op(), c.literal()) < 3;
      if (paren) out += '(';
      print(c, out);
      if (paren) out += ')';
      return;
    }
    default: {
      const int p = precedence(e.op(), 0.0);
      const Expression l = e.lhs();
      const Expression r = e.rhs();
      const bool lp = precedence(l.op(), l.literal()) < p;
      const bool rp = precedence(r.op(), r.literal()) <= p;
      if (lp) out += '(';
      print(l, out);
      if (lp) out += ')';
      out += op_char(e.op());
      if (rp) out += '(';
      print(r, out);
      if (rp) out += ')';
      return;
    }
  }
}

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : text_(text) {}

  Expression parse() {
    Expression e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(0, "expression: " + msg + " at column " + std::to_string(pos_ + 1));
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expression expr() {
    Expression e = term();
    for (;;) {
      if (accept('+')) {
        e = e + term();
      } else if (accept('-')) {
        e = e - term();
      } else {
        return e;
      }
    }
  }

  Expression term() {
    Expression e = factor();
    for (;;) {
      if (accept('*')) {
        e = e * factor();
      } else if (accept('/')) {
        e = e / factor();
      } else {
        return e;
      }
    }
  }

  std::string node_name() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '(' || c == ')') break;
      ++pos_;
    }
    if (pos_ == start) fail("expected a node name");
    return std::string(text_.substr(start, pos_ - start));
  }

  Expression factor() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '-') {
      ++pos_;
      return -factor();
    }
    if (c == '(') {
      ++pos_;
      Expression e = expr();
      expect(')');
      return e;
    }
    if (c == 'V' || c == 'v') {
      ++pos_;
      expect('(');
      std::string a = node_name();
      std::string b;
      if (accept(',')) b = node_name();
      expect(')');
      return Expression::voltage(std::move(a), std::move(b));
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      double value = 0.0;
      const std::size_t used = scan_number(text_.substr(pos_), value);
      if (used == 0) fail("malformed number");
      pos_ += used;
      return Expression::number(value);
    }
    fail(std::string("unexpected '") + c + "'");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool close(double a, double b, double rel_tol) {
  if (a == b) return true;
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

std::string Expression::to_string() const {
  std::string out;
  print(*this, out);
  return out;
}

Expression Expression::parse(std::string_view text) { return ExpressionParser(text).parse(); }

bool Expression::equivalent(const Expression& other, double rel_tol) const {
  const Node& a = *node_;
  const Node& b = *other.node_;
  // A negative literal and the negation of its magnitude print identically.
  if (a.op == Op::number && b.op == Op::negate && b.lhs->op == Op::number) {
    return close(a.literal, -b.lhs->literal, rel_tol);
  }
  if (b.op == Op::number && a.op == Op::negate && a.lhs->op == Op::number) {
    return close(b.literal, -a.lhs->literal, rel_tol);
  }
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::number: return close(a.literal, b.literal, rel_tol);
    case Op::voltage: return a.a == b.a && a.b == b.b;
    case Op::negate: return lhs().equivalent(other.lhs(), rel_tol);
    default:
      return lhs().equivalent(other.lhs(), rel_tol) && rhs().equivalent(other.rhs(), rel_tol);
  }
}

CompiledExpression::CompiledExpression(const Expression& expr, const Resolver& resolve) {
  emit(expr, resolve);
  std::sort(deps_.begin(), deps_.end());
  deps_.erase(std::unique(deps_.begin(), deps_.end()), deps_.end());
}

int CompiledExpression::emit(const Expression& e, const Resolver& resolve) {
  Instr ins;
  ins.op = e.op();
  switch (e.op()) {
    case Expression::Op::number:
      ins.literal = e.literal();
      break;
    case Expression::Op::voltage:
      ins.a = resolve(e.node_a());
      ins.b = e.node_b().empty() ? -1 : resolve(e.node_b());
      if (ins.a >= 0) deps_.push_back(ins.a);
      if (ins.b >= 0) deps_.push_back(ins.b);
      break;
    case Expression::Op::negate:
      ins.lhs = emit(e.lhs(), resolve);
      break;
    default:
      ins.lhs = emit(e.lhs(), resolve);
      ins.rhs = emit(e.rhs(), resolve);
      break;
  }
  tape_.push_back(ins);
  return static_cast<int>(tape_.size()) - 1;
}

void CompiledExpression::forward(const Eigen::VectorXd& x, std::vector<double>& vals) const {
  vals.resize(tape_.size());
  for (std::size_t k = 0; k < tape_.size(); ++k) {
    const Instr& in = tape_[k];
    double v = 0.0;
    switch (in.op) {
      case Expression::Op::number: v = in.literal; break;
      case Expression::Op::voltage:
        v = (in.a >= 0 ? x[in.a] : 0.0) - (in.b >= 0 ? x[in.b] : 0.0);
        break;
      case Expression::Op::negate: v = -vals[static_cast<std::size_t>(in.lhs)]; break;
      case Expression::Op::add:
        v = vals[static_cast<std::size_t>(in.lhs)] + vals[static_cast<std::size_t>(in.rhs)];
        break;
      case Expression::Op::sub:
        v = vals[static_cast<std::size_t>(in.lhs)] - vals[static_cast<std::size_t>(in.rhs)];
        break;
      case Expression::Op::mul:
        v = vals[static_cast<std::size_t>(in.lhs)] * vals[static_cast<std::size_t>(in.rhs)];
        break;
      case Expression::Op::div:
        v = vals[static_cast<std::size_t>(in.lhs)] / vals[static_cast<std::size_t>(in.rhs)];
        break;
    }
    vals[k] = v;
  }
}

double CompiledExpression::value(const Eigen::VectorXd& x) const {
  if (tape_.empty()) return 0.0;
  std::vector<double> vals;
  forward(x, vals);
  return vals.back();
}

double CompiledExpression::value_and_gradient(const Eigen::VectorXd& x,
                                              std::vector<std::pair<int, double>>& gradient) const {
  gradient.clear();
  if (tape_.empty()) return 0.0;
  std::vector<double> vals;
  forward(x, vals);
  std::vector<double> adj(tape_.size(), 0.0);
  adj.back() = 1.0;
  for (std::size_t k = tape_.size(); k-- > 0;) {
    const Instr& in = tape_[k];
    const double g = adj[k];
    if (g == 0.0) continue;
    const auto l = static_cast<std::size_t>(in.lhs);
    const auto r = static_cast<std::size_t>(in.rhs);
    switch (in.op) {
      case Expression::Op::number: break;
      case Expression::Op::voltage:
        if (in.a >= 0) gradient.emplace_back(in.a, g);
        if (in.b >= 0) gradient.emplace_back(in.b, -g);
        break;
      case Expression::Op::negate: adj[l] -= g; break;
      case Expression::Op::add:
        adj[l] += g;
        adj[r] += g;
        break;
      case Expression::Op::sub:
        adj[l] += g;
        adj[r] -= g;
        break;
      case Expression::Op::mul:
        adj[l] += g * vals[r];
        adj[r] += g * vals[l];
        break;
      case Expression::Op::div:
        adj[l] += g / vals[r];
        adj[r] -= g * vals[l] / (vals[r] * vals[r]);
        break;
    }
  }
  std::sort(gradient.begin(), gradient.end(),
            [](const auto& p, const auto& q) { return p.first < q.first; });
  std::size_t w = 0;
  for (std::size_t k = 0; k < gradient.size(); ++k) {
    if (w > 0 && gradient[w - 1].first == gradient[k].first) {
      gradient[w - 1].second += gradient[k].second;
    } else {
      gradient[w++] = gradient[k];
    }
  }
  gradient.resize(w);
  return vals.back();
}

}  // namespace fitnet
