#pragma once

#include <functional>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fitnet {

/// Immutable arithmetic expression over literals and node voltages, as used by
/// behavioral netlist elements. Copies share structure.
///
///   expr   := term (('+'|'-') term)*
///   term   := factor (('*'|'/') factor)*
///   factor := number | 'V' '(' node (',' node)? ')' | '(' expr ')' | '-' factor
class Expression {
 public:
  enum class Op { number, voltage, negate, add, sub, mul, div };

  Expression();  // literal 0
  static Expression number(double value);
  /// V(a) or, with `b` non-empty, V(a,b) = V(a) - V(b).
  static Expression voltage(std::string a, std::string b = {});

  /// Throws Error{parse_error} (line 0) on malformed input.
  static Expression parse(std::string_view text);

  Op op() const noexcept;
  double literal() const noexcept;
  const std::string& node_a() const noexcept;
  const std::string& node_b() const noexcept;
  Expression lhs() const;
  Expression rhs() const;

  friend Expression operator+(const Expression& l, const Expression& r);
  friend Expression operator-(const Expression& l, const Expression& r);
  friend Expression operator*(const Expression& l, const Expression& r);
  friend Expression operator/(const Expression& l, const Expression& r);
  friend Expression operator-(const Expression& e);

  double evaluate(const std::function<double(const std::string&)>& voltage) const;

  /// Node names referenced by V(...).
  void collect_nodes(std::set<std::string>& out) const;

  /// Minimal-parenthesis text; parse(to_string()) re-prints byte-identically.
  std::string to_string() const;

  /// Same tree shape, node names and literals within `rel_tol`.
  bool equivalent(const Expression& other, double rel_tol = 0.0) const;

 private:
  struct Node;
  explicit Expression(std::shared_ptr<const Node> node);
  static Expression binary(Op op, const Expression& l, const Expression& r);

  std::shared_ptr<const Node> node_;

  friend class CompiledExpression;
};

/// Expression flattened onto a tape with node voltages resolved to unknown
/// indices, for fast evaluation with reverse-mode gradients.
class CompiledExpression {
 public:
  using Resolver = std::function<int(const std::string&)>;  // -1 for ground

  CompiledExpression() = default;
  CompiledExpression(const Expression& expr, const Resolver& resolve);

  double value(const Eigen::VectorXd& x) const;

  /// Value plus d(value)/dx_k for every referenced unknown k (merged, sorted by k).
  double value_and_gradient(const Eigen::VectorXd& x,
                            std::vector<std::pair<int, double>>& gradient) const;

  /// Unknown indices the expression depends on (sorted, unique).
  const std::vector<int>& dependencies() const noexcept { return deps_; }

 private:
  struct Instr {
    Expression::Op op;
    int lhs = -1;
    int rhs = -1;
    double literal = 0.0;
    int a = -1;
    int b = -1;
  };
  int emit(const Expression& e, const Resolver& resolve);
  void forward(const Eigen::VectorXd& x, std::vector<double>& vals) const;

  std::vector<Instr> tape_;
  std::vector<int> deps_;
};

}  // namespace fitnet
