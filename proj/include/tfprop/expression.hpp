#ifndef TFPROP_EXPRESSION_HPP
#define TFPROP_EXPRESSION_HPP

#include "tfprop/core.hpp"

#include <memory>
#include <string>
#include <vector>

namespace tfprop {

/// Real arithmetic expression over named variables.
///
/// Grammar: + - * / ^ (also ** and the middle dot), unary minus, parentheses,
/// numbers, the constant pi, and the functions sin, cos, exp, log, sqrt.
/// Expressions can be differentiated symbolically.
class Expression {
 public:
  Expression() = default;
  static Expression parse(const std::string& text, std::vector<std::string> variables);
  static Expression constant(double v, std::vector<std::string> variables = {});

  double operator()(const VectorXd& args) const;
  Expression derivative(Index var) const;
  std::string str() const;
  const std::vector<std::string>& variables() const { return vars_; }
  bool is_constant() const;

  struct Node;

 private:
  Expression(std::shared_ptr<const Node> root, std::vector<std::string> vars)
      : root_(std::move(root)), vars_(std::move(vars)) {}
  std::shared_ptr<const Node> root_;
  std::vector<std::string> vars_;
};

/// Variable names for a symbol in d dimensions: x (and xi / eta) for d = 1,
/// x1..xd (and xi1.. / eta1..) otherwise. Position names come first.
std::vector<std::string> position_variables(int d);
std::vector<std::string> phase_space_variables(int d);

}  // namespace tfprop

#endif  // TFPROP_EXPRESSION_HPP
