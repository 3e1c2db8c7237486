#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include <Eigen/Dense>

namespace svderiv {

class ExpressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar expression over variables x1..xd.
///
/// Grammar (whitespace ignored):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := ('-' | '+') unary | power
///     power   := primary ('^' unary)?          right-associative
///     primary := number | 'x' index | func '(' expr ')' | '(' expr ')'
///     func    := abs | sin | cos | exp | sqrt
///
/// so -x1^2 parses as -(x1^2) and 2^-x1 is accepted. Numbers use the usual
/// decimal/scientific notation. Variable indices are 1-based and must not
/// exceed d.
class Expression {
 public:
  struct Node;

  static Expression parse(std::string_view text, int num_vars);
  static Expression constant(double value);

  double eval(const Eigen::VectorXd& x) const;

  /// Value together with the exact gradient (forward-mode differentiation).
  /// abs uses sign(a) with sign(0) = 0.
  std::pair<double, Eigen::VectorXd> eval_with_gradient(const Eigen::VectorXd& x) const;

  const std::string& text() const { return text_; }
  int num_vars() const { return num_vars_; }

 private:
  Expression(std::shared_ptr<const Node> root, int num_vars, std::string text)
      : root_(std::move(root)), num_vars_(num_vars), text_(std::move(text)) {}

  std::shared_ptr<const Node> root_;
  int num_vars_ = 0;
  std::string text_;
};

}  // namespace svderiv
