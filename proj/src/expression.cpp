#include "svderiv/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace svderiv {

struct Expression::Node {
  enum class Op { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kAbs, kSin, kCos, kExp, kSqrt };
  Op op = Op::kConst;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> lhs;
  std::shared_ptr<const Node> rhs;
};

namespace {

using Node = Expression::Node;
using Op = Node::Op;
using NodePtr = std::shared_ptr<const Node>;

NodePtr make(Op op, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

class Parser {
 public:
  Parser(std::string_view text, int num_vars) : text_(text), num_vars_(num_vars) {}

  NodePtr parse() {
    NodePtr root = expr();
    skip_space();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ExpressionError("expression '" + std::string(text_) + "': " + what + " at offset " +
                          std::to_string(pos_));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    while (true) {
      if (accept('+')) {
        lhs = make(Op::kAdd, lhs, term());
      } else if (accept('-')) {
        lhs = make(Op::kSub, lhs, term());
      } else {
        return lhs;
      }
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    while (true) {
      if (accept('*')) {
        lhs = make(Op::kMul, lhs, unary());
      } else if (accept('/')) {
        lhs = make(Op::kDiv, lhs, unary());
      } else {
        return lhs;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::kNeg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::kPow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip_space();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (accept('(')) {
      NodePtr inner = expr();
      if (!accept(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      if (word == "x") return variable();
      Op op;
      if (word == "abs") {
        op = Op::kAbs;
      } else if (word == "sin") {
        op = Op::kSin;
      } else if (word == "cos") {
        op = Op::kCos;
      } else if (word == "exp") {
        op = Op::kExp;
      } else if (word == "sqrt") {
        op = Op::kSqrt;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(word) + "'");
      }
      if (!accept('(')) fail("expected '(' after function name");
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(op, arg);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const std::string rest(text_.substr(pos_));
    char* end = nullptr;
    const double v = std::strtod(rest.c_str(), &end);
    if (end == rest.c_str()) fail("malformed number");
    pos_ += static_cast<std::size_t>(end - rest.c_str());
    auto n = std::make_shared<Node>();
    n->op = Op::kConst;
    n->value = v;
    return n;
  }

  NodePtr variable() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (start == pos_) fail("variables are written x1..xd");
    const int idx = std::stoi(std::string(text_.substr(start, pos_ - start)));
    if (idx < 1 || idx > num_vars_) fail("variable x" + std::to_string(idx) + " out of range");
    auto n = std::make_shared<Node>();
    n->op = Op::kVar;
    n->var = idx - 1;
    return n;
  }

  std::string_view text_;
  int num_vars_;
  std::size_t pos_ = 0;
};

double eval_node(const Node& n, const Eigen::VectorXd& x) {
  switch (n.op) {
    case Op::kConst: return n.value;
    case Op::kVar: return x[n.var];
    case Op::kAdd: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case Op::kSub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case Op::kMul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case Op::kDiv: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case Op::kPow: return std::pow(eval_node(*n.lhs, x), eval_node(*n.rhs, x));
    case Op::kNeg: return -eval_node(*n.lhs, x);
    case Op::kAbs: return std::abs(eval_node(*n.lhs, x));
    case Op::kSin: return std::sin(eval_node(*n.lhs, x));
    case Op::kCos: return std::cos(eval_node(*n.lhs, x));
    case Op::kExp: return std::exp(eval_node(*n.lhs, x));
    case Op::kSqrt: return std::sqrt(eval_node(*n.lhs, x));
  }
  return 0.0;
}

struct Dual {
  double v;
  Eigen::VectorXd g;
};

Dual eval_dual(const Node& n, const Eigen::VectorXd& x) {
  const auto d = x.size();
  switch (n.op) {
    case Op::kConst: return {n.value, Eigen::VectorXd::Zero(d)};
    case Op::kVar: return {x[n.var], Eigen::VectorXd::Unit(d, n.var)};
    case Op::kNeg: {
      Dual a = eval_dual(*n.lhs, x);
      return {-a.v, -a.g};
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul:
    case Op::kDiv: {
      Dual a = eval_dual(*n.lhs, x);
      Dual b = eval_dual(*n.rhs, x);
      if (n.op == Op::kAdd) return {a.v + b.v, a.g + b.g};
      if (n.op == Op::kSub) return {a.v - b.v, a.g - b.g};
      if (n.op == Op::kMul) return {a.v * b.v, b.v * a.g + a.v * b.g};
      return {a.v / b.v, (b.v * a.g - a.v * b.g) / (b.v * b.v)};
    }
    case Op::kPow: {
      Dual a = eval_dual(*n.lhs, x);
      Dual b = eval_dual(*n.rhs, x);
      const double v = std::pow(a.v, b.v);
      Eigen::VectorXd g = b.v * std::pow(a.v, b.v - 1.0) * a.g;
      if (!b.g.isZero(0.0)) g += v * std::log(a.v) * b.g;
      return {v, g};
    }
    case Op::kAbs: {
      Dual a = eval_dual(*n.lhs, x);
      const double s = a.v > 0 ? 1.0 : (a.v < 0 ? -1.0 : 0.0);
      return {std::abs(a.v), s * a.g};
    }
    case Op::kSin: {
      Dual a = eval_dual(*n.lhs, x);
      return {std::sin(a.v), std::cos(a.v) * a.g};
    }
    case Op::kCos: {
      Dual a = eval_dual(*n.lhs, x);
      return {std::cos(a.v), -std::sin(a.v) * a.g};
    }
    case Op::kExp: {
      Dual a = eval_dual(*n.lhs, x);
      const double e = std::exp(a.v);
      return {e, e * a.g};
    }
    case Op::kSqrt: {
      Dual a = eval_dual(*n.lhs, x);
      const double s = std::sqrt(a.v);
      return {s, a.g / (2.0 * s)};
    }
  }
  return {0.0, Eigen::VectorXd::Zero(d)};
}

}  // namespace

Expression Expression::parse(std::string_view text, int num_vars) {
  if (num_vars < 0) throw ExpressionError("negative variable count");
  Parser parser(text, num_vars);
  return Expression(parser.parse(), num_vars, std::string(text));
}

Expression Expression::constant(double value) {
  auto n = std::make_shared<Node>();
  n->op = Op::kConst;
  n->value = value;
  return Expression(n, 0, std::to_string(value));
}

double Expression::eval(const Eigen::VectorXd& x) const {
  if (x.size() < num_vars_) throw ExpressionError("expression '" + text_ + "': too few variables");
  return eval_node(*root_, x);
}

std::pair<double, Eigen::VectorXd> Expression::eval_with_gradient(const Eigen::VectorXd& x) const {
  if (x.size() < num_vars_) throw ExpressionError("expression '" + text_ + "': too few variables");
  Dual r = eval_dual(*root_, x);
  return {r.v, std::move(r.g)};
}

}  // namespace svderiv
