#include "tfprop/expression.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>

namespace tfprop {

enum class Op { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, log, sqrt };

struct Expression::Node {
  Op op;
  double value = 0.0;
  Index var = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  return std::make_shared<const Expression::Node>(Expression::Node{op, 0.0, 0, std::move(a), std::move(b)});
}
NodePtr num(double v) { return std::make_shared<const Expression::Node>(Expression::Node{Op::constant, v, 0, nullptr, nullptr}); }
NodePtr var(Index i) { return std::make_shared<const Expression::Node>(Expression::Node{Op::variable, 0.0, i, nullptr, nullptr}); }

bool is_num(const NodePtr& n, double v) { return n->op == Op::constant && n->value == v; }
bool is_const(const NodePtr& n) { return n->op == Op::constant; }

// Constructors with light constant folding so derivatives stay readable.
NodePtr add(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0)) return b;
  if (is_num(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return num(a->value + b->value);
  return make(Op::add, std::move(a), std::move(b));
}
NodePtr sub(NodePtr a, NodePtr b) {
  if (is_num(b, 0.0)) return a;
  if (is_const(a) && is_const(b)) return num(a->value - b->value);
  if (is_num(a, 0.0)) return make(Op::neg, std::move(b));
  return make(Op::sub, std::move(a), std::move(b));
}
NodePtr mul(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0) || is_num(b, 0.0)) return num(0.0);
  if (is_num(a, 1.0)) return b;
  if (is_num(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return num(a->value * b->value);
  return make(Op::mul, std::move(a), std::move(b));
}
NodePtr divide(NodePtr a, NodePtr b) {
  if (is_num(a, 0.0)) return num(0.0);
  if (is_num(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return num(a->value / b->value);
  return make(Op::div, std::move(a), std::move(b));
}
NodePtr neg(NodePtr a) {
  if (is_const(a)) return num(-a->value);
  return make(Op::neg, std::move(a));
}
NodePtr power(NodePtr a, NodePtr b) {
  if (is_num(b, 0.0)) return num(1.0);
  if (is_num(b, 1.0)) return a;
  if (is_const(a) && is_const(b)) return num(std::pow(a->value, b->value));
  return make(Op::pow, std::move(a), std::move(b));
}

double eval(const Expression::Node& n, const VectorXd& x) {
  switch (n.op) {
    case Op::constant: return n.value;
    case Op::variable: return x(n.var);
    case Op::add: return eval(*n.a, x) + eval(*n.b, x);
    case Op::sub: return eval(*n.a, x) - eval(*n.b, x);
    case Op::mul: return eval(*n.a, x) * eval(*n.b, x);
    case Op::div: return eval(*n.a, x) / eval(*n.b, x);
    case Op::pow: {
      const double e = eval(*n.b, x);
      const double base = eval(*n.a, x);
      if (n.b->op == Op::constant && e == std::round(e) && std::abs(e) <= 16) {
        double r = 1.0;
        for (int k = 0; k < static_cast<int>(std::abs(e)); ++k) r *= base;
        return e < 0 ? 1.0 / r : r;
      }
      return std::pow(base, e);
    }
    case Op::neg: return -eval(*n.a, x);
    case Op::sin: return std::sin(eval(*n.a, x));
    case Op::cos: return std::cos(eval(*n.a, x));
    case Op::exp: return std::exp(eval(*n.a, x));
    case Op::log: return std::log(eval(*n.a, x));
    case Op::sqrt: return std::sqrt(eval(*n.a, x));
  }
  return 0.0;
}

NodePtr diff(const NodePtr& n, Index v) {
  switch (n->op) {
    case Op::constant: return num(0.0);
    case Op::variable: return num(n->var == v ? 1.0 : 0.0);
    case Op::add: return add(diff(n->a, v), diff(n->b, v));
    case Op::sub: return sub(diff(n->a, v), diff(n->b, v));
    case Op::mul: return add(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v)));
    case Op::div:
      return divide(sub(mul(diff(n->a, v), n->b), mul(n->a, diff(n->b, v))), mul(n->b, n->b));
    case Op::pow: {
      if (is_const(n->b)) {
        const double e = n->b->value;
        return mul(mul(num(e), power(n->a, num(e - 1.0))), diff(n->a, v));
      }
      // d(u^w) = u^w (w' log u + w u'/u)
      return mul(n, add(mul(diff(n->b, v), make(Op::log, n->a)), divide(mul(n->b, diff(n->a, v)), n->a)));
    }
    case Op::neg: return neg(diff(n->a, v));
    case Op::sin: return mul(make(Op::cos, n->a), diff(n->a, v));
    case Op::cos: return neg(mul(make(Op::sin, n->a), diff(n->a, v)));
    case Op::exp: return mul(n, diff(n->a, v));
    case Op::log: return divide(diff(n->a, v), n->a);
    case Op::sqrt: return divide(diff(n->a, v), mul(num(2.0), n));
  }
  return num(0.0);
}

std::string show(const Expression::Node& n, const std::vector<std::string>& vars) {
  switch (n.op) {
    case Op::constant: return fmt::format("{}", n.value);
    case Op::variable: return vars[static_cast<size_t>(n.var)];
    case Op::add: return fmt::format("({} + {})", show(*n.a, vars), show(*n.b, vars));
    case Op::sub: return fmt::format("({} - {})", show(*n.a, vars), show(*n.b, vars));
    case Op::mul: return fmt::format("({} * {})", show(*n.a, vars), show(*n.b, vars));
    case Op::div: return fmt::format("({} / {})", show(*n.a, vars), show(*n.b, vars));
    case Op::pow: return fmt::format("({} ^ {})", show(*n.a, vars), show(*n.b, vars));
    case Op::neg: return fmt::format("(-{})", show(*n.a, vars));
    case Op::sin: return fmt::format("sin({})", show(*n.a, vars));
    case Op::cos: return fmt::format("cos({})", show(*n.a, vars));
    case Op::exp: return fmt::format("exp({})", show(*n.a, vars));
    case Op::log: return fmt::format("log({})", show(*n.a, vars));
    case Op::sqrt: return fmt::format("sqrt({})", show(*n.a, vars));
  }
  return "?";
}

class Parser {
 public:
  Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(fmt::format("{} at offset {} in '{}'", what, pos_, s_));
  }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(const std::string& tok) {
    skip();
    if (s_.compare(pos_, tok.size(), tok) == 0) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr left = term();
    for (;;) {
      if (eat("+")) left = make(Op::add, left, term());
      else if (eat("-")) left = make(Op::sub, left, term());
      else return left;
    }
  }
  NodePtr term() {
    NodePtr left = unary();
    for (;;) {
      skip();
      if (s_.compare(pos_, 2, "**") == 0) return left;  // handled in power()
      if (eat("*") || eat("\xC2\xB7")) left = make(Op::mul, left, unary());
      else if (eat("/")) left = make(Op::div, left, unary());
      else return left;
    }
  }
  NodePtr unary() {
    if (eat("-")) return make(Op::neg, unary());
    if (eat("+")) return unary();
    return pow_expr();
  }
  NodePtr pow_expr() {
    NodePtr base = primary();
    if (eat("^") || eat("**")) return make(Op::pow, base, unary());
    return base;
  }
  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = expr();
      if (!eat(")")) fail("missing ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      return num(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name = s_.substr(start, pos_ - start);
      static const std::vector<std::pair<std::string, Op>> funcs = {
          {"sin", Op::sin}, {"cos", Op::cos}, {"exp", Op::exp}, {"log", Op::log}, {"sqrt", Op::sqrt}};
      for (const auto& [fname, op] : funcs) {
        if (name == fname) {
          if (!eat("(")) fail(fmt::format("expected '(' after {}", name));
          NodePtr arg = expr();
          if (!eat(")")) fail("missing ')'");
          return make(op, arg);
        }
      }
      if (name == "pi") return num(kPi);
      if (name.rfind("eta", 0) == 0) name = "xi" + name.substr(3);
      for (size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) return var(static_cast<Index>(i));
      }
      pos_ = start;
      fail(fmt::format("unknown identifier '{}'", name));
    }
    fail(fmt::format("unexpected character '{}'", c));
  }

  const std::string& s_;
  const std::vector<std::string>& vars_;
  size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(const std::string& text, std::vector<std::string> variables) {
  NodePtr root = Parser(text, variables).parse();
  return {std::move(root), std::move(variables)};
}

Expression Expression::constant(double v, std::vector<std::string> variables) { return {num(v), std::move(variables)}; }

double Expression::operator()(const VectorXd& args) const {
  if (!root_) throw DomainError("empty expression");
  if (args.size() != static_cast<Index>(vars_.size())) {
    throw DomainError(fmt::format("expression expects {} arguments, got {}", vars_.size(), args.size()));
  }
  return eval(*root_, args);
}

Expression Expression::derivative(Index v) const {
  if (!root_) throw DomainError("empty expression");
  return {diff(root_, v), vars_};
}

std::string Expression::str() const { return root_ ? show(*root_, vars_) : std::string(); }

bool Expression::is_constant() const { return root_ && root_->op == Op::constant; }

std::vector<std::string> position_variables(int d) {
  if (d == 1) return {"x"};
  std::vector<std::string> v;
  for (int a = 1; a <= d; ++a) v.push_back(fmt::format("x{}", a));
  return v;
}

std::vector<std::string> phase_space_variables(int d) {
  auto v = position_variables(d);
  if (d == 1) {
    v.emplace_back("xi");
  } else {
    for (int a = 1; a <= d; ++a) v.push_back(fmt::format("xi{}", a));
  }
  return v;
}

}  // namespace tfprop
