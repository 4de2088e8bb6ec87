#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "obleig/common.hpp"
#include "obleig/errors.hpp"

namespace obleig {

/// Symbolic scalar expression in the variables x and y.
///
/// Grammar (documented verbatim in the README; parsing is byte-exact):
///   expr    := term (('+' | '-') term)*
///   term    := unary (('*' | '/') unary)*
///   unary   := '-' unary | power
///   power   := primary ('^' unary)?            right-associative
///   primary := NUMBER | 'x' | 'y' | 'pi' | FUNC '(' expr (',' expr)* ')'
///            | '(' expr ')'
///   FUNC    := exp | cos | sin | tanh | abs | min | max | step
/// NUMBER is a C double literal. step(a) is 0 for a < 0, 1 for a > 0 and 1/2
/// at a = 0. min and max take exactly two arguments.
///
/// Derivatives are exact for smooth nodes; abs, min, max and step
/// differentiate branchwise (step contributes zero). Powers with a
/// non-constant exponent cannot be differentiated and raise
/// UndifferentiableField when asked.
class Expr {
 public:
  static Expr parse(std::string_view src);
  static Expr constant(double v) { return Expr(std::make_shared<Node>(Node{Op::num, v, {}})); }

  double eval(double x, double y = 0.0) const;
  /// Partial derivative: var 0 is x, var 1 is y.
  Expr derivative(int var) const;
  bool is_constant(double* value = nullptr) const;
  std::string str() const;

 private:
  enum class Op { num, var_x, var_y, add, sub, mul, div, pow, neg, exp, cos, sin, tanh, abs, min, max, step };

  struct Node {
    Op op;
    double value = 0.0;  // op == num
    std::vector<std::shared_ptr<const Node>> kids;
  };
  using NodePtr = std::shared_ptr<const Node>;

  explicit Expr(NodePtr n) : node_(std::move(n)) {}

  static double eval_node(const Node& n, double x, double y);
  static NodePtr diff_node(const NodePtr& n, int var);
  static std::string str_node(const Node& n);

  static NodePtr mk(Op op, std::vector<NodePtr> kids) {
    return std::make_shared<Node>(Node{op, 0.0, std::move(kids)});
  }
  static NodePtr num(double v) { return std::make_shared<Node>(Node{Op::num, v, {}}); }
  static bool is_num(const NodePtr& n, double v) { return n->op == Op::num && n->value == v; }
  static NodePtr mk_add(NodePtr a, NodePtr b);
  static NodePtr mk_sub(NodePtr a, NodePtr b);
  static NodePtr mk_mul(NodePtr a, NodePtr b);
  static NodePtr mk_div(NodePtr a, NodePtr b);

  struct Parser;

  NodePtr node_;
};

inline double Expr::eval(double x, double y) const { return eval_node(*node_, x, y); }

inline double Expr::eval_node(const Node& n, double x, double y) {
  switch (n.op) {
    case Op::num: return n.value;
    case Op::var_x: return x;
    case Op::var_y: return y;
    case Op::add: return eval_node(*n.kids[0], x, y) + eval_node(*n.kids[1], x, y);
    case Op::sub: return eval_node(*n.kids[0], x, y) - eval_node(*n.kids[1], x, y);
    case Op::mul: return eval_node(*n.kids[0], x, y) * eval_node(*n.kids[1], x, y);
    case Op::div: return eval_node(*n.kids[0], x, y) / eval_node(*n.kids[1], x, y);
    case Op::pow: return std::pow(eval_node(*n.kids[0], x, y), eval_node(*n.kids[1], x, y));
    case Op::neg: return -eval_node(*n.kids[0], x, y);
    case Op::exp: return std::exp(eval_node(*n.kids[0], x, y));
    case Op::cos: return std::cos(eval_node(*n.kids[0], x, y));
    case Op::sin: return std::sin(eval_node(*n.kids[0], x, y));
    case Op::tanh: return std::tanh(eval_node(*n.kids[0], x, y));
    case Op::abs: return std::abs(eval_node(*n.kids[0], x, y));
    case Op::min: return std::min(eval_node(*n.kids[0], x, y), eval_node(*n.kids[1], x, y));
    case Op::max: return std::max(eval_node(*n.kids[0], x, y), eval_node(*n.kids[1], x, y));
    case Op::step: {
      double a = eval_node(*n.kids[0], x, y);
      return a < 0 ? 0.0 : (a > 0 ? 1.0 : 0.5);
    }
  }
  return 0.0;
}

inline bool Expr::is_constant(double* value) const {
  if (node_->op != Op::num) return false;
  if (value) *value = node_->value;
  return true;
}

inline Expr::NodePtr Expr::mk_add(NodePtr a, NodePtr b) {
  if (is_num(a, 0)) return b;
  if (is_num(b, 0)) return a;
  if (a->op == Op::num && b->op == Op::num) return num(a->value + b->value);
  return mk(Op::add, {std::move(a), std::move(b)});
}

inline Expr::NodePtr Expr::mk_sub(NodePtr a, NodePtr b) {
  if (is_num(b, 0)) return a;
  if (a->op == Op::num && b->op == Op::num) return num(a->value - b->value);
  if (is_num(a, 0)) return mk(Op::neg, {std::move(b)});
  return mk(Op::sub, {std::move(a), std::move(b)});
}

inline Expr::NodePtr Expr::mk_mul(NodePtr a, NodePtr b) {
  if (is_num(a, 0) || is_num(b, 0)) return num(0);
  if (is_num(a, 1)) return b;
  if (is_num(b, 1)) return a;
  if (a->op == Op::num && b->op == Op::num) return num(a->value * b->value);
  return mk(Op::mul, {std::move(a), std::move(b)});
}

inline Expr::NodePtr Expr::mk_div(NodePtr a, NodePtr b) {
  if (is_num(a, 0)) return num(0);
  if (is_num(b, 1)) return a;
  if (a->op == Op::num && b->op == Op::num && b->value != 0) return num(a->value / b->value);
  return mk(Op::div, {std::move(a), std::move(b)});
}

inline Expr::NodePtr Expr::diff_node(const NodePtr& n, int var) {
  switch (n->op) {
    case Op::num: return num(0);
    case Op::var_x: return num(var == 0 ? 1 : 0);
    case Op::var_y: return num(var == 1 ? 1 : 0);
    case Op::add: return mk_add(diff_node(n->kids[0], var), diff_node(n->kids[1], var));
    case Op::sub: return mk_sub(diff_node(n->kids[0], var), diff_node(n->kids[1], var));
    case Op::mul:
      return mk_add(mk_mul(diff_node(n->kids[0], var), n->kids[1]),
                    mk_mul(n->kids[0], diff_node(n->kids[1], var)));
    case Op::div:
      // (a/b)' = a'/b - a b'/b^2
      return mk_sub(mk_div(diff_node(n->kids[0], var), n->kids[1]),
                    mk_div(mk_mul(n->kids[0], diff_node(n->kids[1], var)),
                           mk(Op::mul, {n->kids[1], n->kids[1]})));
    case Op::pow: {
      if (n->kids[1]->op != Op::num)
        throw UndifferentiableField("power with non-constant exponent");
      double e = n->kids[1]->value;
      // (f^e)' = e f^(e-1) f'
      return mk_mul(mk_mul(num(e), mk(Op::pow, {n->kids[0], num(e - 1)})),
                    diff_node(n->kids[0], var));
    }
    case Op::neg: return mk(Op::neg, {diff_node(n->kids[0], var)});
    case Op::exp: return mk_mul(mk(Op::exp, {n->kids[0]}), diff_node(n->kids[0], var));
    case Op::cos:
      return mk(Op::neg, {mk_mul(mk(Op::sin, {n->kids[0]}), diff_node(n->kids[0], var))});
    case Op::sin: return mk_mul(mk(Op::cos, {n->kids[0]}), diff_node(n->kids[0], var));
    case Op::tanh: {
      auto t = mk(Op::tanh, {n->kids[0]});
      return mk_mul(mk_sub(num(1), mk(Op::mul, {t, t})), diff_node(n->kids[0], var));
    }
    case Op::abs: {
      // |f|' = step(f) - step(-f) times f' (zero at the kink).
      auto sgn = mk_sub(mk(Op::step, {n->kids[0]}), mk(Op::step, {mk(Op::neg, {n->kids[0]})}));
      return mk_mul(sgn, diff_node(n->kids[0], var));
    }
    case Op::min: {
      // branch select: where a < b use a', else b'
      auto sel = mk(Op::step, {mk_sub(n->kids[1], n->kids[0])});  // 1 where a < b
      return mk_add(mk_mul(sel, diff_node(n->kids[0], var)),
                    mk_mul(mk_sub(num(1), sel), diff_node(n->kids[1], var)));
    }
    case Op::max: {
      auto sel = mk(Op::step, {mk_sub(n->kids[0], n->kids[1])});  // 1 where a > b
      return mk_add(mk_mul(sel, diff_node(n->kids[0], var)),
                    mk_mul(mk_sub(num(1), sel), diff_node(n->kids[1], var)));
    }
    case Op::step: return num(0);
  }
  return num(0);
}

inline Expr Expr::derivative(int var) const { return Expr(diff_node(node_, var)); }

inline std::string Expr::str_node(const Node& n) {
  auto bin = [&](const char* op) {
    return "(" + str_node(*n.kids[0]) + op + str_node(*n.kids[1]) + ")";
  };
  auto fn = [&](const char* name) {
    std::string s = std::string(name) + "(" + str_node(*n.kids[0]);
    for (size_t i = 1; i < n.kids.size(); ++i) s += "," + str_node(*n.kids[i]);
    return s + ")";
  };
  switch (n.op) {
    case Op::num: {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%g", n.value);
      return std::string(buf);
    }
    case Op::var_x: return "x";
    case Op::var_y: return "y";
    case Op::add: return bin("+");
    case Op::sub: return bin("-");
    case Op::mul: return bin("*");
    case Op::div: return bin("/");
    case Op::pow: return bin("^");
    case Op::neg: return "(-" + str_node(*n.kids[0]) + ")";
    case Op::exp: return fn("exp");
    case Op::cos: return fn("cos");
    case Op::sin: return fn("sin");
    case Op::tanh: return fn("tanh");
    case Op::abs: return fn("abs");
    case Op::min: return fn("min");
    case Op::max: return fn("max");
    case Op::step: return fn("step");
  }
  return "?";
}

inline std::string Expr::str() const { return str_node(*node_); }

struct Expr::Parser {
  std::string_view src;
  size_t pos = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("expression parse error at offset " + std::to_string(pos) + ": " + msg +
                      " in \"" + std::string(src) + "\"");
  }
  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < src.size() && src[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < src.size() ? src[pos] : '\0';
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (eat('+')) lhs = mk(Op::add, {lhs, parse_term()});
      else if (eat('-')) lhs = mk(Op::sub, {lhs, parse_term()});
      else return lhs;
    }
  }
  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (eat('*')) lhs = mk(Op::mul, {lhs, parse_unary()});
      else if (eat('/')) lhs = mk(Op::div, {lhs, parse_unary()});
      else return lhs;
    }
  }
  NodePtr parse_unary() {
    if (eat('-')) return mk(Op::neg, {parse_unary()});
    return parse_power();
  }
  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (eat('^')) return mk(Op::pow, {base, parse_unary()});
    return base;
  }
  NodePtr parse_primary() {
    skip_ws();
    if (pos >= src.size()) fail("unexpected end of input");
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src.data() + pos;
      char* end = nullptr;
      double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos += static_cast<size_t>(end - begin);
      return num(v);
    }
    if (c == '(') {
      ++pos;
      NodePtr e = parse_expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t start = pos;
      while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
      std::string_view name = src.substr(start, pos - start);
      if (name == "x") return mk(Op::var_x, {});
      if (name == "y") return mk(Op::var_y, {});
      if (name == "pi") return num(kPi);
      Op op;
      size_t arity;
      if (name == "exp") { op = Op::exp; arity = 1; }
      else if (name == "cos") { op = Op::cos; arity = 1; }
      else if (name == "sin") { op = Op::sin; arity = 1; }
      else if (name == "tanh") { op = Op::tanh; arity = 1; }
      else if (name == "abs") { op = Op::abs; arity = 1; }
      else if (name == "min") { op = Op::min; arity = 2; }
      else if (name == "max") { op = Op::max; arity = 2; }
      else if (name == "step") { op = Op::step; arity = 1; }
      else fail("unknown identifier '" + std::string(name) + "'");
      if (!eat('(')) fail("expected '(' after function name");
      std::vector<NodePtr> args;
      args.push_back(parse_expr());
      while (eat(',')) args.push_back(parse_expr());
      if (!eat(')')) fail("expected ')'");
      if (args.size() != arity) fail("wrong argument count for '" + std::string(name) + "'");
      return mk(op, std::move(args));
    }
    fail(std::string("unexpected character '") + c + "'");
  }
};

inline Expr Expr::parse(std::string_view src) {
  Parser p{src};
  NodePtr root = p.parse_expr();
  p.skip_ws();
  if (p.pos != src.size()) p.fail("trailing input");
  return Expr(std::move(root));
}

}  // namespace obleig
