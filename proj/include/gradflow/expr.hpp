#pragma once

// Expression trees for user-supplied scalar fields, with a recursive
// descent parser and exact symbolic differentiation.
//
// Grammar (whitespace insignificant):
//   expr    := term (('+'|'-') term)*
//   term    := factor (('*'|'/') factor)*
//   factor  := ('-')* power
//   power   := atom ('^' exponent)?          (right-associative, tightest)
//   atom    := number | identifier | identifier '(' expr ')' | '(' expr ')'
//   exponent:= ('-')? integer | '(' ('-')? integer ')'
//
// Exponents are integer literals only, which keeps differentiation exact.
// Supported functions: sin, cos, exp.

#include <cctype>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace gradflow {

struct ParseError : std::runtime_error {
  ParseError(std::size_t offset, const std::string& what)
      : std::runtime_error("parse error at offset " + std::to_string(offset) +
                           ": " + what),
        offset(offset) {}
  std::size_t offset;
};

namespace detail {

enum class NodeKind { kConst, kVar, kAdd, kSub, kMul, kDiv, kPow, kNeg, kCall };
enum class Func { kSin, kCos, kExp };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double value = 0.0;   // kConst
  int var = 0;          // kVar
  int exponent = 0;     // kPow
  Func func = Func::kSin;
  NodePtr a, b;

  double eval(const Eigen::VectorXd& x) const {
    switch (kind) {
      case NodeKind::kConst: return value;
      case NodeKind::kVar: return x[var];
      case NodeKind::kAdd: return a->eval(x) + b->eval(x);
      case NodeKind::kSub: return a->eval(x) - b->eval(x);
      case NodeKind::kMul: return a->eval(x) * b->eval(x);
      case NodeKind::kDiv: return a->eval(x) / b->eval(x);
      case NodeKind::kPow: return ipow(a->eval(x), exponent);
      case NodeKind::kNeg: return -a->eval(x);
      case NodeKind::kCall:
        switch (func) {
          case Func::kSin: return std::sin(a->eval(x));
          case Func::kCos: return std::cos(a->eval(x));
          case Func::kExp: return std::exp(a->eval(x));
        }
    }
    return 0.0;
  }

  static double ipow(double base, int k) {
    if (k < 0) return 1.0 / ipow(base, -k);
    double r = 1.0, b = base;
    for (int e = k; e > 0; e >>= 1) {
      if (e & 1) r *= b;
      b *= b;
    }
    return r;
  }
};

inline NodePtr constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kConst;
  n->value = v;
  return n;
}
inline NodePtr variable(int i) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kVar;
  n->var = i;
  return n;
}
inline NodePtr binary(NodeKind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}
inline NodePtr add(NodePtr a, NodePtr b) { return binary(NodeKind::kAdd, a, b); }
inline NodePtr sub(NodePtr a, NodePtr b) { return binary(NodeKind::kSub, a, b); }
inline NodePtr mul(NodePtr a, NodePtr b) { return binary(NodeKind::kMul, a, b); }
inline NodePtr div(NodePtr a, NodePtr b) { return binary(NodeKind::kDiv, a, b); }
inline NodePtr neg(NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kNeg;
  n->a = std::move(a);
  return n;
}
inline NodePtr pow(NodePtr a, int k) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kPow;
  n->a = std::move(a);
  n->exponent = k;
  return n;
}
inline NodePtr call(Func f, NodePtr a) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::kCall;
  n->func = f;
  n->a = std::move(a);
  return n;
}

inline bool is_const(const NodePtr& n, double v) {
  return n->kind == NodeKind::kConst && n->value == v;
}

inline NodePtr simplify_node(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::kConst:
    case NodeKind::kVar:
      return n;
    case NodeKind::kNeg: {
      NodePtr a = simplify_node(n->a);
      if (a->kind == NodeKind::kConst) return constant(-a->value);
      if (a->kind == NodeKind::kNeg) return a->a;
      return neg(a);
    }
    case NodeKind::kPow: {
      NodePtr a = simplify_node(n->a);
      if (n->exponent == 0) return constant(1.0);
      if (n->exponent == 1) return a;
      if (a->kind == NodeKind::kConst)
        return constant(Node::ipow(a->value, n->exponent));
      return pow(a, n->exponent);
    }
    case NodeKind::kCall: {
      NodePtr a = simplify_node(n->a);
      if (a->kind == NodeKind::kConst) {
        Eigen::VectorXd dummy;
        return constant(call(n->func, a)->eval(dummy));
      }
      return call(n->func, a);
    }
    default:
      break;
  }
  NodePtr a = simplify_node(n->a);
  NodePtr b = simplify_node(n->b);
  const bool ca = a->kind == NodeKind::kConst;
  const bool cb = b->kind == NodeKind::kConst;
  switch (n->kind) {
    case NodeKind::kAdd:
      if (ca && cb) return constant(a->value + b->value);
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      return add(a, b);
    case NodeKind::kSub:
      if (ca && cb) return constant(a->value - b->value);
      if (is_const(b, 0.0)) return a;
      if (is_const(a, 0.0)) return simplify_node(neg(b));
      return sub(a, b);
    case NodeKind::kMul:
      if (ca && cb) return constant(a->value * b->value);
      if (is_const(a, 0.0) || is_const(b, 0.0)) return constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      return mul(a, b);
    case NodeKind::kDiv:
      if (ca && cb && b->value != 0.0) return constant(a->value / b->value);
      if (is_const(a, 0.0)) return constant(0.0);
      if (is_const(b, 1.0)) return a;
      return div(a, b);
    default:
      return n;
  }
}

inline NodePtr diff_node(const NodePtr& n, int var) {
  switch (n->kind) {
    case NodeKind::kConst:
      return constant(0.0);
    case NodeKind::kVar:
      return constant(n->var == var ? 1.0 : 0.0);
    case NodeKind::kAdd:
      return add(diff_node(n->a, var), diff_node(n->b, var));
    case NodeKind::kSub:
      return sub(diff_node(n->a, var), diff_node(n->b, var));
    case NodeKind::kMul:
      return add(mul(diff_node(n->a, var), n->b),
                 mul(n->a, diff_node(n->b, var)));
    case NodeKind::kDiv:
      // (a/b)' = a'/b - a b' / b^2
      return sub(div(diff_node(n->a, var), n->b),
                 div(mul(n->a, diff_node(n->b, var)), pow(n->b, 2)));
    case NodeKind::kPow:
      // (u^k)' = k u^(k-1) u'
      return mul(mul(constant(static_cast<double>(n->exponent)),
                     pow(n->a, n->exponent - 1)),
                 diff_node(n->a, var));
    case NodeKind::kNeg:
      return neg(diff_node(n->a, var));
    case NodeKind::kCall: {
      NodePtr inner = diff_node(n->a, var);
      switch (n->func) {
        case Func::kSin: return mul(call(Func::kCos, n->a), inner);
        case Func::kCos: return neg(mul(call(Func::kSin, n->a), inner));
        case Func::kExp: return mul(call(Func::kExp, n->a), inner);
      }
    }
  }
  return constant(0.0);
}

}  // namespace detail

// Immutable expression over variables x_0..x_{dim-1}.
class Expr {
 public:
  Expr() = default;
  Expr(detail::NodePtr root, int dim) : root_(std::move(root)), dim_(dim) {}

  int dimension() const { return dim_; }

  double eval(const Eigen::VectorXd& x) const {
    if (x.size() != dim_)
      throw std::invalid_argument("expression expects dimension " +
                                  std::to_string(dim_));
    return root_->eval(x);
  }

  Expr differentiate(int var) const {
    if (var < 0 || var >= dim_)
      throw std::invalid_argument("variable index out of range");
    return Expr(detail::simplify_node(detail::diff_node(root_, var)), dim_);
  }

  Expr simplified() const {
    return Expr(detail::simplify_node(root_), dim_);
  }

  const detail::NodePtr& root() const { return root_; }

 private:
  detail::NodePtr root_;
  int dim_ = 0;
};

namespace detail {

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& vars)
      : text_(text), vars_(vars) {}

  NodePtr parse() {
    if (text_.empty()) throw ParseError(0, "empty expression");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ != text_.size())
      throw ParseError(pos_, "unexpected trailing input");
    return e;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(pos_, what);
  }

  NodePtr parse_expr() {
    NodePtr e = parse_term();
    for (;;) {
      if (accept('+')) e = add(e, parse_term());
      else if (accept('-')) e = sub(e, parse_term());
      else return e;
    }
  }

  NodePtr parse_term() {
    NodePtr e = parse_factor();
    for (;;) {
      if (accept('*')) e = mul(e, parse_factor());
      else if (accept('/')) e = div(e, parse_factor());
      else return e;
    }
  }

  NodePtr parse_factor() {
    if (accept('-')) return neg(parse_factor());
    NodePtr base = parse_atom();
    if (accept('^')) return pow(base, parse_exponent());
    return base;
  }

  int parse_exponent() {
    skip_ws();
    bool paren = accept('(');
    bool negative = accept('-');
    skip_ws();
    std::size_t start = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == start) throw ParseError(pos_, "expected integer exponent");
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' ||
                                text_[pos_] == 'E'))
      throw ParseError(pos_, "exponent must be an integer literal");
    int k = std::stoi(text_.substr(start, pos_ - start));
    if (paren) expect(')', "expected ')' after exponent");
    return negative ? -k : k;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError(pos_, "unexpected end of input");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      expect(')', "expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_identifier();
    throw ParseError(pos_, std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      std::size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
        pos_ = mark;  // 'e' was not an exponent marker
      else
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    try {
      std::size_t used = 0;
      double v = std::stod(text_.substr(start, pos_ - start), &used);
      if (used != pos_ - start) throw std::invalid_argument("");
      return constant(v);
    } catch (const std::exception&) {
      throw ParseError(start, "malformed numeric literal");
    }
  }

  NodePtr parse_identifier() {
    std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (accept('(')) {
      Func f;
      if (name == "sin") f = Func::kSin;
      else if (name == "cos") f = Func::kCos;
      else if (name == "exp") f = Func::kExp;
      else throw ParseError(start, "unknown function '" + name + "'");
      NodePtr arg = parse_expr();
      expect(')', "expected ')' after function argument");
      return call(f, arg);
    }
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (vars_[i] == name) return variable(static_cast<int>(i));
    throw ParseError(start, "unknown identifier '" + name + "'");
  }

  const std::string& text_;
  const std::vector<std::string>& vars_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(const std::string& text,
                             const std::vector<std::string>& variables) {
  for (std::size_t i = 0; i < variables.size(); ++i)
    for (std::size_t j = i + 1; j < variables.size(); ++j)
      if (variables[i] == variables[j])
        throw std::invalid_argument("duplicate variable name '" +
                                    variables[i] + "'");
  detail::Parser p(text, variables);
  return Expr(p.parse(), static_cast<int>(variables.size()));
}

}  // namespace gradflow
