#include "hfv/expression.hpp"

#include <cctype>
#include <cmath>
#include <vector>

namespace hfv {

namespace {
enum class Op { add, sub, mul, div, pow, neg, exp, sqrt, abs, sign, num, var };
}  // namespace

struct Expression::Node {
  Op op;
  double value = 0.0;  // num
  int var = 0;         // var: 0..2 -> x1..x3, 3 -> t
  std::size_t pos = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

std::shared_ptr<Expression::Node> make(Op op, std::size_t pos, NodePtr a = nullptr,
                                        NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->pos = pos;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

struct Parser {
  const std::string& s;
  std::size_t i = 0;

  explicit Parser(const std::string& text) : s(text) {}

  void skip() {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
  }
  bool eat(char c) {
    skip();
    if (i < s.size() && s[i] == c) {
      ++i;
      return true;
    }
    return false;
  }
  char peek() {
    skip();
    return i < s.size() ? s[i] : '\0';
  }

  [[noreturn]] void fail(const std::string& msg) { throw ExpressionError(msg, i); }

  // sum := term (('+'|'-') term)*
  NodePtr sum() {
    NodePtr lhs = term();
    for (;;) {
      skip();
      if (eat('+'))
        lhs = make(Op::add, i, lhs, term());
      else if (eat('-'))
        lhs = make(Op::sub, i, lhs, term());
      else
        return lhs;
    }
  }

  // term := unary (('*'|'/') unary)*
  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      skip();
      if (eat('*'))
        lhs = make(Op::mul, i, lhs, unary());
      else if (eat('/'))
        lhs = make(Op::div, i, lhs, unary());
      else
        return lhs;
    }
  }

  // unary := '-' unary | power     (power binds tighter than unary minus)
  NodePtr unary() {
    if (eat('-')) return make(Op::neg, i, unary());
    return power();
  }

  // power := atom ('^' unary)?     (right-associative)
  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Op::pow, i, base, unary());
    return base;
  }

  NodePtr atom() {
    skip();
    if (i >= s.size()) fail("unexpected end of expression");
    const char c = s[i];
    if (c == '(') {
      ++i;
      NodePtr inner = sum();
      if (!eat(')')) fail("expected ')'");
      return inner;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return identifier();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr number() {
    const std::size_t start = i;
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(s.substr(start), &used);
    } catch (const std::exception&) {
      fail("bad numeric literal");
    }
    i = start + used;
    auto n = make(Op::num, start);
    n->value = v;
    return n;
  }

  NodePtr identifier() {
    const std::size_t start = i;
    while (i < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_'))
      ++i;
    const std::string name = s.substr(start, i - start);
    if (name == "x1" || name == "x2" || name == "x3" || name == "t") {
      auto n = make(Op::var, start);
      n->var = name == "t" ? 3 : name[1] - '1';
      return n;
    }
    Op op;
    if (name == "exp")
      op = Op::exp;
    else if (name == "sqrt")
      op = Op::sqrt;
    else if (name == "abs")
      op = Op::abs;
    else if (name == "sign")
      op = Op::sign;
    else {
      i = start;
      fail("unknown identifier '" + name + "'");
    }
    if (!eat('(')) fail("expected '(' after function name");
    NodePtr arg = sum();
    if (!eat(')')) fail("expected ')'");
    return make(op, start, arg);
  }
};

double eval_node(const Expression::Node& n, const Vec3& x, double t) {
  switch (n.op) {
    case Op::num:
      return n.value;
    case Op::var:
      return n.var == 3 ? t : x[n.var];
    case Op::add:
      return eval_node(*n.a, x, t) + eval_node(*n.b, x, t);
    case Op::sub:
      return eval_node(*n.a, x, t) - eval_node(*n.b, x, t);
    case Op::mul:
      return eval_node(*n.a, x, t) * eval_node(*n.b, x, t);
    case Op::div:
      return eval_node(*n.a, x, t) / eval_node(*n.b, x, t);
    case Op::pow:
      return std::pow(eval_node(*n.a, x, t), eval_node(*n.b, x, t));
    case Op::neg:
      return -eval_node(*n.a, x, t);
    case Op::exp:
      return std::exp(eval_node(*n.a, x, t));
    case Op::sqrt: {
      const double v = eval_node(*n.a, x, t);
      if (v < 0.0) throw ExpressionError("sqrt of negative value", n.pos);
      return std::sqrt(v);
    }
    case Op::abs:
      return std::abs(eval_node(*n.a, x, t));
    case Op::sign: {
      const double v = eval_node(*n.a, x, t);
      return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    }
  }
  return 0.0;  // unreachable
}

}  // namespace

Expression Expression::parse(const std::string& text) {
  Parser p(text);
  p.skip();
  if (p.i >= text.size()) throw ExpressionError("empty expression", 0);
  NodePtr root = p.sum();
  p.skip();
  if (p.i < text.size()) p.fail("trailing input");
  Expression e;
  e.root_ = std::move(root);
  e.text_ = text;
  return e;
}

double Expression::eval(const Vec3& x, double t) const { return eval_node(*root_, x, t); }

}  // namespace hfv
