#include "triform/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <utility>
#include <vector>

#include "triform/errors.hpp"

namespace triform {

namespace {

enum class Op {
  Const,
  Var,  // payload: 0..3 = x, y, z, t
  Neg,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Sin,
  Cos,
  Tan,
  Sqrt,
  Exp,
  Abs,
};

}  // namespace

struct Expr::Node {
  Op op = Op::Const;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodePtr = std::shared_ptr<const Expr::Node>;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expr::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr constant(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr run() {
    NodePtr e = sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw InvalidArgument("expression error at position " +
                          std::to_string(pos_) + " in \"" + src_ + "\": " +
                          what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < src_.size() ? src_[pos_] : '\0';
  }

  NodePtr sum() {
    NodePtr e = product();
    for (;;) {
      if (consume('+'))
        e = make(Op::Add, e, product());
      else if (consume('-'))
        e = make(Op::Sub, e, product());
      else
        return e;
    }
  }

  NodePtr product() {
    NodePtr e = unary();
    for (;;) {
      if (consume('*'))
        e = make(Op::Mul, e, unary());
      else if (consume('/'))
        e = make(Op::Div, e, unary());
      else
        return e;
    }
  }

  NodePtr unary() {
    if (consume('-')) return make(Op::Neg, unary());
    if (consume('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (consume('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("expected a value");
    const char c = src_[pos_];

    if (c == '(') {
      ++pos_;
      NodePtr e = sum();
      if (!consume(')')) fail("missing ')'");
      return e;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += end - begin;
      return constant(v);
    }

    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < src_.size() &&
             std::isalnum(static_cast<unsigned char>(src_[pos_])))
        ++pos_;
      const std::string name = src_.substr(start, pos_ - start);
      if (name == "pi") return constant(M_PI);
      if (name == "x") return variable(0);
      if (name == "y") return variable(1);
      if (name == "z") return variable(2);
      if (name == "t") return variable(3);
      Op op;
      if (name == "sin")
        op = Op::Sin;
      else if (name == "cos")
        op = Op::Cos;
      else if (name == "tan")
        op = Op::Tan;
      else if (name == "sqrt")
        op = Op::Sqrt;
      else if (name == "exp")
        op = Op::Exp;
      else if (name == "abs")
        op = Op::Abs;
      else
        fail("unknown name '" + name + "'");
      if (!consume('(')) fail("'" + name + "' needs an argument list");
      NodePtr arg = sum();
      if (!consume(')')) fail("missing ')'");
      return make(op, arg);
    }

    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr variable(int index) {
    auto n = std::make_shared<Expr::Node>();
    n->op = Op::Var;
    n->var = index;
    return n;
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

double eval_node(const Expr::Node& n, const double vars[4]) {
  switch (n.op) {
    case Op::Const:
      return n.value;
    case Op::Var:
      return vars[n.var];
    case Op::Neg:
      return -eval_node(*n.a, vars);
    case Op::Add:
      return eval_node(*n.a, vars) + eval_node(*n.b, vars);
    case Op::Sub:
      return eval_node(*n.a, vars) - eval_node(*n.b, vars);
    case Op::Mul:
      return eval_node(*n.a, vars) * eval_node(*n.b, vars);
    case Op::Div:
      return eval_node(*n.a, vars) / eval_node(*n.b, vars);
    case Op::Pow:
      return std::pow(eval_node(*n.a, vars), eval_node(*n.b, vars));
    case Op::Sin:
      return std::sin(eval_node(*n.a, vars));
    case Op::Cos:
      return std::cos(eval_node(*n.a, vars));
    case Op::Tan:
      return std::tan(eval_node(*n.a, vars));
    case Op::Sqrt:
      return std::sqrt(eval_node(*n.a, vars));
    case Op::Exp:
      return std::exp(eval_node(*n.a, vars));
    case Op::Abs:
      return std::abs(eval_node(*n.a, vars));
  }
  return 0.0;  // unreachable
}

}  // namespace

Expr Expr::parse(const std::string& source) {
  Expr e;
  e.root_ = Parser(source).run();
  e.source_ = source;
  return e;
}

double Expr::eval(double x, double y, double z, double t) const {
  if (!root_) throw InvalidArgument("evaluating an empty expression");
  const double vars[4] = {x, y, z, t};
  return eval_node(*root_, vars);
}

}  // namespace triform
