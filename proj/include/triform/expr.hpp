#pragma once

#include <memory>
#include <string>

#include "triform/mesh.hpp"

namespace triform {

/// A compiled arithmetic expression over the variables x, y, z, t and
/// the constant pi, with + - * / ^, parentheses, and the functions
/// sin, cos, tan, sqrt, exp, abs. Parse errors raise InvalidArgument
/// with the offending position. Evaluation is pure and thread-safe.
class Expr {
 public:
  Expr() = default;
  static Expr parse(const std::string& source);

  double eval(double x, double y, double z, double t) const;
  double eval(const Point& p, double t) const { return eval(p[0], p[1], p[2], t); }
  bool valid() const { return static_cast<bool>(root_); }
  const std::string& source() const { return source_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

}  // namespace triform
