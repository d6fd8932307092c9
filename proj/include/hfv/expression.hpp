// Arithmetic expressions over x1, x2, x3, t for user-defined coefficients,
// boundary data and exact solutions. Operators + - * / ^ (right-associative
// power binding tighter than unary minus) and functions exp, sqrt, abs, sign.

#ifndef HFV_EXPRESSION_HPP
#define HFV_EXPRESSION_HPP

#include "hfv/mesh.hpp"

#include <memory>
#include <stdexcept>
#include <string>

namespace hfv {

struct ExpressionError : std::runtime_error {
  ExpressionError(const std::string& msg, std::size_t position)
      : std::runtime_error(msg + " (at position " + std::to_string(position) + ")"),
        pos(position) {}
  std::size_t pos;
};

class Expression {
 public:
  /// Parses `text`; throws ExpressionError with the offending position.
  static Expression parse(const std::string& text);

  /// Pure evaluation; sqrt of a negative argument throws ExpressionError.
  double eval(const Vec3& x, double t) const;

  const std::string& text() const { return text_; }

  struct Node;

 private:
  std::shared_ptr<const Node> root_;
  std::string text_;
};

}  // namespace hfv

#endif
