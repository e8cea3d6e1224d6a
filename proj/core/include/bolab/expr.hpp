#pragma once

#include <cstdint>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bolab {

namespace detail {
enum class ExprOp : std::uint8_t {
  Num, Var, Neg, Add, Sub, Mul, Div, Pow,
  Exp, Log, Sin, Cos, Sqrt, Abs, Sign, Rsqrt,
};
struct ExprInstr {
  ExprOp op;
  std::uint32_t index = 0;
  double value = 0.0;
};
}  // namespace detail

/// Scalar expression over named real variables.
///
/// Grammar (lowest to highest precedence):
///
///     expr    := term (('+' | '-') term)*
///     term    := unary (('*' | '/') unary)*
///     unary   := '-' unary | power
///     power   := primary ('^' unary)?          (right-associative)
///     primary := number | identifier | func '(' expr ')' | '(' expr ')'
///
/// Functions: exp log sin cos sqrt abs, plus the derivative helpers sign and
/// rsqrt (1/sqrt) which raise NonDifferentiable at 0. The identifier `pi` is
/// a constant unless shadowed by a variable.
///
/// Expressions are immutable; copies share the tree and evaluation is
/// reentrant.
class Expr {
 public:
  struct Node;

  Expr() = default;

  static Expr parse(std::string_view text, std::vector<std::string> vars);
  static Expr constant(double value, std::vector<std::string> vars = {});

  double eval(std::span<const double> point) const;
  double operator()(std::initializer_list<double> point) const {
    return eval(std::span<const double>(point.begin(), point.size()));
  }

  /// Symbolic derivative. Literal arithmetic is folded and additive or
  /// multiplicative identities are dropped; nothing else is simplified.
  Expr derive(std::string_view var) const;
  Expr derive(std::size_t var_index) const;

  /// Fully parenthesized text that parses back to an equivalent tree.
  std::string to_string() const;

  const std::vector<std::string>& vars() const noexcept { return vars_; }
  std::size_t arity() const noexcept { return vars_.size(); }
  bool empty() const noexcept { return root_ == nullptr; }

  /// True when the expression does not reference the variable.
  bool independent_of(std::size_t var_index) const;

 private:
  Expr(std::shared_ptr<const Node> root, std::vector<std::string> vars);
  void compile();

  std::shared_ptr<const Node> root_;
  std::vector<std::string> vars_;
  std::vector<detail::ExprInstr> program_;
  std::size_t max_depth_ = 0;
};

}  // namespace bolab
