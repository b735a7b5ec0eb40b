#pragma once

#include "toricbern/numeric.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace toricbern {

/// Immutable real-valued expression over x1..xm.
///
/// Grammar (lowest to highest precedence):
///   sum     := product (('+' | '-') product)*
///   product := unary (('*' | '/') unary)*
///   unary   := ('-' | '+') unary | power
///   power   := primary ('^' unary)?          right-associative
///   primary := number | xK | pi | e | fn '(' sum ')' | '(' sum ')'
/// with fn in {sin, cos, exp, log, sqrt, tanh}.
///
/// Nodes are shared and never mutated, so copies are cheap and evaluation is
/// reentrant.
class Expr {
public:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp, Log, Sqrt, Tanh };

  /// Throws SyntaxError (with byte offset), UnknownIdentifier, VariableOutOfRange.
  static Expr parse(std::string_view text, int dim);
  static Expr constant(double value, int dim);
  /// Variable x_{index+1} (zero-based index).
  static Expr variable(int index, int dim);

  int dim() const noexcept { return dim_; }
  Op op() const noexcept;
  bool is_constant() const noexcept { return op() == Op::Const; }
  bool is_zero() const noexcept;

  /// Throws DomainError (log/sqrt outside domain, division by zero, non-integer
  /// power of a negative base) and DimensionMismatch.
  double eval(std::span<const double> x) const;
  double operator()(const Vec& x) const { return eval(std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))); }

  /// Exact symbolic partial derivative d/dx_{var+1} with constant folding and
  /// 0/1 elimination.
  Expr derivative(int var) const;

  /// Fully parenthesized where needed; parse(to_string()) reproduces the tree.
  std::string to_string() const;

  struct Node;

private:
  Expr(std::shared_ptr<const Node> root, int dim) : root_(std::move(root)), dim_(dim) {}

  std::shared_ptr<const Node> root_;
  int dim_ = 1;
};

}  // namespace toricbern
