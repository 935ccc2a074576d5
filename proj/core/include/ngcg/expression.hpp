#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ngcg {

enum class Op : std::uint8_t {
  Const,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Sq,
  Cube,
  Sqrt,
  Exp,
  Log,
  Sin,
  Cos,
};

int op_arity(Op op);
const char* op_name(Op op);

struct ExprNode {
  Op op = Op::Const;
  double value = 0.0;     // Const payload
  std::uint16_t var = 0;  // Var payload (0-based)
};

// Expression tree stored as a flat prefix-order array: the subtree rooted at
// index i occupies the contiguous range [i, subtree_end(i)).  That layout is
// what the genetic operators splice on.
struct Expression {
  std::vector<ExprNode> nodes;

  std::size_t complexity() const { return nodes.size(); }
  std::size_t subtree_end(std::size_t i) const;
  std::size_t depth() const;
  bool references_variable() const;
  bool well_formed(std::size_t n_vars) const;

  static Expression constant(double v);
  static Expression variable(std::size_t idx);
  static Expression unary(Op op, Expression a);
  static Expression binary(Op op, Expression a, Expression b);

  // Evaluates one sample (x = variable values).  Domain violations (division
  // by ~0, log/sqrt out of domain, overflow) yield non-finite values.
  double eval(std::span<const double> x) const;

  // Vectorized evaluation: X is n x n_vars row-major, out gets n values.
  void eval_batch(std::span<const double> X, std::size_t n, std::size_t n_vars,
                  std::span<double> out) const;

  std::string to_string() const;               // prefix s-expression, x1-based vars
  static Expression parse(const std::string&); // exact round trip of to_string
};

// a * expr + b, pruning the wrapper when it is the identity (and collapsing
// to a constant when a == 0).
Expression affine_wrap(const Expression& e, double a, double b);

inline constexpr double kDivGuard = 1e-12;

}  // namespace ngcg
