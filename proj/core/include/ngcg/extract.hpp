#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ngcg/dataset.hpp"
#include "ngcg/expression.hpp"
#include "ngcg/mlp.hpp"
#include "ngcg/train.hpp"

namespace ngcg {

// Monomials over the discovery variables, graded lexicographic, degrees 1..4
// (the constant monomial vanishes under per-trajectory centering).
struct MonomialLibrary {
  std::size_t n_vars = 0;
  std::size_t max_degree = 4;
  std::vector<std::vector<std::uint8_t>> exponents;

  static MonomialLibrary build(std::size_t n_vars, std::size_t max_degree = 4);
  std::size_t size() const { return exponents.size(); }
};

// Raw (uncentered) T x M monomial feature matrix for one trajectory.
std::vector<double> monomial_features(const std::vector<double>& traj_vars, std::size_t T,
                                      const MonomialLibrary& lib);

struct EigSystem {
  std::size_t n = 0;
  std::vector<double> values;   // ascending
  std::vector<double> vectors;  // column j (n entries, stride n) pairs with values[j]
};

// Cyclic Jacobi rotations until the off-diagonal Frobenius norm drops below
// 1e-12 of the matrix norm.  Input must be symmetric.
EigSystem jacobi_eigensystem(std::vector<double> C, std::size_t n);

// Smallest eigenpair; sign fixed so the largest-magnitude component is
// positive.
std::pair<double, std::vector<double>> smallest_eigvec(const std::vector<double>& C,
                                                       std::size_t n);

struct Candidate {
  Expression expr;
  std::string source;  // poly_lasso | lv_lasso | explicit | gp
  double lambda_min = 0.0;
  double gp_mse = 0.0;
  double test_constancy = 0.0;
  double diversity_rho = 0.0;
  bool accepted = false;
  std::string reason;   // rejection reason, empty when accepted
  std::string verdict;  // true_discovery | spurious (accepted candidates only)
};

// Minimum-variance linear combination of the monomial library over centered,
// column-standardized per-trajectory features.  Eigenvectors are scanned in
// ascending eigenvalue order and near-cancelling combinations (parameter-span
// annihilators with negligible output scale) are skipped.
Candidate poly_lasso(const std::vector<const std::vector<double>*>& traj_vars, std::size_t T,
                     std::size_t n_vars, const MonomialLibrary& lib);

// Same eigenproblem over the 4-function basis {x, y, ln(x+eps), ln(y+eps)}
// on raw two-dimensional states (strictly positive).
Candidate lv_lasso(const std::vector<const std::vector<double>*>& states, std::size_t T);

// The spatial-mean series is variable 1 of the reduced PDE state.
std::vector<Candidate> explicit_pde_candidates(SystemId system);

struct PhiPairs {
  std::vector<double> X;  // n x n_vars raw discovery variables
  std::vector<double> y;  // phi outputs
  std::size_t n = 0;
  std::size_t n_vars = 0;
};

// Uniform sample (without replacement) of (trajectory, time) points from the
// given trajectories, with the phi network's outputs.
PhiPairs sample_phi_pairs(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                          const std::vector<std::size_t>& traj_idx, std::size_t n,
                          std::uint64_t seed);

// Renders w . monomials into an AST, pruning coefficients below 1e-6 * |w|_inf.
Expression render_monomial_combo(const std::vector<double>& w,
                                 const std::vector<std::vector<std::uint8_t>>& exponents);

}  // namespace ngcg
