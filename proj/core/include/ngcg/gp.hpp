#pragma once

#include <cstdint>
#include <vector>

#include "ngcg/expression.hpp"
#include "ngcg/rng.hpp"

namespace ngcg {

// Island-model genetic programming in the style of mainstream symbolic
// regression engines: `iterations` outer rounds, each running
// `cycles_per_iteration` steady-state tournaments on every island of
// `population` individuals, with ring migration and one fresh immigrant per
// island per round.
struct GpConfig {
  std::size_t iterations = 50;
  std::size_t population = 15;
  std::size_t islands = 6;
  std::size_t cycles_per_iteration = 100;
  std::size_t tournament = 3;
  double p_crossover = 0.7;
  double p_subtree_mut = 0.2;
  double p_point_mut = 0.1;
  std::size_t max_depth = 8;
  double complexity_weight = 0.001;  // fitness = mse * (1 + w * complexity)
  std::size_t fit_subsample = 1024;  // samples used during evolution
  std::size_t max_complexity = 48;   // hall-of-fame width
};

struct GpEntry {
  Expression expr;   // affine-calibrated against the target
  double mse = 0.0;  // on the full sample set
  std::size_t complexity = 0;
};

// Evolves expressions fitting y ~ f(x).  X is n x n_vars row-major.  Fitness
// is affine-calibrated mean squared error times a complexity penalty; domain
// violations make a candidate infinitely unfit.  seeds are injected into the
// initial populations (linear-combination candidates from the convex stage).
// Returns the Pareto front of the per-complexity hall of fame, sorted by
// complexity, MSE strictly decreasing.
std::vector<GpEntry> gp_symreg(const std::vector<double>& X, const std::vector<double>& y,
                               std::size_t n_vars, const GpConfig& cfg, std::uint64_t seed,
                               const std::vector<Expression>& seeds = {});

}  // namespace ngcg
