#pragma once

#include <vector>

#include "ngcg/dataset.hpp"
#include "ngcg/extract.hpp"

namespace ngcg {

// Mean over trajectories of std_t / (|mean_t| + eps), population std.
double constancy(const std::vector<std::vector<double>>& values_per_traj, double eps = 1e-8);

// Std over trajectories of the per-trajectory means, divided by the mean
// within-trajectory std (population statistics).
double diversity_rho(const std::vector<std::vector<double>>& values_per_traj,
                     double eps = 1e-8);

struct GateConfig {
  double tau = 0.01;       // strict constancy gate
  double rho_min = 10.0;   // diversity threshold
  double eps = 1e-8;
  double max_invalid_frac = 0.01;   // candidate evaluation failures tolerated
  std::size_t pde_complexity_cap = 6;  // simplicity rule for reduced PDE systems
};

// Evaluates every candidate on the test trajectories and applies the strict
// constancy gate plus the diversity filter.  Rejections carry reasons; the
// returned indices point at accepted candidates.
std::vector<std::size_t> apply_gate(std::vector<Candidate>& cands, const Dataset& ds,
                                    const std::vector<std::size_t>& test_idx,
                                    const GateConfig& cfg);

// Scores accepted candidates against the ground truth.  On systems without a
// true law every accepted candidate is spurious.  On true-law systems a
// candidate counts as a true discovery when its per-trajectory levels track
// the true invariant: |Spearman| >= 0.95, or consistency under fresh
// trajectories resampled at the same invariant level and parameters (true
// conserved quantities may be arbitrary monotone or parameter-scaled
// transforms, which rank correlation alone misclassifies).
void adjudicate(std::vector<Candidate>& cands, const std::vector<std::size_t>& accepted,
                const Dataset& ds, const std::vector<std::size_t>& test_idx,
                std::uint64_t seed);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace ngcg
