#pragma once

#include <cstdint>
#include <vector>

#include "ngcg/dataset.hpp"
#include "ngcg/mlp.hpp"

namespace ngcg {

// Per-dimension z-scoring fitted on train-split statistics.
struct Standardizer {
  std::vector<double> mean, std;

  static Standardizer fit(const std::vector<const std::vector<double>*>& matrices,
                          std::size_t n_cols);
  void apply(std::span<const double> in, std::span<double> out) const;
  double apply_one(double v, std::size_t col) const { return (v - mean[col]) / std[col]; }
  double invert_one(double v, std::size_t col) const { return v * std[col] + mean[col]; }
};

struct DynConfig {
  std::size_t hidden = 256;
  std::size_t max_epochs = 60;
  std::size_t batch = 256;
  double peak_lr = 1e-3;
  double floor_lr = 1e-5;
  std::size_t patience = 10;
};

struct PhiConfig {
  std::size_t hidden = 64;
  std::size_t max_epochs = 300;
  std::size_t batch_traj = 32;
  std::size_t t_subsample = 64;  // time points per trajectory per step
  double base_lr = 3e-3;
  double floor_lr = 1e-5;
  std::size_t patience = 20;
  double eps = 1e-4;      // variance-ratio denominator floor
  double lambda = 1e-4;   // L2 weight
  double param_jitter = 0.15;  // z-scored jitter on parameter inputs
};

struct DynResult {
  Mlp net;
  Standardizer input_std;
  double val_mse = 0.0;    // one-step MSE, raw units
  double mse_at_16 = 0.0;  // 16-step rollout MSE on the test split, raw units
  std::size_t epochs_run = 0;
};

struct RestartResult {
  std::size_t restart = 0;
  Mlp net;
  double val_constancy = 0.0;
};

struct PhiResult {
  std::vector<RestartResult> restarts;
  std::size_t best = 0;
  Standardizer input_std;

  const Mlp& best_net() const { return restarts[best].net; }
  double best_constancy() const { return restarts[best].val_constancy; }
};

// Stage 1: frozen dynamics model over discovery variables -> next state.
DynResult train_dynamics(const Dataset& ds, const DynConfig& cfg, std::uint64_t seed);

// Stage 2: R independent restarts of the variance minimiser, early-stopped
// and selected on validation constancy (ties -> lowest restart index).
PhiResult train_phi_restarts(const Dataset& ds, std::size_t R, const PhiConfig& cfg,
                             std::uint64_t seed);

// phi outputs along one trajectory (raw states in, scalar series out).
std::vector<double> phi_values(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                               std::size_t traj_idx);

// k-step autoregressive rollout MSE on the given split (raw units).
double rollout_mse(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                   const std::vector<std::size_t>& split, std::size_t k_steps);

// Mean over trajectories of std_t / (|mean_t| + eps); shared metric helper.
double series_constancy(const std::vector<std::vector<double>>& series, double eps = 1e-8);

}  // namespace ngcg
