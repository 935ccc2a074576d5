#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "ngcg/rng.hpp"

namespace ngcg {

// Fully-connected tanh network, float64 throughout.  Weights are row-major
// (out x in); layer l maps sizes[l] -> sizes[l+1]; the last layer is linear.
struct Mlp {
  std::vector<std::size_t> sizes;
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static Mlp make(const std::vector<std::size_t>& sizes, Rng& rng);

  std::size_t n_layers() const { return W.size(); }
  std::size_t in_dim() const { return sizes.front(); }
  std::size_t out_dim() const { return sizes.back(); }
  std::size_t n_params() const;

  // Batch forward: x is n x in_dim row-major, returns n x out_dim.
  std::vector<double> forward(std::span<const double> x, std::size_t n) const;
};

// Parameter-shaped gradient buffers.
struct MlpGrads {
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  static MlpGrads zeros_like(const Mlp& net);
  void scale(double s);
};

// Scratch space reused across forward/backward calls.
struct MlpWorkspace {
  std::vector<std::vector<double>> acts;    // activations per layer (incl. input)
  std::vector<std::vector<double>> deltas;  // back-propagated errors
};

// Forward pass that records activations for a following backward pass.
const std::vector<double>& forward_cached(const Mlp& net, std::span<const double> x,
                                          std::size_t n, MlpWorkspace& ws);

// Given dL/d(output) for the cached batch, accumulates parameter gradients.
void backward(const Mlp& net, const MlpWorkspace& ws, std::span<const double> grad_out,
              std::size_t n, MlpGrads& grads);

// One-step dynamics loss: mean over samples and components of the squared
// prediction error.  Returns the loss and fills parameter gradients.
double grad_dyn_loss(const Mlp& net, std::span<const double> x, std::span<const double> target,
                     std::size_t n, MlpGrads& grads, MlpWorkspace& ws);

// Variance-ratio loss over whole trajectories:
//   mean_i intra_var_i / (var_i(traj means) + eps) + lambda * ||params||^2.
// x holds n_traj trajectories of t_len points each, row-major.
double grad_phi_loss(const Mlp& net, std::span<const double> x, std::size_t n_traj,
                     std::size_t t_len, double eps, double lambda, MlpGrads& grads,
                     MlpWorkspace& ws);

struct AdamState {
  std::vector<std::vector<double>> mW, vW, mb, vb;
  std::size_t step = 0;

  static AdamState zeros_like(const Mlp& net);
};

// Standard Adam with bias correction (beta1 0.9, beta2 0.999, eps 1e-8).
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr);

// Learning-rate schedules (epoch in [0, max_epochs)).
double one_cycle_lr(std::size_t epoch, std::size_t max_epochs, double peak, double floor);
double cosine_lr(std::size_t epoch, std::size_t max_epochs, double base, double floor);

void save_mlp(const Mlp& net, const std::filesystem::path& dir);
Mlp load_mlp(const std::filesystem::path& dir);

}  // namespace ngcg
