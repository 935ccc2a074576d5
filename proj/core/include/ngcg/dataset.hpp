#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ngcg/systems.hpp"

namespace ngcg {

// States are stored as float32 (the container dtype); all math downstream
// promotes to double.  Parameters and initial conditions are quantized to
// float32 at sampling time so stored trajectories conserve the float32-exact
// invariant of their own parameters.
struct Trajectory {
  std::size_t traj_id = 0;
  std::size_t T = 0;
  std::size_t dim = 0;
  std::vector<float> states;  // T x dim row-major
  ParamSet params;

  double at(std::size_t t, std::size_t d) const {
    return static_cast<double>(states[t * dim + d]);
  }
  std::vector<double> row(std::size_t t) const {
    std::vector<double> out(dim);
    for (std::size_t d = 0; d < dim; ++d) out[d] = at(t, d);
    return out;
  }
};

struct Splits {
  std::vector<std::size_t> train, val, test;
};

struct Dataset {
  SystemId system;
  std::vector<Trajectory> trajectories;
  std::vector<float> times;
  Splits splits;
  std::uint64_t seed = 0;
  double noise_sigma = 0.0;
  std::size_t T = 0;
  std::size_t dim = 0;

  const Trajectory& traj(std::size_t idx) const { return trajectories[idx]; }
};

struct MomentSeries {
  std::vector<double> mean, variance, skewness;
};

struct GenerateOptions {
  std::size_t n_traj = 0;  // 0 -> system default
  std::size_t T = 0;       // 0 -> system default
};

// Generates the full dataset: trajectories (parallel-safe derived seeds),
// PDE moment reduction, shuffled 70/15/15 splits.
Dataset generate(SystemId system, std::uint64_t seed, const GenerateOptions& opts = {});

// Population spatial moments of a field history (n_t x n_x row-major).
MomentSeries reduce_moments(std::span<const double> field_history, std::size_t n_t,
                            std::size_t n_x);

// Adds iid N(0, sigma^2) to every state entry; splits/params/times unchanged.
Dataset add_noise(const Dataset& ds, double sigma, std::uint64_t seed);

// Keeps the first n (shuffled) train indices; val/test untouched.
Dataset subsample_train(const Dataset& ds, std::size_t n);

void save(const Dataset& ds, const std::filesystem::path& dir);
Dataset load(const std::filesystem::path& dir);

// T x V matrix of discovery variables (state, log companions, params) for one
// trajectory.  Log companions are floored at ln(eps), never NaN.
std::vector<double> discovery_matrix(const Dataset& ds, std::size_t traj_idx);

// Fraction of time points violating the feature domain (non-finite state, or
// non-positive state where logs are taken).  Trajectories pushed out of the
// domain by noise are flagged and excluded from extraction and training.
double invalid_fraction(const Dataset& ds, std::size_t traj_idx);

std::vector<std::size_t> valid_subset(const Dataset& ds, const std::vector<std::size_t>& idx,
                                      double max_invalid_frac = 0.0);

}  // namespace ngcg
