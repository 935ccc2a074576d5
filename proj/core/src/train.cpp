#include "ngcg/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ngcg {

Standardizer Standardizer::fit(const std::vector<const std::vector<double>*>& matrices,
                               std::size_t n_cols) {
  Standardizer s;
  s.mean.assign(n_cols, 0.0);
  s.std.assign(n_cols, 0.0);
  std::size_t n = 0;
  for (const auto* m : matrices) {
    for (std::size_t r = 0; r < m->size() / n_cols; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) s.mean[c] += (*m)[r * n_cols + c];
    n += m->size() / n_cols;
  }
  for (auto& v : s.mean) v /= static_cast<double>(n);
  for (const auto* m : matrices)
    for (std::size_t r = 0; r < m->size() / n_cols; ++r)
      for (std::size_t c = 0; c < n_cols; ++c) {
        double d = (*m)[r * n_cols + c] - s.mean[c];
        s.std[c] += d * d;
      }
  for (auto& v : s.std) v = std::max(std::sqrt(v / static_cast<double>(n)), 1e-12);
  return s;
}

void Standardizer::apply(std::span<const double> in, std::span<double> out) const {
  const std::size_t c = mean.size();
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::size_t col = i % c;
    out[i] = (in[i] - mean[col]) / std[col];
  }
}

double series_constancy(const std::vector<std::vector<double>>& series, double eps) {
  if (series.empty()) throw std::invalid_argument("series_constancy: empty input");
  double acc = 0.0;
  for (const auto& s : series) {
    if (s.size() < 2) throw std::invalid_argument("series_constancy: series too short");
    double m = 0.0;
    for (double v : s) m += v;
    m /= static_cast<double>(s.size());
    double var = 0.0;
    for (double v : s) var += (v - m) * (v - m);
    var /= static_cast<double>(s.size());
    acc += std::sqrt(var) / (std::abs(m) + eps);
  }
  return acc / static_cast<double>(series.size());
}

namespace {

struct DiscoveryCache {
  std::vector<std::vector<double>> mats;  // per trajectory, T x V
  std::size_t V = 0;
};

DiscoveryCache cache_discovery(const Dataset& ds) {
  DiscoveryCache c;
  c.V = discovery_dim(ds.system);
  c.mats.resize(ds.trajectories.size());
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
    c.mats[i] = discovery_matrix(ds, i);
  return c;
}

Standardizer fit_on_split(const DiscoveryCache& cache, const std::vector<std::size_t>& split) {
  std::vector<const std::vector<double>*> mats;
  for (auto i : split) mats.push_back(&cache.mats[i]);
  return Standardizer::fit(mats, cache.V);
}

std::vector<std::vector<double>> phi_series_on_split(const Mlp& net, const Standardizer& std_in,
                                                     const DiscoveryCache& cache,
                                                     const Dataset& ds,
                                                     const std::vector<std::size_t>& split) {
  std::vector<std::vector<double>> out;
  out.reserve(split.size());
  std::vector<double> z;
  for (auto idx : split) {
    const auto& m = cache.mats[idx];
    const std::size_t T = ds.trajectories[idx].T;
    z.resize(m.size());
    std_in.apply(m, z);
    out.push_back(net.forward(z, T));
  }
  return out;
}

}  // namespace

DynResult train_dynamics(const Dataset& ds, const DynConfig& cfg, std::uint64_t seed) {
  const auto& spec = system_spec(ds.system);
  DiscoveryCache cache = cache_discovery(ds);
  const std::size_t V = cache.V;
  const std::size_t D = spec.dim;

  auto train_idx = valid_subset(ds, ds.splits.train);
  auto val_idx = valid_subset(ds, ds.splits.val);
  if (train_idx.size() < 2 || val_idx.empty())
    throw std::runtime_error("train_dynamics: not enough valid trajectories");

  Standardizer std_in = fit_on_split(cache, train_idx);

  // One-step pairs: z(aug_t) -> z_state(x_{t+1}).
  std::vector<double> xs, ys;
  for (auto idx : train_idx) {
    const auto& m = cache.mats[idx];
    const auto& tr = ds.trajectories[idx];
    for (std::size_t t = 0; t + 1 < tr.T; ++t) {
      for (std::size_t c = 0; c < V; ++c)
        xs.push_back(std_in.apply_one(m[t * V + c], c));
      for (std::size_t d = 0; d < D; ++d)
        ys.push_back(std_in.apply_one(tr.at(t + 1, d), d));
    }
  }
  const std::size_t n_pairs = xs.size() / V;

  Rng winit = Rng::derive(seed, kTagWeights, 0);
  Mlp net = Mlp::make({V, cfg.hidden, cfg.hidden, D}, winit);
  AdamState adam = AdamState::zeros_like(net);
  MlpWorkspace ws;
  Rng batch_rng = Rng::derive(seed, kTagBatch, 0);

  std::vector<std::size_t> order(n_pairs);
  for (std::size_t i = 0; i < n_pairs; ++i) order[i] = i;

  auto val_mse_raw = [&]() {
    double acc = 0.0;
    std::size_t n = 0;
    std::vector<double> z;
    for (auto idx : val_idx) {
      const auto& m = cache.mats[idx];
      const auto& tr = ds.trajectories[idx];
      z.resize(m.size());
      std_in.apply(m, z);
      auto pred = net.forward(z, tr.T);
      for (std::size_t t = 0; t + 1 < tr.T; ++t)
        for (std::size_t d = 0; d < D; ++d) {
          double raw = std_in.invert_one(pred[t * D + d], d);
          double diff = raw - tr.at(t + 1, d);
          acc += diff * diff;
          ++n;
        }
    }
    return acc / static_cast<double>(n);
  };

  DynResult res;
  double best_val = std::numeric_limits<double>::infinity();
  Mlp best_net = net;
  std::size_t bad = 0;
  std::vector<double> bx(cfg.batch * V), by(cfg.batch * D);
  for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    double lr = one_cycle_lr(epoch, cfg.max_epochs, cfg.peak_lr, cfg.floor_lr);
    batch_rng.shuffle(order);
    for (std::size_t start = 0; start < n_pairs; start += cfg.batch) {
      std::size_t bn = std::min(cfg.batch, n_pairs - start);
      bx.resize(bn * V);
      by.resize(bn * D);
      for (std::size_t i = 0; i < bn; ++i) {
        std::size_t src = order[start + i];
        std::copy_n(xs.data() + src * V, V, bx.data() + i * V);
        std::copy_n(ys.data() + src * D, D, by.data() + i * D);
      }
      MlpGrads grads = MlpGrads::zeros_like(net);
      double loss = grad_dyn_loss(net, bx, by, bn, grads, ws);
      if (!std::isfinite(loss)) throw std::runtime_error("train_dynamics: loss diverged (NaN)");
      adam_step(net, grads, adam, lr);
    }
    res.epochs_run = epoch + 1;
    double v = val_mse_raw();
    if (v < best_val * (1.0 - 1e-9)) {
      best_val = v;
      best_net = net;
      bad = 0;
    } else if (++bad > cfg.patience) {
      break;
    }
  }

  res.net = std::move(best_net);
  res.input_std = std_in;
  res.val_mse = best_val;
  res.mse_at_16 = rollout_mse(res.net, res.input_std, ds, ds.splits.test, 16);
  return res;
}

double rollout_mse(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                   const std::vector<std::size_t>& split, std::size_t k_steps) {
  if (k_steps == 0) return 0.0;
  const auto& spec = system_spec(ds.system);
  const std::size_t D = spec.dim;
  const std::size_t V = discovery_dim(ds.system);
  double acc = 0.0;
  std::size_t n = 0;
  std::vector<double> state(D), aug(V), z(V);
  for (auto idx : valid_subset(ds, split)) {
    const auto& tr = ds.trajectories[idx];
    for (std::size_t t0 = 0; t0 + k_steps < tr.T; t0 += k_steps) {
      for (std::size_t d = 0; d < D; ++d) state[d] = tr.at(t0, d);
      for (std::size_t s = 1; s <= k_steps; ++s) {
        discovery_variables(ds.system, state, tr.params, aug);
        std_in.apply(aug, z);
        auto pred = net.forward(z, 1);
        for (std::size_t d = 0; d < D; ++d) state[d] = std_in.invert_one(pred[d], d);
        for (std::size_t d = 0; d < D; ++d) {
          double diff = state[d] - tr.at(t0 + s, d);
          acc += diff * diff;
          ++n;
        }
      }
    }
  }
  return n ? acc / static_cast<double>(n) : 0.0;
}

PhiResult train_phi_restarts(const Dataset& ds, std::size_t R, const PhiConfig& cfg,
                             std::uint64_t seed) {
  if (R < 1) throw std::invalid_argument("train_phi_restarts: R must be >= 1");
  const auto& spec = system_spec(ds.system);
  DiscoveryCache cache = cache_discovery(ds);
  const std::size_t V = cache.V;
  const std::size_t n_params = spec.param_ranges.size();
  const std::size_t param_lo = V - n_params;  // parameter columns live at the tail

  auto train_idx = valid_subset(ds, ds.splits.train);
  auto val_idx = valid_subset(ds, ds.splits.val);
  if (train_idx.size() < 2 || val_idx.empty())
    throw std::runtime_error("train_phi_restarts: not enough valid trajectories");

  Standardizer std_in = fit_on_split(cache, train_idx);

  // Pre-standardized train matrices.
  std::vector<std::vector<double>> ztrain(train_idx.size());
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    const auto& m = cache.mats[train_idx[i]];
    ztrain[i].resize(m.size());
    std_in.apply(m, ztrain[i]);
  }
  const std::size_t T = ds.T;
  const std::size_t tsub = std::min(cfg.t_subsample, T);

  PhiResult out;
  out.input_std = std_in;

  for (std::size_t r = 0; r < R; ++r) {
    Rng winit = Rng::derive(seed, kTagWeights, 1000 + r);
    Mlp net = Mlp::make({V, cfg.hidden, cfg.hidden, cfg.hidden, 1}, winit);
    AdamState adam = AdamState::zeros_like(net);
    MlpWorkspace ws;
    Rng rng = Rng::derive(seed, kTagRestart, r);

    std::vector<std::size_t> order(train_idx.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    double best_c = std::numeric_limits<double>::infinity();
    Mlp best_net = net;
    std::size_t bad = 0;
    std::vector<double> batch;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
      double lr = cosine_lr(epoch, cfg.max_epochs, cfg.base_lr, cfg.floor_lr);
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += cfg.batch_traj) {
        std::size_t bn = std::min(cfg.batch_traj, order.size() - start);
        if (bn < 2) continue;  // inter-trajectory variance undefined
        batch.resize(bn * tsub * V);
        for (std::size_t b = 0; b < bn; ++b) {
          const auto& zm = ztrain[order[start + b]];
          for (std::size_t s = 0; s < tsub; ++s) {
            std::size_t t = tsub == T ? s : static_cast<std::size_t>(rng.below(T));
            double* dst = batch.data() + (b * tsub + s) * V;
            std::copy_n(zm.data() + t * V, V, dst);
            // jitter breaks the trajectory-constant parameter shortcut
            for (std::size_t c = param_lo; c < V; ++c)
              dst[c] += cfg.param_jitter * rng.normal();
          }
        }
        MlpGrads grads = MlpGrads::zeros_like(net);
        double loss = grad_phi_loss(net, batch, bn, tsub, cfg.eps, cfg.lambda, grads, ws);
        if (!std::isfinite(loss)) {
          best_c = std::numeric_limits<double>::infinity();
          break;
        }
        adam_step(net, grads, adam, lr);
      }
      if (!std::isfinite(best_c) && epoch > 0) break;  // diverged

      auto val_series = phi_series_on_split(net, std_in, cache, ds, val_idx);
      double c = series_constancy(val_series);
      if (std::isfinite(c) && c < best_c * (1.0 - 1e-9)) {
        best_c = c;
        best_net = net;
        bad = 0;
      } else if (++bad > cfg.patience) {
        break;
      }
    }
    out.restarts.push_back({r, std::move(best_net), best_c});
  }

  out.best = 0;
  for (std::size_t r = 1; r < out.restarts.size(); ++r)
    if (out.restarts[r].val_constancy < out.restarts[out.best].val_constancy) out.best = r;
  if (!std::isfinite(out.restarts[out.best].val_constancy))
    throw std::runtime_error("train_phi_restarts: all restarts diverged");
  return out;
}

std::vector<double> phi_values(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                               std::size_t traj_idx) {
  auto m = discovery_matrix(ds, traj_idx);
  std::vector<double> z(m.size());
  std_in.apply(m, z);
  return net.forward(z, ds.trajectories[traj_idx].T);
}

}  // namespace ngcg
