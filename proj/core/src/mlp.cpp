#include "ngcg/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "ngcg/container.hpp"

namespace ngcg {

namespace {

// out[n x m] = x[n x k] * W^T  (W is m x k row-major), plus bias.
// Four output neurons at a time share each loaded input row.
void affine(std::span<const double> x, std::size_t n, std::size_t k,
            const std::vector<double>& W, const std::vector<double>& b, std::size_t m,
            std::vector<double>& out) {
  out.resize(n * m);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const double* __restrict x0 = x.data() + i * k;
    const double* __restrict x1 = x0 + k;
    double* __restrict o0 = out.data() + i * m;
    double* __restrict o1 = o0 + m;
    std::size_t j = 0;
    for (; j + 4 <= m; j += 4) {
      const double* __restrict w0 = W.data() + j * k;
      const double* __restrict w1 = w0 + k;
      const double* __restrict w2 = w1 + k;
      const double* __restrict w3 = w2 + k;
      double a00 = b[j], a01 = b[j + 1], a02 = b[j + 2], a03 = b[j + 3];
      double a10 = a00, a11 = a01, a12 = a02, a13 = a03;
      for (std::size_t l = 0; l < k; ++l) {
        double v0 = x0[l], v1 = x1[l];
        a00 += v0 * w0[l];
        a01 += v0 * w1[l];
        a02 += v0 * w2[l];
        a03 += v0 * w3[l];
        a10 += v1 * w0[l];
        a11 += v1 * w1[l];
        a12 += v1 * w2[l];
        a13 += v1 * w3[l];
      }
      o0[j] = a00;
      o0[j + 1] = a01;
      o0[j + 2] = a02;
      o0[j + 3] = a03;
      o1[j] = a10;
      o1[j + 1] = a11;
      o1[j + 2] = a12;
      o1[j + 3] = a13;
    }
    for (; j < m; ++j) {
      const double* __restrict wj = W.data() + j * k;
      double a0 = b[j], a1 = b[j];
      for (std::size_t l = 0; l < k; ++l) {
        a0 += x0[l] * wj[l];
        a1 += x1[l] * wj[l];
      }
      o0[j] = a0;
      o1[j] = a1;
    }
  }
  for (; i < n; ++i) {
    const double* __restrict xi = x.data() + i * k;
    double* __restrict oi = out.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* __restrict wj = W.data() + j * k;
      double acc = b[j];
      for (std::size_t l = 0; l < k; ++l) acc += xi[l] * wj[l];
      oi[j] = acc;
    }
  }
}

void tanh_inplace(std::vector<double>& v) {
  for (auto& x : v) x = std::tanh(x);
}

}  // namespace

Mlp Mlp::make(const std::vector<std::size_t>& sizes, Rng& rng) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp: need at least one layer");
  Mlp net;
  net.sizes = sizes;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    std::size_t in = sizes[l], out = sizes[l + 1];
    std::vector<double> W(out * in);
    double s = 1.0 / std::sqrt(static_cast<double>(in));
    for (auto& w : W) w = rng.uniform(-s, s);
    net.W.push_back(std::move(W));
    net.b.emplace_back(out, 0.0);
  }
  return net;
}

std::size_t Mlp::n_params() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < W.size(); ++l) n += W[l].size() + b[l].size();
  return n;
}

std::vector<double> Mlp::forward(std::span<const double> x, std::size_t n) const {
  if (x.size() != n * in_dim()) throw std::invalid_argument("Mlp::forward: shape mismatch");
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next;
  for (std::size_t l = 0; l < W.size(); ++l) {
    affine(cur, n, sizes[l], W[l], b[l], sizes[l + 1], next);
    if (l + 1 < W.size()) tanh_inplace(next);
    cur.swap(next);
  }
  return cur;
}

MlpGrads MlpGrads::zeros_like(const Mlp& net) {
  MlpGrads g;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    g.W.emplace_back(net.W[l].size(), 0.0);
    g.b.emplace_back(net.b[l].size(), 0.0);
  }
  return g;
}

void MlpGrads::scale(double s) {
  for (auto& w : W)
    for (auto& v : w) v *= s;
  for (auto& b_ : b)
    for (auto& v : b_) v *= s;
}

const std::vector<double>& forward_cached(const Mlp& net, std::span<const double> x,
                                          std::size_t n, MlpWorkspace& ws) {
  if (x.size() != n * net.in_dim()) throw std::invalid_argument("forward_cached: shape mismatch");
  ws.acts.resize(net.n_layers() + 1);
  ws.acts[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < net.n_layers(); ++l) {
    affine(ws.acts[l], n, net.sizes[l], net.W[l], net.b[l], net.sizes[l + 1], ws.acts[l + 1]);
    if (l + 1 < net.n_layers()) tanh_inplace(ws.acts[l + 1]);
  }
  return ws.acts.back();
}

void backward(const Mlp& net, const MlpWorkspace& ws_in, std::span<const double> grad_out,
              std::size_t n, MlpGrads& grads) {
  auto& ws = const_cast<MlpWorkspace&>(ws_in);
  const std::size_t L = net.n_layers();
  ws.deltas.resize(L);
  ws.deltas[L - 1].assign(grad_out.begin(), grad_out.end());

  for (std::size_t l = L; l-- > 0;) {
    const std::size_t in = net.sizes[l], out = net.sizes[l + 1];
    const auto& delta = ws.deltas[l];
    const auto& act = ws.acts[l];

    auto& gW = grads.W[l];
    auto& gb = grads.b[l];
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
      const double* __restrict d0 = delta.data() + i * out;
      const double* __restrict d1 = d0 + out;
      const double* __restrict a0 = act.data() + i * in;
      const double* __restrict a1 = a0 + in;
      for (std::size_t j = 0; j < out; ++j) {
        double dj0 = d0[j], dj1 = d1[j];
        gb[j] += dj0 + dj1;
        double* __restrict gwj = gW.data() + j * in;
        for (std::size_t k = 0; k < in; ++k) gwj[k] += dj0 * a0[k] + dj1 * a1[k];
      }
    }
    for (; i < n; ++i) {
      const double* __restrict di = delta.data() + i * out;
      const double* __restrict ai = act.data() + i * in;
      for (std::size_t j = 0; j < out; ++j) {
        double dj = di[j];
        gb[j] += dj;
        double* __restrict gwj = gW.data() + j * in;
        for (std::size_t k = 0; k < in; ++k) gwj[k] += dj * ai[k];
      }
    }

    if (l == 0) break;
    auto& prev = ws.deltas[l - 1];
    prev.assign(n * in, 0.0);
    for (std::size_t i2 = 0; i2 < n; ++i2) {
      const double* __restrict di = delta.data() + i2 * out;
      double* __restrict pi = prev.data() + i2 * in;
      std::size_t j = 0;
      for (; j + 4 <= out; j += 4) {
        double d0 = di[j], d1 = di[j + 1], d2 = di[j + 2], d3 = di[j + 3];
        const double* __restrict w0 = net.W[l].data() + j * in;
        const double* __restrict w1 = w0 + in;
        const double* __restrict w2 = w1 + in;
        const double* __restrict w3 = w2 + in;
        for (std::size_t k = 0; k < in; ++k)
          pi[k] += d0 * w0[k] + d1 * w1[k] + d2 * w2[k] + d3 * w3[k];
      }
      for (; j < out; ++j) {
        double dj = di[j];
        const double* __restrict wj = net.W[l].data() + j * in;
        for (std::size_t k = 0; k < in; ++k) pi[k] += dj * wj[k];
      }
      const double* __restrict ai = act.data() + i2 * in;
      for (std::size_t k = 0; k < in; ++k) pi[k] *= 1.0 - ai[k] * ai[k];  // tanh'
    }
  }
}

double grad_dyn_loss(const Mlp& net, std::span<const double> x, std::span<const double> target,
                     std::size_t n, MlpGrads& grads, MlpWorkspace& ws) {
  const std::size_t out = net.out_dim();
  if (target.size() != n * out) throw std::invalid_argument("grad_dyn_loss: target shape");
  const auto& pred = forward_cached(net, x, n, ws);

  double loss = 0.0;
  std::vector<double> grad_out(n * out);
  const double scale = 1.0 / static_cast<double>(n * out);
  for (std::size_t i = 0; i < n * out; ++i) {
    double d = pred[i] - target[i];
    loss += d * d;
    grad_out[i] = 2.0 * d * scale;
  }
  loss *= scale;
  backward(net, ws, grad_out, n, grads);
  return loss;
}

double grad_phi_loss(const Mlp& net, std::span<const double> x, std::size_t n_traj,
                     std::size_t t_len, double eps, double lambda, MlpGrads& grads,
                     MlpWorkspace& ws) {
  if (net.out_dim() != 1) throw std::invalid_argument("grad_phi_loss: scalar output required");
  if (n_traj < 2) throw std::invalid_argument("grad_phi_loss: need at least two trajectories");
  const std::size_t n = n_traj * t_len;
  const auto& o = forward_cached(net, x, n, ws);

  std::vector<double> traj_mean(n_traj, 0.0);
  for (std::size_t i = 0; i < n_traj; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) s += o[i * t_len + t];
    traj_mean[i] = s / static_cast<double>(t_len);
  }
  double mean_of_means = 0.0;
  for (double m : traj_mean) mean_of_means += m;
  mean_of_means /= static_cast<double>(n_traj);

  double intra = 0.0;  // mean over trajectories of within-trajectory variance
  for (std::size_t i = 0; i < n_traj; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < t_len; ++t) {
      double d = o[i * t_len + t] - traj_mean[i];
      s += d * d;
    }
    intra += s / static_cast<double>(t_len);
  }
  intra /= static_cast<double>(n_traj);

  double inter = 0.0;  // variance of the per-trajectory means
  for (double m : traj_mean) inter += (m - mean_of_means) * (m - mean_of_means);
  inter /= static_cast<double>(n_traj);

  const double den = inter + eps;
  const double ratio = intra / den;

  // d(intra)/do_it = 2 (o_it - mean_i) / (B T); d(inter)/do_it = 2 (mean_i - mmean) / (B T).
  std::vector<double> grad_out(n);
  const double c = 2.0 / static_cast<double>(n_traj * t_len);
  for (std::size_t i = 0; i < n_traj; ++i) {
    double dm = c * (traj_mean[i] - mean_of_means);
    for (std::size_t t = 0; t < t_len; ++t) {
      double d_intra = c * (o[i * t_len + t] - traj_mean[i]);
      grad_out[i * t_len + t] = (d_intra * den - intra * dm) / (den * den);
    }
  }
  backward(net, ws, grad_out, n, grads);

  double reg = 0.0;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    for (std::size_t k = 0; k < net.W[l].size(); ++k) {
      reg += net.W[l][k] * net.W[l][k];
      grads.W[l][k] += 2.0 * lambda * net.W[l][k];
    }
    for (std::size_t k = 0; k < net.b[l].size(); ++k) {
      reg += net.b[l][k] * net.b[l][k];
      grads.b[l][k] += 2.0 * lambda * net.b[l][k];
    }
  }
  return ratio + lambda * reg;
}

AdamState AdamState::zeros_like(const Mlp& net) {
  AdamState s;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    s.mW.emplace_back(net.W[l].size(), 0.0);
    s.vW.emplace_back(net.W[l].size(), 0.0);
    s.mb.emplace_back(net.b[l].size(), 0.0);
    s.vb.emplace_back(net.b[l].size(), 0.0);
  }
  return s;
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state, double lr) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  };
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    update(net.W[l], grads.W[l], state.mW[l], state.vW[l]);
    update(net.b[l], grads.b[l], state.mb[l], state.vb[l]);
  }
}

double one_cycle_lr(std::size_t epoch, std::size_t max_epochs, double peak, double floor) {
  const double warm = 0.3 * static_cast<double>(max_epochs);
  double e = static_cast<double>(epoch);
  if (e < warm) return peak * (e + 1.0) / warm;
  double frac = (e - warm) / (static_cast<double>(max_epochs) - warm);
  return floor + 0.5 * (peak - floor) * (1.0 + std::cos(3.14159265358979324 * frac));
}

double cosine_lr(std::size_t epoch, std::size_t max_epochs, double base, double floor) {
  double frac = static_cast<double>(epoch) / static_cast<double>(max_epochs);
  return floor + 0.5 * (base - floor) * (1.0 + std::cos(3.14159265358979324 * frac));
}

void save_mlp(const Mlp& net, const std::filesystem::path& dir) {
  ContainerWriter w(dir, "model");
  w.meta()["sizes"] = net.sizes;
  for (std::size_t l = 0; l < net.W.size(); ++l) {
    w.add_f64("W" + std::to_string(l), net.W[l], {net.sizes[l + 1], net.sizes[l]});
    w.add_f64("b" + std::to_string(l), net.b[l], {net.sizes[l + 1]});
  }
  w.finish();
}

Mlp load_mlp(const std::filesystem::path& dir) {
  ContainerReader r(dir);
  if (r.kind() != "model") throw std::runtime_error("container is not a model");
  Mlp net;
  net.sizes = r.meta().at("sizes").get<std::vector<std::size_t>>();
  for (std::size_t l = 0; l + 1 < net.sizes.size(); ++l) {
    net.W.push_back(r.read_f64("W" + std::to_string(l)));
    net.b.push_back(r.read_f64("b" + std::to_string(l)));
  }
  return net;
}

}  // namespace ngcg
