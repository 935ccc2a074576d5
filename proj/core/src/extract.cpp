#include "ngcg/extract.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ngcg {

namespace {

void enumerate_exponents(std::size_t n_vars, std::size_t max_degree,
                         std::vector<std::uint8_t>& cur, std::size_t pos, std::size_t used,
                         std::vector<std::vector<std::uint8_t>>& out) {
  if (pos == n_vars) {
    if (used >= 1) out.push_back(cur);
    return;
  }
  for (std::size_t e = 0; e + used <= max_degree; ++e) {
    cur[pos] = static_cast<std::uint8_t>(e);
    enumerate_exponents(n_vars, max_degree, cur, pos + 1, used + e, out);
  }
  cur[pos] = 0;
}

}  // namespace

MonomialLibrary MonomialLibrary::build(std::size_t n_vars, std::size_t max_degree) {
  MonomialLibrary lib;
  lib.n_vars = n_vars;
  lib.max_degree = max_degree;
  std::vector<std::uint8_t> cur(n_vars, 0);
  enumerate_exponents(n_vars, max_degree, cur, 0, 0, lib.exponents);
  // graded lexicographic: sort by total degree, then lexicographic
  std::sort(lib.exponents.begin(), lib.exponents.end(),
            [](const auto& a, const auto& b) {
              std::size_t da = 0, db = 0;
              for (auto v : a) da += v;
              for (auto v : b) db += v;
              if (da != db) return da < db;
              return a > b;  // x1-major within a degree block
            });
  return lib;
}

std::vector<double> monomial_features(const std::vector<double>& traj_vars, std::size_t T,
                                      const MonomialLibrary& lib) {
  const std::size_t V = lib.n_vars;
  if (traj_vars.size() != T * V)
    throw std::invalid_argument("monomial_features: trajectory shape mismatch");
  const std::size_t M = lib.size();
  std::vector<double> out(T * M);
  for (std::size_t t = 0; t < T; ++t) {
    const double* x = traj_vars.data() + t * V;
    double* row = out.data() + t * M;
    for (std::size_t m = 0; m < M; ++m) {
      double acc = 1.0;
      const auto& e = lib.exponents[m];
      for (std::size_t v = 0; v < V; ++v) {
        switch (e[v]) {
          case 0: break;
          case 1: acc *= x[v]; break;
          case 2: acc *= x[v] * x[v]; break;
          case 3: acc *= x[v] * x[v] * x[v]; break;
          default: {
            double sq = x[v] * x[v];
            acc *= sq * sq;
            break;
          }
        }
      }
      row[m] = acc;
    }
    for (std::size_t m = 0; m < M; ++m)
      if (!std::isfinite(row[m]))
        throw std::domain_error("monomial_features: feature overflow, flag trajectory");
  }
  return out;
}

EigSystem jacobi_eigensystem(std::vector<double> C, std::size_t n) {
  // symmetry check
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(C[i * n + j] - C[j * n + i]) >
          1e-10 * (1.0 + std::abs(C[i * n + j]) + std::abs(C[j * n + i])))
        throw std::invalid_argument("jacobi_eigensystem: matrix not symmetric");

  std::vector<double> V(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) V[i * n + i] = 1.0;

  double norm = 0.0;
  for (double v : C) norm += v * v;
  norm = std::sqrt(norm);
  const double tol = 1e-12 * std::max(norm, 1e-300);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * C[p * n + q] * C[p * n + q];
    if (std::sqrt(off) < tol) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double apq = C[p * n + q];
        if (std::abs(apq) < tol / static_cast<double>(n)) continue;
        double app = C[p * n + p], aqq = C[q * n + q];
        double theta = 0.5 * (aqq - app) / apq;
        double t = (theta >= 0.0 ? 1.0 : -1.0) /
                   (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          double ckp = C[k * n + p], ckq = C[k * n + q];
          C[k * n + p] = c * ckp - s * ckq;
          C[k * n + q] = s * ckp + c * ckq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double cpk = C[p * n + k], cqk = C[q * n + k];
          C[p * n + k] = c * cpk - s * cqk;
          C[q * n + k] = s * cpk + c * cqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          double vkp = V[k * n + p], vkq = V[k * n + q];
          V[k * n + p] = c * vkp - s * vkq;
          V[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  EigSystem out;
  out.n = n;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return C[a * n + a] < C[b * n + b]; });
  out.values.resize(n);
  out.vectors.resize(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    out.values[j] = C[order[j] * n + order[j]];
    for (std::size_t i = 0; i < n; ++i) out.vectors[i * n + j] = V[i * n + order[j]];
  }
  return out;
}

std::pair<double, std::vector<double>> smallest_eigvec(const std::vector<double>& C,
                                                       std::size_t n) {
  EigSystem es = jacobi_eigensystem(C, n);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = es.vectors[i * n + 0];
  std::size_t arg = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs(w[i]) > std::abs(w[arg])) arg = i;
  if (w[arg] < 0.0)
    for (auto& v : w) v = -v;
  return {es.values[0], w};
}

Expression render_monomial_combo(const std::vector<double>& w,
                                 const std::vector<std::vector<std::uint8_t>>& exponents) {
  double wmax = 0.0;
  for (double v : w) wmax = std::max(wmax, std::abs(v));
  const double cut = 1e-6 * wmax;

  Expression out;
  bool have = false;
  for (std::size_t m = 0; m < w.size(); ++m) {
    if (std::abs(w[m]) <= cut) continue;
    Expression term;
    bool have_factor = false;
    for (std::size_t v = 0; v < exponents[m].size(); ++v) {
      for (int rep = 0; rep < exponents[m][v] % 2; ++rep) {
        Expression f = Expression::variable(v);
        term = have_factor ? Expression::binary(Op::Mul, std::move(term), std::move(f))
                           : std::move(f);
        have_factor = true;
      }
      for (int rep = 0; rep < exponents[m][v] / 2; ++rep) {
        Expression f = Expression::unary(Op::Sq, Expression::variable(v));
        term = have_factor ? Expression::binary(Op::Mul, std::move(term), std::move(f))
                           : std::move(f);
        have_factor = true;
      }
    }
    if (!have_factor) term = Expression::constant(1.0);
    term = Expression::binary(Op::Mul, Expression::constant(w[m]), std::move(term));
    out = have ? Expression::binary(Op::Add, std::move(out), std::move(term)) : std::move(term);
    have = true;
  }
  if (!have) out = Expression::constant(0.0);
  return out;
}

namespace {

struct FeatureBundle {
  std::vector<std::vector<double>> raw;       // per trajectory, T x M (kept columns)
  std::vector<std::vector<double>> centered;  // per trajectory, scaled
  std::vector<double> scale;                  // per kept column
  std::vector<std::size_t> kept;              // indices into the original basis
  std::size_t T = 0;
  std::size_t M = 0;
};

FeatureBundle bundle_features(const std::vector<std::vector<double>>& raw_all, std::size_t T,
                              std::size_t M_all) {
  const std::size_t N = raw_all.size();
  // per-trajectory centering
  std::vector<std::vector<double>> centered(N);
  std::vector<double> rms(M_all, 0.0), absmean(M_all, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    centered[i].resize(T * M_all);
    for (std::size_t m = 0; m < M_all; ++m) {
      double mean = 0.0;
      for (std::size_t t = 0; t < T; ++t) mean += raw_all[i][t * M_all + m];
      mean /= static_cast<double>(T);
      for (std::size_t t = 0; t < T; ++t) {
        double c = raw_all[i][t * M_all + m] - mean;
        centered[i][t * M_all + m] = c;
        rms[m] += c * c;
        absmean[m] += std::abs(raw_all[i][t * M_all + m]);
      }
    }
  }
  for (std::size_t m = 0; m < M_all; ++m) {
    rms[m] = std::sqrt(rms[m] / static_cast<double>(N * T));
    absmean[m] /= static_cast<double>(N * T);
  }

  FeatureBundle fb;
  fb.T = T;
  for (std::size_t m = 0; m < M_all; ++m)
    if (rms[m] > 1e-14 * (1.0 + absmean[m])) fb.kept.push_back(m);
  fb.M = fb.kept.size();
  if (fb.M == 0) throw std::domain_error("lasso: degenerate feature matrix (all columns dead)");

  fb.raw.resize(N);
  fb.centered.resize(N);
  fb.scale.resize(fb.M);
  for (std::size_t k = 0; k < fb.M; ++k) fb.scale[k] = rms[fb.kept[k]];
  for (std::size_t i = 0; i < N; ++i) {
    fb.raw[i].resize(T * fb.M);
    fb.centered[i].resize(T * fb.M);
    for (std::size_t t = 0; t < T; ++t)
      for (std::size_t k = 0; k < fb.M; ++k) {
        fb.raw[i][t * fb.M + k] = raw_all[i][t * M_all + fb.kept[k]];
        fb.centered[i][t * fb.M + k] = centered[i][t * M_all + fb.kept[k]] / fb.scale[k];
      }
  }
  return fb;
}

// Minimum-variance eigenvector over the bundled features, skipping
// cancellation directions whose raw output scale collapses (the parameter
// annihilators that appear once features are noisy).
struct EigPick {
  std::vector<double> w;  // unscaled, unit norm, sign-fixed
  double lambda = 0.0;
  std::size_t index = 0;
};

EigPick min_variance_direction(const FeatureBundle& fb) {
  const std::size_t M = fb.M, T = fb.T;
  const std::size_t N = fb.centered.size();
  std::vector<double> C(M * M, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    const auto& P = fb.centered[i];
    for (std::size_t t = 0; t < T; ++t) {
      const double* row = P.data() + t * M;
      for (std::size_t a = 0; a < M; ++a) {
        double ra = row[a];
        if (ra == 0.0) continue;
        double* crow = C.data() + a * M;
        for (std::size_t b = a; b < M; ++b) crow[b] += ra * row[b];
      }
    }
  }
  for (std::size_t a = 0; a < M; ++a)
    for (std::size_t b = 0; b < a; ++b) C[a * M + b] = C[b * M + a];
  for (auto& v : C) v /= static_cast<double>(N);

  EigSystem es = jacobi_eigensystem(std::move(C), M);

  for (std::size_t j = 0; j < M; ++j) {
    std::vector<double> w(M);
    for (std::size_t i = 0; i < M; ++i) w[i] = es.vectors[i * M + j] / fb.scale[i];
    double nrm = 0.0;
    for (double v : w) nrm += v * v;
    nrm = std::sqrt(nrm);
    for (auto& v : w) v /= nrm;

    // output-scale ratio: candidate values vs term magnitudes
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const auto& R = fb.raw[i];
      for (std::size_t t = 0; t < T; ++t) {
        const double* row = R.data() + t * fb.M;
        double v = 0.0, mag = 0.0;
        for (std::size_t k = 0; k < fb.M; ++k) {
          v += row[k] * w[k];
          mag += std::abs(row[k] * w[k]);
        }
        num += v * v;
        den += mag * mag;
      }
    }
    if (den == 0.0 || std::sqrt(num / den) > 1e-2) {
      std::size_t arg = 0;
      for (std::size_t i = 1; i < M; ++i)
        if (std::abs(w[i]) > std::abs(w[arg])) arg = i;
      if (w[arg] < 0.0)
        for (auto& v : w) v = -v;
      // rescale eigenvalue to the unscaled normalization
      return {std::move(w), es.values[j], j};
    }
  }
  throw std::domain_error("lasso: no non-degenerate direction found");
}

}  // namespace

Candidate poly_lasso(const std::vector<const std::vector<double>*>& traj_vars, std::size_t T,
                     std::size_t n_vars, const MonomialLibrary& lib) {
  if (traj_vars.size() < 2) throw std::invalid_argument("poly_lasso: need >= 2 trajectories");
  std::vector<std::vector<double>> raw(traj_vars.size());
  for (std::size_t i = 0; i < traj_vars.size(); ++i)
    raw[i] = monomial_features(*traj_vars[i], T, lib);
  FeatureBundle fb = bundle_features(raw, T, lib.size());
  EigPick pick = min_variance_direction(fb);

  std::vector<std::vector<std::uint8_t>> kept_exps;
  for (auto k : fb.kept) kept_exps.push_back(lib.exponents[k]);

  Candidate cand;
  cand.expr = render_monomial_combo(pick.w, kept_exps);
  cand.source = "poly_lasso";
  cand.lambda_min = pick.lambda;
  return cand;
}

Candidate lv_lasso(const std::vector<const std::vector<double>*>& states, std::size_t T) {
  if (states.size() < 2) throw std::invalid_argument("lv_lasso: need >= 2 trajectories");
  std::vector<std::vector<double>> raw(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto& s = *states[i];
    if (s.size() != T * 2) throw std::invalid_argument("lv_lasso: expects 2-d states");
    raw[i].resize(T * 4);
    for (std::size_t t = 0; t < T; ++t) {
      double x = s[t * 2], y = s[t * 2 + 1];
      if (x <= 0.0 || y <= 0.0) throw std::domain_error("lv_lasso: non-positive state");
      raw[i][t * 4 + 0] = x;
      raw[i][t * 4 + 1] = y;
      raw[i][t * 4 + 2] = std::log(x + kLogEps);
      raw[i][t * 4 + 3] = std::log(y + kLogEps);
    }
  }
  FeatureBundle fb = bundle_features(raw, T, 4);
  if (fb.M != 4) throw std::domain_error("lv_lasso: degenerate basis (constant feature)");
  EigPick pick = min_variance_direction(fb);

  // w1 x + w2 y + w3 ln(x+eps) + w4 ln(y+eps), small terms pruned
  double wmax = 0.0;
  for (double v : pick.w) wmax = std::max(wmax, std::abs(v));
  Expression expr;
  bool have = false;
  for (std::size_t k = 0; k < 4; ++k) {
    if (std::abs(pick.w[k]) <= 1e-6 * wmax) continue;
    Expression base = k < 2 ? Expression::variable(k)
                            : Expression::unary(Op::Log,
                                                Expression::binary(Op::Add,
                                                                   Expression::variable(k - 2),
                                                                   Expression::constant(kLogEps)));
    Expression term = Expression::binary(Op::Mul, Expression::constant(pick.w[k]),
                                         std::move(base));
    expr = have ? Expression::binary(Op::Add, std::move(expr), std::move(term))
                : std::move(term);
    have = true;
  }

  Candidate cand;
  cand.expr = std::move(expr);
  cand.source = "lv_lasso";
  cand.lambda_min = pick.lambda;
  return cand;
}

std::vector<Candidate> explicit_pde_candidates(SystemId system) {
  if (system != SystemId::Burgers && system != SystemId::Ks)
    throw std::invalid_argument("explicit_pde_candidates: PDE systems only");
  Candidate cand;
  cand.expr = Expression::variable(0);  // the spatial-mean series
  cand.source = "explicit";
  return {cand};
}

PhiPairs sample_phi_pairs(const Mlp& net, const Standardizer& std_in, const Dataset& ds,
                          const std::vector<std::size_t>& traj_idx, std::size_t n,
                          std::uint64_t seed) {
  const std::size_t T = ds.T;
  const std::size_t V = discovery_dim(ds.system);
  const std::size_t total = traj_idx.size() * T;
  if (n == 0 || n > total) throw std::invalid_argument("sample_phi_pairs: n exceeds available points");

  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  Rng rng = Rng::derive(seed, kTagPhiPairs, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.below(total - i));
    std::swap(order[i], order[j]);
  }

  PhiPairs out;
  out.n = n;
  out.n_vars = V;
  out.X.resize(n * V);
  out.y.resize(n);

  // cache phi values per trajectory touched
  std::vector<std::vector<double>> aug(ds.trajectories.size());
  std::vector<std::vector<double>> phi(ds.trajectories.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t which = order[i] / T, t = order[i] % T;
    std::size_t tr = traj_idx[which];
    if (aug[tr].empty()) {
      aug[tr] = discovery_matrix(ds, tr);
      phi[tr] = phi_values(net, std_in, ds, tr);
    }
    std::copy_n(aug[tr].data() + t * V, V, out.X.data() + i * V);
    out.y[i] = phi[tr][t];
  }
  return out;
}

}  // namespace ngcg
