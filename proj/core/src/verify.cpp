#include "ngcg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "ngcg/integrate.hpp"

namespace ngcg {

namespace {

struct SeriesStats {
  double mean = 0.0;
  double stddev = 0.0;
};

SeriesStats stats(const std::vector<double>& s) {
  SeriesStats st;
  for (double v : s) st.mean += v;
  st.mean /= static_cast<double>(s.size());
  double var = 0.0;
  for (double v : s) var += (v - st.mean) * (v - st.mean);
  st.stddev = std::sqrt(var / static_cast<double>(s.size()));
  return st;
}

}  // namespace

double constancy(const std::vector<std::vector<double>>& values_per_traj, double eps) {
  if (values_per_traj.empty()) throw std::invalid_argument("constancy: empty input");
  double acc = 0.0;
  for (const auto& s : values_per_traj) {
    if (s.size() < 2) throw std::invalid_argument("constancy: series too short");
    SeriesStats st = stats(s);
    acc += st.stddev / (std::abs(st.mean) + eps);
  }
  return acc / static_cast<double>(values_per_traj.size());
}

double diversity_rho(const std::vector<std::vector<double>>& values_per_traj, double eps) {
  if (values_per_traj.size() < 2)
    throw std::invalid_argument("diversity_rho: need >= 2 trajectories");
  std::vector<double> means;
  double mean_std = 0.0;
  for (const auto& s : values_per_traj) {
    SeriesStats st = stats(s);
    means.push_back(st.mean);
    mean_std += st.stddev;
  }
  mean_std /= static_cast<double>(values_per_traj.size());
  SeriesStats ms = stats(means);
  return ms.stddev / (mean_std + eps);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n != b.size() || n < 2) throw std::invalid_argument("spearman: bad input");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
      return v[i] < v[j];
    });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) r[order[i]] = static_cast<double>(i);
    return r;
  };
  auto ra = ranks(a), rb = ranks(b);
  SeriesStats sa = stats(ra), sb = stats(rb);
  double cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) cov += (ra[i] - sa.mean) * (rb[i] - sb.mean);
  cov /= static_cast<double>(n);
  double den = sa.stddev * sb.stddev;
  return den > 0.0 ? cov / den : 0.0;
}

namespace {

// Candidate values along one trajectory's discovery variables; counts
// non-finite evaluations.
std::vector<double> candidate_series(const Candidate& cand, const Dataset& ds, std::size_t idx,
                                     std::size_t& n_invalid) {
  auto vars = discovery_matrix(ds, idx);
  const std::size_t V = discovery_dim(ds.system);
  const std::size_t T = ds.trajectories[idx].T;
  std::vector<double> out(T);
  cand.expr.eval_batch(vars, T, V, out);
  for (auto& v : out)
    if (!std::isfinite(v)) ++n_invalid;
  return out;
}

}  // namespace

std::vector<std::size_t> apply_gate(std::vector<Candidate>& cands, const Dataset& ds,
                                    const std::vector<std::size_t>& test_idx,
                                    const GateConfig& cfg) {
  const bool is_pde = system_spec(ds.system).kind == SystemKind::Pde;
  std::vector<std::size_t> accepted;
  for (std::size_t ci = 0; ci < cands.size(); ++ci) {
    Candidate& cand = cands[ci];
    cand.accepted = false;
    cand.reason.clear();

    if (is_pde && cand.expr.complexity() > cfg.pde_complexity_cap) {
      cand.test_constancy = std::numeric_limits<double>::quiet_NaN();
      cand.diversity_rho = std::numeric_limits<double>::quiet_NaN();
      cand.reason = "pde_complexity_cap";
      continue;
    }

    std::size_t n_invalid = 0, n_points = 0;
    std::vector<std::vector<double>> series;
    for (auto idx : test_idx) {
      series.push_back(candidate_series(cand, ds, idx, n_invalid));
      n_points += series.back().size();
    }
    if (static_cast<double>(n_invalid) > cfg.max_invalid_frac * static_cast<double>(n_points)) {
      cand.reason = "invalid_evaluations";
      continue;
    }
    if (n_invalid > 0) {
      // patch isolated failures with the trajectory mean of the valid points
      for (auto& s : series) {
        double m = 0.0;
        std::size_t k = 0;
        for (double v : s)
          if (std::isfinite(v)) {
            m += v;
            ++k;
          }
        m = k ? m / static_cast<double>(k) : 0.0;
        for (auto& v : s)
          if (!std::isfinite(v)) v = m;
      }
    }

    cand.test_constancy = constancy(series, cfg.eps);
    cand.diversity_rho = diversity_rho(series, cfg.eps);

    // Parameter-only expressions are exactly constant along trajectories yet
    // vary across them; they are not functions of the state and never count.
    double intra = 0.0, inter_spread = 0.0, scale = 0.0;
    {
      std::vector<double> means;
      for (const auto& s : series) {
        SeriesStats st = stats(s);
        intra += st.stddev;
        means.push_back(st.mean);
        scale = std::max(scale, std::abs(st.mean));
      }
      intra /= static_cast<double>(series.size());
      inter_spread = stats(means).stddev;
    }
    if (intra < 1e-13 * (scale + 1.0) && inter_spread > 1e-9 * (scale + 1.0)) {
      cand.reason = "parameter_only";
      continue;
    }

    if (!(cand.test_constancy < cfg.tau)) {
      cand.reason = "constancy_gate";
      continue;
    }
    if (!(cand.diversity_rho >= cfg.rho_min)) {
      cand.reason = "diversity_filter";
      continue;
    }
    cand.accepted = true;
    accepted.push_back(ci);
  }
  return accepted;
}

namespace {

// Fresh trajectory sharing the original's parameters and invariant level.
// For 2-d systems the level set is the orbit itself, so restarting from the
// trajectory midpoint probes a different phase of the same orbit.  For the
// 4-d Hamiltonians we draw a fresh state and rescale it onto the same energy,
// which changes the unresolved degrees of freedom.
std::vector<float> resample_same_level(const Dataset& ds, const Trajectory& tr, Rng& rng) {
  const auto& spec = system_spec(ds.system);
  const std::size_t D = spec.dim;
  std::vector<double> x0(D);

  if (D == 2) {
    std::size_t mid = tr.T / 2 + rng.below(tr.T / 4 + 1);
    for (std::size_t d = 0; d < D; ++d) x0[d] = tr.at(mid, d);
  } else {
    double target = true_invariant(ds.system, tr.row(0), tr.params);
    for (int attempt = 0; attempt < 64; ++attempt) {
      ParamSet dummy = tr.params;
      std::vector<double> u = sample_initial_condition(ds.system, dummy, rng);
      // bisect a radial scale s so that the invariant matches the target
      auto level = [&](double s) {
        std::vector<double> scaled(D);
        for (std::size_t d = 0; d < D; ++d) scaled[d] = s * u[d];
        return true_invariant(ds.system, scaled, tr.params);
      };
      double lo = 0.0, hi = 1.0;
      while (level(hi) < target && hi < 64.0) hi *= 1.5;
      if (level(hi) < target) continue;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (level(mid) < target ? lo : hi) = mid;
      }
      double s = 0.5 * (lo + hi);
      if (std::abs(level(s) - target) > 1e-9 * (std::abs(target) + 1e-9)) continue;
      for (std::size_t d = 0; d < D; ++d) x0[d] = s * u[d];
      break;
    }
  }

  OdeRhs rhs = [&](double, std::span<const double> x, std::span<double> dxdt) {
    vector_field(ds.system, x, tr.params, dxdt);
  };
  OdeSolveConfig cfg;
  cfg.t1 = spec.dt * static_cast<double>(tr.T - 1);
  cfg.n_out = tr.T;
  OdeResult r = solve_ode(rhs, x0, cfg);
  if (!r.ok) throw std::runtime_error("adjudicate probe integration failed: " + r.error);
  std::vector<float> states(tr.T * D);
  for (std::size_t i = 0; i < states.size(); ++i)
    states[i] = static_cast<float>(r.states[i]);
  return states;
}

}  // namespace

void adjudicate(std::vector<Candidate>& cands, const std::vector<std::size_t>& accepted,
                const Dataset& ds, const std::vector<std::size_t>& test_idx,
                std::uint64_t seed) {
  const auto& spec = system_spec(ds.system);
  if (!spec.has_true_law) {
    for (auto ci : accepted) cands[ci].verdict = "spurious";
    return;
  }

  // per-trajectory levels of the true invariant
  std::vector<double> true_means;
  for (auto idx : test_idx) {
    const auto& tr = ds.trajectories[idx];
    double m = 0.0;
    for (std::size_t t = 0; t < tr.T; ++t)
      m += true_invariant(ds.system, tr.row(t), tr.params);
    true_means.push_back(m / static_cast<double>(tr.T));
  }

  for (auto ci : accepted) {
    Candidate& cand = cands[ci];
    std::size_t n_invalid = 0;
    std::vector<double> cand_means;
    std::vector<double> intra_stds;
    for (auto idx : test_idx) {
      auto s = candidate_series(cand, ds, idx, n_invalid);
      SeriesStats st = stats(s);
      cand_means.push_back(st.mean);
      intra_stds.push_back(st.stddev);
    }

    double rs = spearman(cand_means, true_means);
    if (std::abs(rs) >= 0.95) {
      cand.verdict = "true_discovery";
      continue;
    }

    // Resampling probe: a true conserved quantity keeps its level on fresh
    // trajectories generated at the same (invariant level, parameters).
    double spread = stats(cand_means).stddev;
    const std::size_t K = std::min<std::size_t>(8, test_idx.size());
    std::size_t consistent = 0;
    Rng rng = Rng::derive(seed, kTagProbe, ci);
    Dataset probe;
    probe.system = ds.system;
    probe.T = ds.T;
    probe.dim = ds.dim;
    probe.times = ds.times;
    probe.trajectories.resize(1);
    for (std::size_t k = 0; k < K; ++k) {
      std::size_t idx = test_idx[k];
      probe.trajectories[0] = ds.trajectories[idx];
      probe.trajectories[0].states = resample_same_level(ds, ds.trajectories[idx], rng);
      std::size_t inv = 0;
      auto s = candidate_series(cand, probe, 0, inv);
      double m = stats(s).mean;
      double tol = std::max(0.05 * spread, 10.0 * intra_stds[k] + 1e-9 * std::abs(cand_means[k]));
      if (std::abs(m - cand_means[k]) <= tol) ++consistent;
    }
    cand.verdict = 4 * consistent >= 3 * K ? "true_discovery" : "spurious";
  }
}

}  // namespace ngcg
