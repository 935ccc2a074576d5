#include "ngcg/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ngcg/container.hpp"
#include "ngcg/integrate.hpp"

namespace ngcg {

namespace {

float q32(double v) { return static_cast<float>(v); }

std::vector<float> quantize(std::span<const double> v) {
  std::vector<float> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = q32(v[i]);
  return out;
}

Trajectory make_ode_trajectory(SystemId system, std::size_t traj_id, std::uint64_t seed,
                               std::size_t T) {
  const auto& spec = system_spec(system);
  Rng rng_p = Rng::derive(seed, kTagParams, traj_id);
  Rng rng_x = Rng::derive(seed, kTagInit, traj_id);
  ParamSet params = sample_params(system, rng_p);
  std::vector<double> x0 = sample_initial_condition(system, params, rng_x);

  OdeRhs rhs = [&](double, std::span<const double> x, std::span<double> dxdt) {
    vector_field(system, x, params, dxdt);
  };

  if (system == SystemId::Lorenz) {
    // Discard the transient so trajectories sample the attractor.
    OdeSolveConfig settle{1e-9, 1e-9, 0.0, kLorenzSettle, 2, kLorenzSettle / 256.0};
    OdeResult r = solve_ode(rhs, x0, settle);
    if (!r.ok) throw std::runtime_error("lorenz settle failed: " + r.error);
    auto last = r.row(1);
    x0.assign(last.begin(), last.end());
    for (auto& v : x0) v = static_cast<double>(static_cast<float>(v));
  }

  OdeSolveConfig cfg;
  cfg.t1 = spec.dt * static_cast<double>(T - 1);
  cfg.n_out = T;
  OdeResult r = solve_ode(rhs, x0, cfg);
  if (!r.ok)
    throw std::runtime_error("integration failed for " + spec.name + " trajectory " +
                             std::to_string(traj_id) + ": " + r.error);

  Trajectory tr;
  tr.traj_id = traj_id;
  tr.T = T;
  tr.dim = spec.dim;
  tr.states = quantize(r.states);
  tr.params = params;
  return tr;
}

Trajectory make_pde_trajectory(SystemId system, std::size_t traj_id, std::uint64_t seed,
                               std::size_t T, const SpectralGrid& grid,
                               const EtdRk4Coeffs* ks_coeffs) {
  const auto& spec = system_spec(system);
  Rng rng_x = Rng::derive(seed, kTagInit, traj_id);
  ParamSet params;  // PDE systems have fixed physical constants
  std::vector<double> u = sample_initial_condition(system, params, rng_x);

  std::vector<double> history(T * grid.n_x);
  for (std::size_t j = 0; j < grid.n_x; ++j) history[j] = u[j];
  for (std::size_t t = 1; t < T; ++t) {
    try {
      u = system == SystemId::Burgers ? step_burgers(u, spec.dt, 0.05, grid)
                                      : step_ks(u, *ks_coeffs, grid);
    } catch (const std::exception& e) {
      throw std::runtime_error("integration failed for " + spec.name + " trajectory " +
                               std::to_string(traj_id) + ": " + e.what());
    }
    for (std::size_t j = 0; j < grid.n_x; ++j) history[t * grid.n_x + j] = u[j];
  }

  MomentSeries mom = reduce_moments(history, T, grid.n_x);
  Trajectory tr;
  tr.traj_id = traj_id;
  tr.T = T;
  tr.dim = 3;
  tr.states.resize(T * 3);
  for (std::size_t t = 0; t < T; ++t) {
    tr.states[t * 3 + 0] = q32(mom.mean[t]);
    tr.states[t * 3 + 1] = q32(mom.variance[t]);
    tr.states[t * 3 + 2] = q32(mom.skewness[t]);
  }
  tr.params = params;
  return tr;
}

}  // namespace

Dataset generate(SystemId system, std::uint64_t seed, const GenerateOptions& opts) {
  const auto& spec = system_spec(system);
  const std::size_t n_traj = opts.n_traj ? opts.n_traj : spec.n_traj;
  const std::size_t T = opts.T ? opts.T : spec.T;
  if (T < 2) throw std::invalid_argument("generate: T must be >= 2");

  Dataset ds;
  ds.system = system;
  ds.seed = seed;
  ds.T = T;
  ds.dim = spec.dim;
  ds.times.resize(T);
  for (std::size_t t = 0; t < T; ++t)
    ds.times[t] = q32(spec.dt * static_cast<double>(t));

  ds.trajectories.reserve(n_traj);
  if (spec.kind == SystemKind::Ode) {
    for (std::size_t i = 0; i < n_traj; ++i)
      ds.trajectories.push_back(make_ode_trajectory(system, i, seed, T));
  } else {
    SpectralGrid grid = system == SystemId::Burgers ? SpectralGrid::burgers() : SpectralGrid::ks();
    EtdRk4Coeffs coeffs;
    if (system == SystemId::Ks) coeffs = etdrk4_coeffs(grid, spec.dt);
    for (std::size_t i = 0; i < n_traj; ++i)
      ds.trajectories.push_back(make_pde_trajectory(system, i, seed, T, grid, &coeffs));
  }

  std::vector<std::size_t> order(n_traj);
  for (std::size_t i = 0; i < n_traj; ++i) order[i] = i;
  Rng rng_split = Rng::derive(seed, kTagSplit);
  rng_split.shuffle(order);
  std::size_t n_train = n_traj * 7 / 10;
  std::size_t n_val = n_traj * 3 / 20;
  ds.splits.train.assign(order.begin(), order.begin() + n_train);
  ds.splits.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  ds.splits.test.assign(order.begin() + n_train + n_val, order.end());
  return ds;
}

MomentSeries reduce_moments(std::span<const double> field_history, std::size_t n_t,
                            std::size_t n_x) {
  if (field_history.size() != n_t * n_x)
    throw std::invalid_argument("reduce_moments: history size mismatch");
  MomentSeries out;
  out.mean.resize(n_t);
  out.variance.resize(n_t);
  out.skewness.resize(n_t);
  for (std::size_t t = 0; t < n_t; ++t) {
    const double* row = field_history.data() + t * n_x;
    double m = 0.0;
    for (std::size_t j = 0; j < n_x; ++j) {
      if (!std::isfinite(row[j])) throw std::invalid_argument("reduce_moments: non-finite field");
      m += row[j];
    }
    m /= static_cast<double>(n_x);
    double v = 0.0, s = 0.0;
    for (std::size_t j = 0; j < n_x; ++j) {
      double d = row[j] - m;
      v += d * d;
      s += d * d * d;
    }
    v /= static_cast<double>(n_x);
    s /= static_cast<double>(n_x);
    out.mean[t] = m;
    out.variance[t] = v;
    out.skewness[t] = v > 0.0 ? s / (std::sqrt(v) * v) : 0.0;  // sigma^3 = v * sqrt(v)
  }
  return out;
}

Dataset add_noise(const Dataset& ds, double sigma, std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
  Dataset out = ds;
  out.noise_sigma = sigma;
  if (sigma == 0.0) return out;
  for (auto& tr : out.trajectories) {
    Rng rng = Rng::derive(seed, kTagNoise, tr.traj_id);
    for (auto& v : tr.states)
      v = q32(static_cast<double>(v) + sigma * rng.normal());
  }
  return out;
}

Dataset subsample_train(const Dataset& ds, std::size_t n) {
  if (n == 0 || n > ds.splits.train.size())
    throw std::invalid_argument("subsample_train: n out of range");
  Dataset out = ds;
  out.splits.train.resize(n);
  return out;
}

void save(const Dataset& ds, const std::filesystem::path& dir) {
  const auto& spec = system_spec(ds.system);
  ContainerWriter w(dir, "dataset");
  const std::size_t n = ds.trajectories.size();

  std::vector<float> states(n * ds.T * ds.dim);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(ds.trajectories[i].states.begin(), ds.trajectories[i].states.end(),
              states.begin() + i * ds.T * ds.dim);
  w.add_f32("states", states, {n, ds.T, ds.dim});
  w.add_f32("times", ds.times, {ds.T});

  std::vector<std::string> param_names;
  for (const auto& r : spec.param_ranges) param_names.push_back(r.name);
  if (!param_names.empty()) {
    std::vector<float> params(n * param_names.size());
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < param_names.size(); ++j)
        params[i * param_names.size() + j] =
            q32(ds.trajectories[i].params.at(param_names[j]));
    w.add_f32("params", params, {n, param_names.size()});
  }

  auto& meta = w.meta();
  meta["system"] = spec.name;
  meta["seed"] = ds.seed;
  meta["noise_sigma"] = ds.noise_sigma;
  meta["dt"] = spec.dt;
  meta["T"] = ds.T;
  meta["n_traj"] = n;
  meta["dim"] = ds.dim;
  meta["param_names"] = param_names;
  meta["splits"] = {{"train", ds.splits.train}, {"val", ds.splits.val}, {"test", ds.splits.test}};
  w.finish();
}

std::vector<double> discovery_matrix(const Dataset& ds, std::size_t traj_idx) {
  const auto& tr = ds.trajectories[traj_idx];
  const std::size_t v = discovery_dim(ds.system);
  std::vector<double> out(tr.T * v);
  std::vector<double> x(tr.dim);
  for (std::size_t t = 0; t < tr.T; ++t) {
    for (std::size_t d = 0; d < tr.dim; ++d) x[d] = tr.at(t, d);
    discovery_variables(ds.system, x, tr.params, {out.data() + t * v, v});
  }
  return out;
}

double invalid_fraction(const Dataset& ds, std::size_t traj_idx) {
  const auto& tr = ds.trajectories[traj_idx];
  const bool logs = system_spec(ds.system).log_state_features;
  std::size_t bad = 0;
  for (std::size_t t = 0; t < tr.T; ++t) {
    bool row_bad = false;
    for (std::size_t d = 0; d < tr.dim; ++d) {
      double v = tr.at(t, d);
      if (!std::isfinite(v) || (logs && v <= 0.0)) row_bad = true;
    }
    if (row_bad) ++bad;
  }
  return static_cast<double>(bad) / static_cast<double>(tr.T);
}

std::vector<std::size_t> valid_subset(const Dataset& ds, const std::vector<std::size_t>& idx,
                                      double max_invalid_frac) {
  std::vector<std::size_t> out;
  for (auto i : idx)
    if (invalid_fraction(ds, i) <= max_invalid_frac) out.push_back(i);
  return out;
}

Dataset load(const std::filesystem::path& dir) {
  ContainerReader r(dir);
  if (r.kind() != "dataset") throw std::runtime_error("container is not a dataset: " + dir.string());
  const auto& meta = r.meta();

  Dataset ds;
  ds.system = system_from_name(meta.at("system").get<std::string>());
  ds.seed = meta.at("seed").get<std::uint64_t>();
  ds.noise_sigma = meta.at("noise_sigma").get<double>();
  ds.T = meta.at("T").get<std::size_t>();
  ds.dim = meta.at("dim").get<std::size_t>();
  ds.times = r.read_f32("times");
  ds.splits.train = meta.at("splits").at("train").get<std::vector<std::size_t>>();
  ds.splits.val = meta.at("splits").at("val").get<std::vector<std::size_t>>();
  ds.splits.test = meta.at("splits").at("test").get<std::vector<std::size_t>>();

  auto param_names = meta.at("param_names").get<std::vector<std::string>>();
  std::size_t n = meta.at("n_traj").get<std::size_t>();
  auto states = r.read_f32("states");
  std::vector<float> params;
  if (!param_names.empty()) params = r.read_f32("params");

  ds.trajectories.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& tr = ds.trajectories[i];
    tr.traj_id = i;
    tr.T = ds.T;
    tr.dim = ds.dim;
    tr.states.assign(states.begin() + i * ds.T * ds.dim,
                     states.begin() + (i + 1) * ds.T * ds.dim);
    for (std::size_t j = 0; j < param_names.size(); ++j)
      tr.params[param_names[j]] = static_cast<double>(params[i * param_names.size() + j]);
  }
  return ds;
}

}  // namespace ngcg
