#include "ngcg/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

#include "ngcg/extract.hpp"
#include "ngcg/gp.hpp"

namespace ngcg {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

}  // namespace

std::string variant_name(AblationVariant v) {
  switch (v) {
    case AblationVariant::Full: return "full";
    case AblationVariant::NoRestarts: return "no_restarts";
    case AblationVariant::NoDiversity: return "no_diversity";
    case AblationVariant::NoLvLasso: return "no_lv_lasso";
    case AblationVariant::NoPolyLasso: return "no_poly_lasso";
    case AblationVariant::LassoOff: return "lasso_off";
  }
  return "?";
}

AblationVariant variant_from_name(const std::string& name) {
  for (AblationVariant v : {AblationVariant::Full, AblationVariant::NoRestarts,
                            AblationVariant::NoDiversity, AblationVariant::NoLvLasso,
                            AblationVariant::NoPolyLasso, AblationVariant::LassoOff})
    if (variant_name(v) == name) return v;
  throw std::invalid_argument("unknown ablation variant: " + name);
}

GenerateOptions scale_generate_options(Scale scale) {
  GenerateOptions o;
  if (scale == Scale::Desk) {
    o.n_traj = 100;
    o.T = 200;
  }
  return o;
}

DynConfig scale_dyn_config(Scale scale) {
  DynConfig c;
  if (scale == Scale::Desk) {
    c.max_epochs = 15;
    c.patience = 6;
  } else {
    c.max_epochs = 100;
    c.patience = 10;
  }
  return c;
}

PhiConfig scale_phi_config(Scale scale) {
  PhiConfig c;
  if (scale == Scale::Desk) {
    c.max_epochs = 220;
    c.patience = 25;
    c.t_subsample = 64;
  } else {
    c.max_epochs = 300;
    c.patience = 20;
    c.t_subsample = 128;
  }
  return c;
}

std::size_t scale_restarts(Scale scale) { return scale == Scale::Desk ? 3 : 10; }

double f1_score(double dr, double fdr) {
  double p = 1.0 - fdr, r = dr;
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

RunReport run_pipeline(const Dataset& ds_clean, std::uint64_t seed,
                       const PipelineOptions& opts) {
  double t_start = now_s();
  RunReport rep;
  rep.system = system_name(ds_clean.system);
  rep.seed = seed;
  rep.variant = variant_name(opts.variant);
  rep.noise_sigma = opts.noise_sigma;

  // Training/extraction data (possibly noisy, possibly subsampled); the gate
  // and adjudication always score on the clean test split.
  Dataset ds_train = opts.noise_sigma > 0.0
                         ? add_noise(ds_clean, opts.noise_sigma, opts.noise_seed)
                         : ds_clean;
  if (opts.subsample_train) ds_train = subsample_train(ds_train, opts.subsample_train);
  rep.n_train = ds_train.splits.train.size();

  const auto& spec = system_spec(ds_clean.system);

  // Stage 1: frozen dynamics model (prediction metrics only).
  double t0 = now_s();
  DynConfig dyn_cfg = scale_dyn_config(opts.scale);
  DynResult dyn = train_dynamics(ds_train, dyn_cfg, Rng::mix(seed ^ 0x64796e));
  rep.metrics.val_mse = dyn.val_mse;
  rep.metrics.mse_at_16 = dyn.mse_at_16;
  rep.timings.dynamics_s = now_s() - t0;

  // Stage 2: multi-restart variance minimiser.
  t0 = now_s();
  std::size_t R = opts.restarts ? opts.restarts : scale_restarts(opts.scale);
  if (opts.variant == AblationVariant::NoRestarts) R = 1;
  PhiConfig phi_cfg = scale_phi_config(opts.scale);
  PhiResult phi = train_phi_restarts(ds_train, R, phi_cfg, Rng::mix(seed ^ 0x706869));
  for (const auto& r : phi.restarts) rep.restart_constancies.push_back(r.val_constancy);
  rep.best_restart = phi.best;
  rep.timings.phi_s = now_s() - t0;

  // Stage 3: system-specific symbolic extraction.
  t0 = now_s();
  std::vector<Candidate> cands;
  std::vector<Expression> gp_seeds;
  const bool use_poly = opts.variant != AblationVariant::NoPolyLasso &&
                        opts.variant != AblationVariant::LassoOff;
  const bool use_lv = ds_clean.system == SystemId::LotkaVolterra &&
                      opts.variant != AblationVariant::NoLvLasso &&
                      opts.variant != AblationVariant::LassoOff;

  auto train_idx = valid_subset(ds_train, ds_train.splits.train);
  if (train_idx.size() < 2)
    throw std::runtime_error("run_pipeline: no valid training trajectories");

  std::vector<std::vector<double>> train_mats(train_idx.size());
  std::vector<const std::vector<double>*> mat_ptrs;
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    train_mats[i] = discovery_matrix(ds_train, train_idx[i]);
    mat_ptrs.push_back(&train_mats[i]);
  }
  const std::size_t V = discovery_dim(ds_clean.system);

  if (use_poly) {
    try {
      MonomialLibrary lib = MonomialLibrary::build(V, 4);
      Candidate c = poly_lasso(mat_ptrs, ds_train.T, V, lib);
      gp_seeds.push_back(c.expr);
      cands.push_back(std::move(c));
    } catch (const std::exception&) {
      // degenerate features (e.g. every trajectory flagged under noise)
    }
  }
  if (use_lv) {
    try {
      std::vector<std::vector<double>> states(train_idx.size());
      std::vector<const std::vector<double>*> sptr;
      for (std::size_t i = 0; i < train_idx.size(); ++i) {
        const auto& tr = ds_train.trajectories[train_idx[i]];
        states[i].resize(tr.T * 2);
        for (std::size_t t = 0; t < tr.T; ++t) {
          states[i][t * 2] = tr.at(t, 0);
          states[i][t * 2 + 1] = tr.at(t, 1);
        }
        sptr.push_back(&states[i]);
      }
      Candidate c = lv_lasso(sptr, ds_train.T);
      gp_seeds.push_back(c.expr);
      cands.push_back(std::move(c));
    } catch (const std::exception&) {
    }
  }
  if (spec.kind == SystemKind::Pde) {
    for (auto& c : explicit_pde_candidates(ds_clean.system)) cands.push_back(std::move(c));
  }

  {
    std::size_t avail = train_idx.size() * ds_train.T;
    std::size_t n = std::min(opts.gp_samples, avail);
    PhiPairs pairs = sample_phi_pairs(phi.best_net(), phi.input_std, ds_train, train_idx, n,
                                      Rng::mix(seed ^ 0x677073));
    GpConfig gp_cfg;
    auto entries = gp_symreg(pairs.X, pairs.y, V, gp_cfg, Rng::mix(seed ^ 0x6770), gp_seeds);
    for (auto& e : entries) {
      Candidate c;
      c.expr = std::move(e.expr);
      c.source = "gp";
      c.gp_mse = e.mse;
      cands.push_back(std::move(c));
    }
  }
  rep.timings.extract_s = now_s() - t0;

  // Stage 4: strict gate + diversity filter on the clean test split, then
  // adjudication against the ground truth.
  t0 = now_s();
  GateConfig gate = opts.gate;
  if (opts.variant == AblationVariant::NoDiversity) gate.rho_min = 0.0;
  auto accepted = apply_gate(cands, ds_clean, ds_clean.splits.test, gate);
  adjudicate(cands, accepted, ds_clean, ds_clean.splits.test, Rng::mix(seed ^ 0x616a));
  rep.timings.verify_s = now_s() - t0;

  rep.candidates = std::move(cands);
  rep.n_accepted = accepted.size();

  std::size_t n_true = 0, n_spurious = 0;
  double best_c = std::numeric_limits<double>::quiet_NaN();
  for (const auto& c : rep.candidates) {
    if (!c.accepted) continue;
    if (c.verdict == "true_discovery") ++n_true;
    if (c.verdict == "spurious") ++n_spurious;
    if (std::isnan(best_c) || c.test_constancy < best_c) best_c = c.test_constancy;
  }
  rep.metrics.dr = spec.has_true_law && n_true > 0 ? 1.0 : 0.0;
  rep.metrics.fdr = rep.n_accepted
                        ? static_cast<double>(n_spurious) / static_cast<double>(rep.n_accepted)
                        : 0.0;
  rep.metrics.f1 = f1_score(rep.metrics.dr, rep.metrics.fdr);
  rep.metrics.best_constancy = best_c;
  rep.timings.total_s = now_s() - t_start;
  return rep;
}

nlohmann::json RunReport::to_json() const {
  nlohmann::json j;
  j["schema"] = "ngcg-run-report/1";
  j["system"] = system;
  j["seed"] = seed;
  j["variant"] = variant;
  j["noise_sigma"] = noise_sigma;
  j["n_train"] = n_train;
  j["restart_constancies"] = restart_constancies;
  j["best_restart"] = best_restart;
  j["n_accepted"] = n_accepted;
  auto num = [](double v) -> nlohmann::json {
    if (std::isnan(v)) return nullptr;
    return v;
  };
  j["metrics"] = {{"dr", metrics.dr},
                  {"fdr", metrics.fdr},
                  {"f1", metrics.f1},
                  {"best_constancy", num(metrics.best_constancy)},
                  {"val_mse", metrics.val_mse},
                  {"mse_at_16", metrics.mse_at_16}};
  j["candidates"] = nlohmann::json::array();
  for (const auto& c : candidates) {
    j["candidates"].push_back({{"expr", c.expr.to_string()},
                               {"source", c.source},
                               {"complexity", c.expr.complexity()},
                               {"lambda_min", num(c.lambda_min)},
                               {"gp_mse", num(c.gp_mse)},
                               {"test_constancy", num(c.test_constancy)},
                               {"diversity_rho", num(c.diversity_rho)},
                               {"accepted", c.accepted},
                               {"reason", c.reason},
                               {"verdict", c.verdict}});
  }
  return j;
}

namespace {

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() >= 2) {
    double var = 0.0;
    for (double x : v) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(v.size()));
  }
  return s;
}

}  // namespace

BenchmarkSummary compute_metrics(std::vector<RunReport> reports) {
  if (reports.empty()) throw std::invalid_argument("compute_metrics: no reports");
  BenchmarkSummary out;
  std::vector<double> dr, fdr, f1, bc, vm, m16;
  for (const auto& r : reports) {
    dr.push_back(r.metrics.dr);
    fdr.push_back(r.metrics.fdr);
    f1.push_back(r.metrics.f1);
    if (!std::isnan(r.metrics.best_constancy)) bc.push_back(r.metrics.best_constancy);
    vm.push_back(r.metrics.val_mse);
    m16.push_back(r.metrics.mse_at_16);
  }
  out.dr = summarize(dr);
  out.fdr = summarize(fdr);
  out.f1 = summarize(f1);
  out.best_constancy = summarize(bc);
  out.val_mse = summarize(vm);
  out.mse_at_16 = summarize(m16);
  out.reports = std::move(reports);
  return out;
}

void parallel_for_tasks(std::size_t n_tasks, std::size_t jobs,
                        const std::function<void(std::size_t)>& task) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = std::min(jobs, n_tasks);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (;;) {
          std::size_t i = next.fetch_add(1);
          if (i >= n_tasks) break;
          task(i);
        }
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<AblationCell> run_ablation(const std::vector<Dataset>& datasets,
                                       const std::vector<AblationVariant>& variants,
                                       std::uint64_t seed, const PipelineOptions& base) {
  std::vector<AblationCell> cells(datasets.size() * variants.size());
  parallel_for_tasks(cells.size(), base.jobs, [&](std::size_t k) {
    std::size_t di = k / variants.size(), vi = k % variants.size();
    PipelineOptions opts = base;
    opts.variant = variants[vi];
    RunReport r = run_pipeline(datasets[di], seed, opts);
    cells[k] = {r.system, r.variant, r.metrics, r.n_accepted};
  });
  return cells;
}

std::vector<NoiseCell> run_noise_suite(const std::vector<Dataset>& datasets,
                                       const std::vector<double>& sigmas,
                                       const std::vector<std::uint64_t>& seeds,
                                       const PipelineOptions& base) {
  std::vector<NoiseCell> cells(datasets.size() * sigmas.size() * seeds.size());
  parallel_for_tasks(cells.size(), base.jobs, [&](std::size_t k) {
    std::size_t di = k / (sigmas.size() * seeds.size());
    std::size_t si = (k / seeds.size()) % sigmas.size();
    std::size_t se = k % seeds.size();
    PipelineOptions opts = base;
    opts.noise_sigma = sigmas[si];
    opts.noise_seed = Rng::mix(seeds[se] ^ 0x6e6f697365);
    RunReport r = run_pipeline(datasets[di], seeds[se], opts);
    cells[k] = {r.system, sigmas[si], seeds[se], r.metrics, r.n_accepted};
  });
  return cells;
}

std::vector<SampleCell> run_sample_efficiency(const Dataset& ds,
                                              const std::vector<std::size_t>& sizes,
                                              std::uint64_t seed, const PipelineOptions& base) {
  std::vector<SampleCell> cells(sizes.size());
  parallel_for_tasks(cells.size(), base.jobs, [&](std::size_t k) {
    PipelineOptions opts = base;
    opts.subsample_train = sizes[k];
    RunReport r = run_pipeline(ds, seed, opts);
    cells[k] = {r.system, sizes[k], r.metrics};
  });
  return cells;
}

std::vector<SweepCell> run_restart_sweep(const Dataset& ds,
                                         const std::vector<std::size_t>& restart_counts,
                                         std::uint64_t seed, const PipelineOptions& base) {
  std::vector<SweepCell> cells(restart_counts.size());
  parallel_for_tasks(cells.size(), base.jobs, [&](std::size_t k) {
    PipelineOptions opts = base;
    opts.restarts = restart_counts[k];
    RunReport r = run_pipeline(ds, seed, opts);
    cells[k] = {r.system, restart_counts[k], r.metrics};
  });
  return cells;
}

std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& candidates) {
  std::vector<ParetoPoint> front;
  for (const auto& c : candidates) {
    bool dominated = false;
    for (const auto& o : candidates) {
      bool leq = o.constancy <= c.constancy && o.complexity <= c.complexity;
      bool strict = o.constancy < c.constancy || o.complexity < c.complexity;
      if (leq && strict) {
        dominated = true;
        break;
      }
    }
    if (!dominated) front.push_back(c);
  }
  std::stable_sort(front.begin(), front.end(), [](const ParetoPoint& a, const ParetoPoint& b) {
    return a.complexity < b.complexity;
  });
  return front;
}

}  // namespace ngcg
