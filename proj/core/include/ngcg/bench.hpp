#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ngcg/dataset.hpp"
#include "ngcg/train.hpp"
#include "ngcg/verify.hpp"

namespace ngcg {

enum class Scale { Desk, Paper };

enum class AblationVariant { Full, NoRestarts, NoDiversity, NoLvLasso, NoPolyLasso, LassoOff };

std::string variant_name(AblationVariant v);
AblationVariant variant_from_name(const std::string& name);

struct PipelineOptions {
  Scale scale = Scale::Desk;
  AblationVariant variant = AblationVariant::Full;
  double noise_sigma = 0.0;      // corrupts train/val; the test split stays clean
  std::uint64_t noise_seed = 1;
  std::size_t subsample_train = 0;  // 0 = full train split
  std::size_t restarts = 0;         // 0 = scale default (desk 3, paper 10)
  GateConfig gate;
  std::size_t gp_samples = 4096;
  std::size_t jobs = 0;  // grid-level parallelism; 0 = hardware
};

GenerateOptions scale_generate_options(Scale scale);
DynConfig scale_dyn_config(Scale scale);
PhiConfig scale_phi_config(Scale scale);
std::size_t scale_restarts(Scale scale);

struct StageTimings {
  double dynamics_s = 0.0;
  double phi_s = 0.0;
  double extract_s = 0.0;
  double verify_s = 0.0;
  double total_s = 0.0;
};

struct RunMetrics {
  double dr = 0.0;
  double fdr = 0.0;
  double f1 = 0.0;
  double best_constancy = 0.0;  // NaN when nothing accepted
  double val_mse = 0.0;
  double mse_at_16 = 0.0;
};

struct RunReport {
  std::string system;
  std::uint64_t seed = 0;
  std::string variant;
  double noise_sigma = 0.0;
  std::size_t n_train = 0;
  std::vector<double> restart_constancies;
  std::size_t best_restart = 0;
  std::vector<Candidate> candidates;
  std::size_t n_accepted = 0;
  RunMetrics metrics;
  StageTimings timings;  // wall clock; excluded from the canonical serialization

  // Canonical (timing-free) JSON; byte-identical across reruns of one seed.
  nlohmann::json to_json() const;
};

double f1_score(double dr, double fdr);

RunReport run_pipeline(const Dataset& ds, std::uint64_t seed, const PipelineOptions& opts);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population; 0 for a single report
};

struct BenchmarkSummary {
  std::vector<RunReport> reports;
  MetricSummary dr, fdr, f1, best_constancy, val_mse, mse_at_16;
};

BenchmarkSummary compute_metrics(std::vector<RunReport> reports);

// One pipeline run per (system, variant); Table-shaped grid of F1 (DR/FDR).
struct AblationCell {
  std::string system;
  std::string variant;
  RunMetrics metrics;
  std::size_t n_accepted = 0;
};
std::vector<AblationCell> run_ablation(const std::vector<Dataset>& datasets,
                                       const std::vector<AblationVariant>& variants,
                                       std::uint64_t seed, const PipelineOptions& base);

struct NoiseCell {
  std::string system;
  double sigma;
  std::uint64_t seed;
  RunMetrics metrics;
  std::size_t n_accepted = 0;
};
std::vector<NoiseCell> run_noise_suite(const std::vector<Dataset>& datasets,
                                       const std::vector<double>& sigmas,
                                       const std::vector<std::uint64_t>& seeds,
                                       const PipelineOptions& base);

struct SampleCell {
  std::string system;
  std::size_t n_train;
  RunMetrics metrics;
};
std::vector<SampleCell> run_sample_efficiency(const Dataset& ds,
                                              const std::vector<std::size_t>& sizes,
                                              std::uint64_t seed, const PipelineOptions& base);

struct SweepCell {
  std::string system;
  std::size_t restarts;
  RunMetrics metrics;
};
std::vector<SweepCell> run_restart_sweep(const Dataset& ds,
                                         const std::vector<std::size_t>& restart_counts,
                                         std::uint64_t seed, const PipelineOptions& base);

// Non-dominated set under (minimize constancy, minimize complexity), sorted
// by complexity; duplicates retained.
struct ParetoPoint {
  double constancy;
  std::size_t complexity;
  std::string expr;
};
std::vector<ParetoPoint> pareto_frontier(const std::vector<ParetoPoint>& candidates);

// Runs a list of independent tasks on up to `jobs` threads; results land in
// deterministic slots regardless of scheduling.
void parallel_for_tasks(std::size_t n_tasks, std::size_t jobs,
                        const std::function<void(std::size_t)>& task);

}  // namespace ngcg
