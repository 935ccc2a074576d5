#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ngcg/dataset.hpp"

using namespace ngcg;
namespace fs = std::filesystem;

namespace {
GenerateOptions desk(std::size_t n = 30, std::size_t T = 60) {
  GenerateOptions o;
  o.n_traj = n;
  o.T = T;
  return o;
}
}  // namespace

TEST_CASE("generate produces the requested layout and splits") {
  Dataset ds = generate(SystemId::MassSpring, 42, desk(100, 50));
  CHECK(ds.trajectories.size() == 100);
  CHECK(ds.T == 50);
  CHECK(ds.dim == 2);
  CHECK(ds.splits.train.size() == 70);
  CHECK(ds.splits.val.size() == 15);
  CHECK(ds.splits.test.size() == 15);

  std::vector<bool> seen(100, false);
  for (auto idx : ds.splits.train) seen[idx] = true;
  for (auto idx : ds.splits.val) {
    CHECK_FALSE(seen[idx]);
    seen[idx] = true;
  }
  for (auto idx : ds.splits.test) {
    CHECK_FALSE(seen[idx]);
    seen[idx] = true;
  }
  for (bool s : seen) CHECK(s);

  for (const auto& tr : ds.trajectories)
    for (float v : tr.states) CHECK(std::isfinite(v));
}

TEST_CASE("generate is deterministic") {
  Dataset a = generate(SystemId::MassSpring, 42, desk());
  Dataset b = generate(SystemId::MassSpring, 42, desk());
  for (std::size_t i = 0; i < a.trajectories.size(); ++i) {
    CHECK(a.trajectories[i].states == b.trajectories[i].states);
    CHECK(a.trajectories[i].params == b.trajectories[i].params);
  }
  CHECK(a.splits.train == b.splits.train);
}

TEST_CASE("pde generation reduces to three moments") {
  Dataset ds = generate(SystemId::Burgers, 7, desk(10, 40));
  CHECK(ds.dim == 3);
  for (const auto& tr : ds.trajectories) {
    CHECK(tr.dim == 3);
    for (std::size_t t = 0; t < tr.T; ++t) CHECK(tr.at(t, 1) >= 0.0);  // variance
  }
}

TEST_CASE("reduce_moments formulas") {
  {
    std::vector<double> field(2 * 64, 3.25);
    MomentSeries m = reduce_moments(field, 2, 64);
    CHECK(m.mean[0] == doctest::Approx(3.25));
    CHECK(m.variance[0] == 0.0);
    CHECK(m.skewness[0] == 0.0);
  }
  {
    std::vector<double> field(64);
    for (std::size_t j = 0; j < 64; ++j) field[j] = (j % 2 == 0) ? -1.0 : 1.0;
    MomentSeries m = reduce_moments(field, 1, 64);
    CHECK(m.mean[0] == doctest::Approx(0.0));
    CHECK(m.variance[0] == doctest::Approx(1.0));
    CHECK(m.skewness[0] == doctest::Approx(0.0));
  }
  {
    // 63 zeros and one 8: mean 1/8, population moments evaluated directly.
    std::vector<double> field(64, 0.0);
    field[63] = 8.0;
    MomentSeries m = reduce_moments(field, 1, 64);
    CHECK(m.mean[0] == doctest::Approx(0.125));
    double mu = 0.125;
    double var = (63.0 * mu * mu + (8.0 - mu) * (8.0 - mu)) / 64.0;
    double m3 = (63.0 * (-mu) * (-mu) * (-mu) + std::pow(8.0 - mu, 3)) / 64.0;
    CHECK(m.variance[0] == doctest::Approx(var));
    CHECK(m.skewness[0] == doctest::Approx(m3 / std::pow(var, 1.5)));
  }
}

TEST_CASE("add_noise statistics and determinism") {
  Dataset ds = generate(SystemId::MassSpring, 1, desk(40, 50));
  for (auto& tr : ds.trajectories)
    for (auto& v : tr.states) v = 0.0f;

  Dataset clean = add_noise(ds, 0.0, 99);
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
    CHECK(clean.trajectories[i].states == ds.trajectories[i].states);

  Dataset noisy = add_noise(ds, 0.1, 99);
  double sum2 = 0.0;
  std::size_t n = 0;
  for (const auto& tr : noisy.trajectories)
    for (float v : tr.states) {
      sum2 += static_cast<double>(v) * v;
      ++n;
    }
  double std_emp = std::sqrt(sum2 / static_cast<double>(n));
  CHECK(std_emp == doctest::Approx(0.1).epsilon(0.02));
  CHECK(noisy.noise_sigma == 0.1);

  Dataset noisy2 = add_noise(ds, 0.1, 99);
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i)
    CHECK(noisy.trajectories[i].states == noisy2.trajectories[i].states);
}

TEST_CASE("subsample_train") {
  Dataset ds = generate(SystemId::MassSpring, 2, desk(40, 30));
  Dataset full = subsample_train(ds, ds.splits.train.size());
  CHECK(full.splits.train == ds.splits.train);
  Dataset small = subsample_train(ds, 5);
  CHECK(small.splits.train.size() == 5);
  CHECK(small.splits.val == ds.splits.val);
  CHECK_THROWS_AS(subsample_train(ds, 0), std::invalid_argument);
  CHECK_THROWS_AS(subsample_train(ds, 1000), std::invalid_argument);
}

TEST_CASE("save/load round trip is exact") {
  fs::path dir = fs::temp_directory_path() / "ngcg_ds_rt";
  fs::remove_all(dir);
  Dataset ds = generate(SystemId::LotkaVolterra, 5, desk(20, 40));
  save(ds, dir);
  Dataset back = load(dir);
  CHECK(back.system == ds.system);
  CHECK(back.seed == ds.seed);
  CHECK(back.T == ds.T);
  CHECK(back.times == ds.times);
  CHECK(back.splits.train == ds.splits.train);
  CHECK(back.splits.test == ds.splits.test);
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    CHECK(back.trajectories[i].states == ds.trajectories[i].states);
    CHECK(back.trajectories[i].params == ds.trajectories[i].params);
  }
  fs::remove_all(dir);
}
