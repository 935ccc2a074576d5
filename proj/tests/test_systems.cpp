#include <stdexcept>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ngcg/systems.hpp"

using namespace ngcg;

namespace {

// Central-difference gradient of the invariant dotted with the vector field.
double drift_fd(SystemId id, const std::vector<double>& x, const ParamSet& p) {
  std::vector<double> f(x.size());
  vector_field(id, x, p, f);
  double acc = 0.0;
  std::vector<double> xp = x, xm = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    // Relative steps where the invariant has log curvature (positive states),
    // absolute otherwise; keeps both truncation and roundoff below 1e-10.
    double h = id == SystemId::LotkaVolterra ? 1e-5 * std::abs(x[i])
                                             : 1e-5 * std::max(std::abs(x[i]), 1.0);
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    double g = (true_invariant(id, xp, p) - true_invariant(id, xm, p)) / (2.0 * h);
    acc += g * f[i];
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return acc;
}

}  // namespace

TEST_CASE("vector fields match the listed equations") {
  {
    ParamSet p{{"k", 1.0}, {"m", 1.0}};
    std::vector<double> x{1.0, 0.0}, f(2);
    vector_field(SystemId::MassSpring, x, p, f);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == -1.0);
  }
  {
    ParamSet p{{"alpha", 0.0}, {"beta", 0.0}, {"gamma", 0.0}, {"delta", 0.0}};
    std::vector<double> x{1.0, 1.0}, f(2);
    vector_field(SystemId::LotkaVolterra, x, p, f);
    CHECK(f[0] == 0.0);
    CHECK(f[1] == 0.0);
  }
  {
    ParamSet p;
    std::vector<double> x{1.0, 1.0, 1.0}, f(3);
    vector_field(SystemId::Lorenz, x, p, f);
    CHECK(f[0] == doctest::Approx(0.0));
    CHECK(f[1] == doctest::Approx(26.0));
    CHECK(f[2] == doctest::Approx(1.0 - 8.0 / 3.0));
  }
}

TEST_CASE("vector field rejects bad input") {
  ParamSet p{{"k", 1.0}, {"m", 1.0}};
  std::vector<double> x{1.0, 0.0, 0.0}, f(3);
  CHECK_THROWS_AS(vector_field(SystemId::MassSpring, x, p, f), std::invalid_argument);
  CHECK_THROWS_AS(system_from_name("no_such_system"), std::invalid_argument);
}

TEST_CASE("true invariants evaluate the closed forms") {
  CHECK(true_invariant(SystemId::MassSpring, std::vector<double>{1.0, 0.0},
                       {{"k", 2.0}, {"m", 1.0}}) == doctest::Approx(1.0));
  ParamSet lv{{"alpha", 0.3}, {"beta", 0.07}, {"gamma", 0.15}, {"delta", 0.065}};
  CHECK(true_invariant(SystemId::LotkaVolterra, std::vector<double>{1.0, 1.0}, lv) ==
        doctest::Approx(0.065 + 0.07));
  CHECK(true_invariant(SystemId::HenonHeiles, std::vector<double>{0.0, 0.0, 0.0, 0.0}, {}) ==
        0.0);
  CHECK_THROWS_AS(true_invariant(SystemId::Lorenz, std::vector<double>{1.0, 1.0, 1.0}, {}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      true_invariant(SystemId::LotkaVolterra, std::vector<double>{-1.0, 1.0}, lv),
      std::domain_error);
}

TEST_CASE("parameter sampling respects ranges and determinism") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    ParamSet p = sample_params(SystemId::MassSpring, rng);
    CHECK(p.at("k") >= 0.5);
    CHECK(p.at("k") <= 1.5);
    CHECK(p.at("m") >= 0.5);
    CHECK(p.at("m") <= 1.5);
  }
  CHECK(sample_params(SystemId::Lorenz, rng).empty());

  Rng a = Rng::derive(3, kTagParams, 1), b = Rng::derive(3, kTagParams, 1);
  CHECK(sample_params(SystemId::LotkaVolterra, a) == sample_params(SystemId::LotkaVolterra, b));
}

TEST_CASE("initial conditions live in the configured regions") {
  Rng rng(11);
  for (int i = 0; i < 20; ++i) {
    ParamSet p = sample_params(SystemId::MassSpring, rng);
    auto x = sample_initial_condition(SystemId::MassSpring, p, rng);
    REQUIRE(x.size() == 2);
    CHECK(std::abs(x[0]) <= 1.0);
    CHECK(std::abs(x[1]) <= 1.0);
  }
  for (int i = 0; i < 20; ++i) {
    ParamSet none;
    auto x = sample_initial_condition(SystemId::HenonHeiles, none, rng);
    CHECK(true_invariant(SystemId::HenonHeiles, x, none) <= 1.0 / 12.0 + 1e-12);
  }
  for (int i = 0; i < 10; ++i) {
    ParamSet p = sample_params(SystemId::LotkaVolterra, rng);
    auto x = sample_initial_condition(SystemId::LotkaVolterra, p, rng);
    CHECK(x[0] > 0.0);
    CHECK(x[1] > 0.0);
    double v = true_invariant(SystemId::LotkaVolterra, x, p);
    double xs = p.at("gamma") / p.at("delta"), ys = p.at("alpha") / p.at("beta");
    double vstar = true_invariant(SystemId::LotkaVolterra, std::vector<double>{xs, ys}, p);
    CHECK(v - vstar >= 0.2 - 1e-5);
    CHECK(v - vstar <= 0.6 + 1e-5);
  }
  {
    ParamSet none;
    auto u = sample_initial_condition(SystemId::Burgers, none, rng);
    REQUIRE(u.size() == 64);
    double mean = 0.0;
    for (double v : u) mean += v;
    CHECK(std::abs(mean / 64.0) < 1e-6);
    auto uk = sample_initial_condition(SystemId::Ks, none, rng);
    REQUIRE(uk.size() == 64);
    for (double v : uk) CHECK(std::abs(v) <= 0.05 + 1e-12);
  }
}

TEST_CASE("invariant drift vanishes along the flow") {
  for (SystemId id : {SystemId::MassSpring, SystemId::LotkaVolterra, SystemId::CoupledSprings,
                      SystemId::HenonHeiles}) {
    Rng rng(17);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
      ParamSet p = sample_params(id, rng);
      auto x = sample_initial_condition(id, p, rng);
      worst = std::max(worst, std::abs(drift_fd(id, x, p)));
    }
    INFO(system_name(id));
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("discovery variables order state, logs, params") {
  auto names = discovery_variable_names(SystemId::LotkaVolterra);
  REQUIRE(names.size() == 8);
  CHECK(names[0] == "x");
  CHECK(names[2] == "ln_x");
  CHECK(names[4] == "alpha");
  CHECK(discovery_dim(SystemId::MassSpring) == 4);
  CHECK(discovery_dim(SystemId::HenonHeiles) == 4);
  CHECK(discovery_dim(SystemId::CoupledSprings) == 7);
  CHECK(discovery_dim(SystemId::Lorenz) == 3);

  ParamSet p{{"alpha", 0.2}, {"beta", 0.07}, {"gamma", 0.15}, {"delta", 0.07}};
  std::vector<double> x{2.0, 3.0}, out(8);
  discovery_variables(SystemId::LotkaVolterra, x, p, out);
  CHECK(out[0] == 2.0);
  CHECK(out[2] == doctest::Approx(std::log(2.0 + 1e-8)));
  CHECK(out[4] == 0.2);
  CHECK(out[7] == 0.07);
}
