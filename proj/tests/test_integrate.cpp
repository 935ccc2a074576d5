#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "ngcg/integrate.hpp"
#include "ngcg/rng.hpp"
#include "ngcg/systems.hpp"

using namespace ngcg;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Naive O(N^2) DFT oracle.
std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  std::vector<std::complex<double>> out(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0);
    for (std::size_t j = 0; j < n; ++j) {
      double ang = -2.0 * kPi * static_cast<double>(k * j) / static_cast<double>(n);
      acc += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

}  // namespace

TEST_CASE("fft basics") {
  std::vector<std::complex<double>> impulse(8, 0.0);
  impulse[0] = 1.0;
  fft(impulse, false);
  for (const auto& v : impulse) {
    CHECK(v.real() == doctest::Approx(1.0));
    CHECK(v.imag() == doctest::Approx(0.0));
  }

  std::vector<std::complex<double>> constant(8, 3.5);
  fft(constant, false);
  CHECK(constant[0].real() == doctest::Approx(28.0));
  for (std::size_t i = 1; i < 8; ++i) CHECK(std::abs(constant[i]) < 1e-12);

  std::vector<std::complex<double>> bad(12, 0.0);
  CHECK_THROWS_AS(fft(bad, false), std::invalid_argument);
}

TEST_CASE("fft matches dft oracle and round-trips") {
  Rng rng(21);
  std::vector<std::complex<double>> a(64);
  for (auto& v : a) v = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
  auto want = dft(a);
  auto got = a;
  fft(got, false);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(got[i] - want[i]) < 1e-10);

  fft(got, true);
  for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(got[i] - a[i]) < 1e-12);
}

TEST_CASE("rk45 reproduces the harmonic oscillator") {
  ParamSet p{{"k", 1.0}, {"m", 1.0}};
  OdeRhs rhs = [&](double, std::span<const double> x, std::span<double> f) {
    vector_field(SystemId::MassSpring, x, p, f);
  };
  OdeSolveConfig cfg;
  cfg.t1 = 2.0 * kPi;
  cfg.n_out = 500;
  OdeResult r = solve_ode(rhs, std::vector<double>{1.0, 0.0}, cfg);
  REQUIRE(r.ok);
  auto last = r.row(499);
  CHECK(std::abs(last[0] - 1.0) < 1e-6);
  CHECK(std::abs(last[1] - 0.0) < 1e-6);
  // interior points against the analytic solution (cos t, -sin t)
  for (std::size_t j = 0; j < 500; j += 37) {
    double t = cfg.t1 * static_cast<double>(j) / 499.0;
    CHECK(std::abs(r.row(j)[0] - std::cos(t)) < 1e-7);
    CHECK(std::abs(r.row(j)[1] + std::sin(t)) < 1e-7);
  }
}

TEST_CASE("rk45 zero field gives constant trajectory") {
  OdeRhs rhs = [](double, std::span<const double>, std::span<double> f) {
    for (auto& v : f) v = 0.0;
  };
  OdeSolveConfig cfg;
  cfg.t1 = 5.0;
  cfg.n_out = 50;
  OdeResult r = solve_ode(rhs, std::vector<double>{2.5, -1.0}, cfg);
  REQUIRE(r.ok);
  for (std::size_t j = 0; j < 50; ++j) {
    CHECK(r.row(j)[0] == doctest::Approx(2.5));
    CHECK(r.row(j)[1] == doctest::Approx(-1.0));
  }
}

TEST_CASE("rk45 keeps the oscillator energy constant") {
  Rng rng(3);
  for (int rep = 0; rep < 5; ++rep) {
    ParamSet p = sample_params(SystemId::MassSpring, rng);
    auto x0 = sample_initial_condition(SystemId::MassSpring, p, rng);
    OdeRhs rhs = [&](double, std::span<const double> x, std::span<double> f) {
      vector_field(SystemId::MassSpring, x, p, f);
    };
    OdeSolveConfig cfg;
    cfg.t1 = 0.1 * 499.0;
    cfg.n_out = 500;
    OdeResult r = solve_ode(rhs, x0, cfg);
    REQUIRE(r.ok);
    double e0 = true_invariant(SystemId::MassSpring, r.row(0), p);
    double lo = e0, hi = e0;
    for (std::size_t j = 1; j < 500; ++j) {
      double e = true_invariant(SystemId::MassSpring, r.row(j), p);
      lo = std::min(lo, e);
      hi = std::max(hi, e);
    }
    CHECK((hi - lo) / std::abs(e0) < 1e-6);
  }
}

TEST_CASE("rk45 reports divergence") {
  OdeRhs rhs = [](double, std::span<const double> x, std::span<double> f) {
    f[0] = x[0] * x[0];  // blows up in finite time
  };
  OdeSolveConfig cfg;
  cfg.t1 = 10.0;
  cfg.n_out = 100;
  OdeResult r = solve_ode(rhs, std::vector<double>{1.0}, cfg);
  CHECK_FALSE(r.ok);
  CHECK(!r.error.empty());
}

TEST_CASE("burgers step fixed points") {
  auto grid = SpectralGrid::burgers();
  std::vector<double> zero(64, 0.0);
  auto z1 = step_burgers(zero, 0.002, 0.05, grid);
  for (double v : z1) CHECK(std::abs(v) < 1e-15);

  std::vector<double> c(64, 0.7);
  auto c1 = step_burgers(c, 0.002, 0.05, grid);
  for (double v : c1) CHECK(v == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("burgers step is third-order accurate") {
  auto grid = SpectralGrid::burgers();
  std::vector<double> u(64);
  for (std::size_t j = 0; j < 64; ++j) u[j] = std::sin(2.0 * kPi * j / 64.0);

  auto ref = u;
  const double dt = 0.02;
  for (int s = 0; s < 200; ++s) ref = step_burgers(ref, dt / 200.0, 0.05, grid);

  auto one = step_burgers(u, dt, 0.05, grid);
  auto two = u;
  two = step_burgers(two, dt / 2.0, 0.05, grid);
  two = step_burgers(two, dt / 2.0, 0.05, grid);

  double e1 = 0.0, e2 = 0.0;
  for (std::size_t j = 0; j < 64; ++j) {
    e1 = std::max(e1, std::abs(one[j] - ref[j]));
    e2 = std::max(e2, std::abs(two[j] - ref[j]));
  }
  CHECK(e1 < 1e-5);
  CHECK(e1 / e2 > 3.5);  // local order three: halving the step quarters the error
}

TEST_CASE("ks step preserves the mean and stays stable") {
  auto grid = SpectralGrid::ks();
  auto coeffs = etdrk4_coeffs(grid, 0.1);

  std::vector<double> zero(64, 0.0);
  auto z1 = step_ks(zero, coeffs, grid);
  for (double v : z1) CHECK(std::abs(v) < 1e-15);

  Rng rng(5);
  ParamSet none;
  auto u = sample_initial_condition(SystemId::Ks, none, rng);
  double m0 = 0.0;
  for (double v : u) m0 += v;
  m0 /= 64.0;

  auto u1 = step_ks(u, coeffs, grid);
  double m1 = 0.0;
  for (double v : u1) m1 += v;
  m1 /= 64.0;
  CHECK(std::abs(m1 - m0) < 1e-10);

  for (int s = 0; s < 500; ++s) u1 = step_ks(u1, coeffs, grid);
  double mT = 0.0;
  for (double v : u1) mT += v;
  mT /= 64.0;
  CHECK(std::abs(mT - m0) < 1e-8);
  double amp = 0.0;
  for (double v : u1) amp = std::max(amp, std::abs(v));
  CHECK(amp > 0.1);   // instability has amplified the seed modes
  CHECK(amp < 10.0);  // but the solution saturated
}

TEST_CASE("ks step error shrinks fast with dt") {
  auto grid = SpectralGrid::ks();
  Rng rng(8);
  ParamSet none;
  auto u = sample_initial_condition(SystemId::Ks, none, rng);
  for (auto& v : u) v *= 100.0;  // O(1) field exercises the nonlinear term

  const double dt = 0.025;
  auto ref = u;
  for (int s = 0; s < 100; ++s) ref = step_ks(ref, etdrk4_coeffs(grid, dt / 100.0), grid);
  auto one = step_ks(u, etdrk4_coeffs(grid, dt), grid);
  auto half = u;
  auto ch = etdrk4_coeffs(grid, dt / 2.0);
  half = step_ks(half, ch, grid);
  half = step_ks(half, ch, grid);

  double e1 = 0.0, e2 = 0.0;
  for (std::size_t j = 0; j < 64; ++j) {
    e1 = std::max(e1, std::abs(one[j] - ref[j]));
    e2 = std::max(e2, std::abs(half[j] - ref[j]));
  }
  CHECK(e1 / e2 > 10.0);  // locally fifth order asymptotically; stiff modes reduce it
}
