#include "ngcg/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ngcg {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Dormand-Prince 5(4) tableau.
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
// b - bhat, for the embedded 4th-order error estimate.
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

}  // namespace

OdeResult solve_ode(const OdeRhs& rhs, std::span<const double> x0, const OdeSolveConfig& cfg) {
  const std::size_t dim = x0.size();
  OdeResult res;
  res.dim = dim;
  res.n_out = cfg.n_out;
  res.states.assign(cfg.n_out * dim, 0.0);
  if (cfg.n_out < 2) throw std::invalid_argument("solve_ode: n_out must be >= 2");
  if (cfg.abs_tol <= 0.0 || cfg.rel_tol <= 0.0)
    throw std::invalid_argument("solve_ode: tolerances must be positive");

  const double span = cfg.t1 - cfg.t0;
  const double dt_out = span / static_cast<double>(cfg.n_out - 1);
  const double h_max = cfg.max_step > 0.0 ? cfg.max_step : dt_out;

  std::vector<double> y(x0.begin(), x0.end());
  std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim);
  std::vector<double> ytmp(dim), ynew(dim), yerr(dim);

  auto fail = [&](const std::string& why) {
    res.ok = false;
    res.error = why;
    return res;
  };
  auto finite = [](const std::vector<double>& v) {
    for (double x : v)
      if (!std::isfinite(x)) return false;
    return true;
  };

  for (std::size_t i = 0; i < dim; ++i) res.states[i] = y[i];
  if (!finite(y)) return fail("non-finite initial state");

  double t = cfg.t0;
  rhs(t, y, k1);
  if (!finite(k1)) return fail("non-finite derivative at t0");

  // Automatic initial step from scaled derivative norms.
  double d0 = 0.0, d1 = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    double sc = cfg.abs_tol + cfg.rel_tol * std::abs(y[i]);
    d0 += (y[i] / sc) * (y[i] / sc);
    d1 += (k1[i] / sc) * (k1[i] / sc);
  }
  d0 = std::sqrt(d0 / dim);
  d1 = std::sqrt(d1 / dim);
  double h = (d0 > 1e-5 && d1 > 1e-5) ? 0.01 * d0 / d1 : 1e-6;
  h = std::min(h, h_max);

  std::size_t next_out = 1;
  double err_prev = 1.0;
  const double h_min = 1e-14 * std::max(1.0, std::abs(span));

  while (next_out < cfg.n_out) {
    if (h < h_min) return fail("step size underflow");
    if (t + h > cfg.t1) h = cfg.t1 - t;

    for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * a21 * k1[i];
    rhs(t + h / 5.0, ytmp, k2);
    for (std::size_t i = 0; i < dim; ++i) ytmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    rhs(t + 3.0 * h / 10.0, ytmp, k3);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(t + 4.0 * h / 5.0, ytmp, k4);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(t + 8.0 * h / 9.0, ytmp, k5);
    for (std::size_t i = 0; i < dim; ++i)
      ytmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(t + h, ytmp, k6);
    for (std::size_t i = 0; i < dim; ++i)
      ynew[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(t + h, ynew, k7);  // FSAL

    if (!finite(ynew) || !finite(k7)) return fail("non-finite state during integration");

    double err = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      double sc = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(ynew[i]));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / dim);

    if (err <= 1.0) {
      // Dense output: cubic Hermite over [t, t+h] with end derivatives.
      double t_new = t + h;
      while (next_out < cfg.n_out) {
        double t_q = cfg.t0 + static_cast<double>(next_out) * dt_out;
        if (t_q > t_new + 1e-12 * std::abs(span)) break;
        double th = std::clamp((t_q - t) / h, 0.0, 1.0);
        double h00 = (1.0 + 2.0 * th) * (1.0 - th) * (1.0 - th);
        double h10 = th * (1.0 - th) * (1.0 - th);
        double h01 = th * th * (3.0 - 2.0 * th);
        double h11 = th * th * (th - 1.0);
        double* out = res.states.data() + next_out * dim;
        for (std::size_t i = 0; i < dim; ++i)
          out[i] = h00 * y[i] + h10 * h * k1[i] + h01 * ynew[i] + h11 * h * k7[i];
        ++next_out;
      }
      t = t_new;
      y = ynew;
      k1 = k7;
      double fac = 0.9 * std::pow(std::max(err, 1e-10), -0.2) * std::pow(err_prev, 0.04);
      h = std::min(h * std::clamp(fac, 0.2, 5.0), h_max);
      err_prev = std::max(err, 1e-10);
    } else {
      h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 1.0);
    }
  }
  return res;
}

void fft(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_pow2(n)) throw std::invalid_argument("fft: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse) {
    double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

std::vector<std::complex<double>> fft_forward_real(std::span<const double> field) {
  std::vector<std::complex<double>> a(field.begin(), field.end());
  fft(a, false);
  return a;
}

std::vector<double> ifft_to_real(std::vector<std::complex<double>> spectrum) {
  fft(spectrum, true);
  std::vector<double> out(spectrum.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spectrum[i].real();
  return out;
}

SpectralGrid SpectralGrid::burgers() {
  SpectralGrid g;
  g.n_x = 64;
  g.domain_length = 2.0 * kPi;
  g.wavenumbers.resize(64);
  for (std::size_t j = 0; j < 64; ++j) {
    long m = j <= 32 ? static_cast<long>(j) : static_cast<long>(j) - 64;
    g.wavenumbers[j] = 2.0 * kPi * static_cast<double>(m) / g.domain_length;
  }
  return g;
}

SpectralGrid SpectralGrid::ks() {
  SpectralGrid g = burgers();
  g.domain_length = 32.0;
  for (std::size_t j = 0; j < 64; ++j) {
    long m = j <= 32 ? static_cast<long>(j) : static_cast<long>(j) - 64;
    g.wavenumbers[j] = 2.0 * kPi * static_cast<double>(m) / 32.0;
  }
  return g;
}

namespace {

// First spectral derivative with 2/3-rule dealiasing and zeroed Nyquist.
std::vector<std::complex<double>> deriv_spectrum(const std::vector<std::complex<double>>& uh,
                                                 const SpectralGrid& grid) {
  std::vector<std::complex<double>> out(uh.size());
  for (std::size_t j = 0; j < uh.size(); ++j) {
    double k = j == uh.size() / 2 ? 0.0 : grid.wavenumbers[j];
    out[j] = std::complex<double>(0.0, k) * uh[j];
  }
  return out;
}

void dealias(std::vector<std::complex<double>>& s) {
  const std::size_t n = s.size();
  const std::size_t cut = n / 3;  // keep |m| <= n/3
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t m = j <= n / 2 ? j : n - j;
    if (m > cut) s[j] = 0.0;
  }
}

// Spectral advection term -u u_x for Burgers, dealiased.
std::vector<std::complex<double>> burgers_advection(const std::vector<std::complex<double>>& uh,
                                                    const SpectralGrid& grid) {
  auto ux = ifft_to_real(deriv_spectrum(uh, grid));
  auto u = ifft_to_real(uh);
  std::vector<std::complex<double>> prod(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) prod[j] = -u[j] * ux[j];
  fft(prod, false);
  dealias(prod);
  return prod;
}

}  // namespace

std::vector<double> step_burgers(std::span<const double> u, double dt, double nu,
                                 const SpectralGrid& grid) {
  if (nu <= 0.0) throw std::invalid_argument("step_burgers: viscosity must be positive");
  if (u.size() != grid.n_x) throw std::invalid_argument("step_burgers: field/grid mismatch");
  const std::size_t n = grid.n_x;
  auto uh = fft_forward_real(u);

  std::vector<double> half(n);
  for (std::size_t j = 0; j < n; ++j) {
    double k = grid.wavenumbers[j];
    half[j] = std::exp(-nu * k * k * dt / 2.0);
  }
  for (std::size_t j = 0; j < n; ++j) uh[j] *= half[j];

  // RK4 on the dealiased advection term in spectral space.
  auto k1 = burgers_advection(uh, grid);
  std::vector<std::complex<double>> tmp(n);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = uh[j] + 0.5 * dt * k1[j];
  auto k2 = burgers_advection(tmp, grid);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = uh[j] + 0.5 * dt * k2[j];
  auto k3 = burgers_advection(tmp, grid);
  for (std::size_t j = 0; j < n; ++j) tmp[j] = uh[j] + dt * k3[j];
  auto k4 = burgers_advection(tmp, grid);
  for (std::size_t j = 0; j < n; ++j)
    uh[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

  for (std::size_t j = 0; j < n; ++j) uh[j] *= half[j];

  auto out = ifft_to_real(std::move(uh));
  for (double v : out)
    if (!std::isfinite(v)) throw std::runtime_error("step_burgers: field became non-finite");
  return out;
}

EtdRk4Coeffs etdrk4_coeffs(const SpectralGrid& grid, double dt) {
  const std::size_t n = grid.n_x;
  EtdRk4Coeffs c;
  c.e_full.resize(n);
  c.e_half.resize(n);
  c.f1.resize(n);
  c.f2.resize(n);
  c.f3.resize(n);
  c.q.resize(n);
  const int M = 32;  // unit-circle contour points for the phi functions
  for (std::size_t j = 0; j < n; ++j) {
    double k = grid.wavenumbers[j];
    double L = k * k - k * k * k * k;
    double hL = dt * L;
    c.e_full[j] = std::exp(hL);
    c.e_half[j] = std::exp(hL / 2.0);
    std::complex<double> q(0.0), f1(0.0), f2(0.0), f3(0.0);
    for (int m = 0; m < M; ++m) {
      double ang = kPi * (static_cast<double>(m) + 0.5) / M;
      std::complex<double> r = hL + std::complex<double>(std::cos(ang), std::sin(ang));
      std::complex<double> er = std::exp(r);
      std::complex<double> r2 = r * r, r3 = r2 * r;
      q += (std::exp(r / 2.0) - 1.0) / r;
      f1 += (-4.0 - r + er * (4.0 - 3.0 * r + r2)) / r3;
      f2 += (2.0 + r + er * (-2.0 + r)) / r3;
      f3 += (-4.0 - 3.0 * r - r2 + er * (4.0 - r)) / r3;
    }
    c.q[j] = dt * q.real() / M;
    c.f1[j] = dt * f1.real() / M;
    c.f2[j] = dt * f2.real() / M;
    c.f3[j] = dt * f3.real() / M;
  }
  return c;
}

namespace {

// KS nonlinear term -u u_x = -(1/2) d/dx (u^2), dealiased.
std::vector<std::complex<double>> ks_nonlinear(const std::vector<std::complex<double>>& vh,
                                               const SpectralGrid& grid) {
  auto u = ifft_to_real(vh);
  std::vector<std::complex<double>> sq(u.size());
  for (std::size_t j = 0; j < u.size(); ++j) sq[j] = u[j] * u[j];
  fft(sq, false);
  dealias(sq);
  std::vector<std::complex<double>> out(sq.size());
  for (std::size_t j = 0; j < sq.size(); ++j) {
    double k = j == sq.size() / 2 ? 0.0 : grid.wavenumbers[j];
    out[j] = std::complex<double>(0.0, -0.5 * k) * sq[j];
  }
  return out;
}

}  // namespace

std::vector<double> step_ks(std::span<const double> u, const EtdRk4Coeffs& c,
                            const SpectralGrid& grid) {
  if (u.size() != grid.n_x) throw std::invalid_argument("step_ks: field/grid mismatch");
  const std::size_t n = grid.n_x;
  auto v = fft_forward_real(u);

  auto nv = ks_nonlinear(v, grid);
  std::vector<std::complex<double>> a(n), b(n), d(n);
  for (std::size_t j = 0; j < n; ++j) a[j] = c.e_half[j] * v[j] + c.q[j] * nv[j];
  auto na = ks_nonlinear(a, grid);
  for (std::size_t j = 0; j < n; ++j) b[j] = c.e_half[j] * v[j] + c.q[j] * na[j];
  auto nb = ks_nonlinear(b, grid);
  for (std::size_t j = 0; j < n; ++j) d[j] = c.e_half[j] * a[j] + c.q[j] * (2.0 * nb[j] - nv[j]);
  auto nd = ks_nonlinear(d, grid);
  for (std::size_t j = 0; j < n; ++j)
    v[j] = c.e_full[j] * v[j] + c.f1[j] * nv[j] + 2.0 * c.f2[j] * (na[j] + nb[j]) + c.f3[j] * nd[j];

  auto out = ifft_to_real(std::move(v));
  for (double x : out)
    if (!std::isfinite(x)) throw std::runtime_error("step_ks: field became non-finite");
  return out;
}

}  // namespace ngcg
