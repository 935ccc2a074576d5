#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ngcg {

struct OdeSolveConfig {
  double abs_tol = 1e-9;
  double rel_tol = 1e-9;
  double t0 = 0.0;
  double t1 = 1.0;
  std::size_t n_out = 500;  // uniform output samples, first at t0
  double max_step = 0.0;    // 0 -> capped at the output spacing
};

struct OdeResult {
  std::vector<double> states;  // n_out x dim, row-major
  std::size_t n_out = 0;
  std::size_t dim = 0;
  bool ok = true;
  std::string error;

  std::span<const double> row(std::size_t i) const {
    return {states.data() + i * dim, dim};
  }
};

using OdeRhs = std::function<void(double t, std::span<const double> x, std::span<double> dxdt)>;

// Dormand-Prince 5(4) with PI step control and cubic Hermite dense output on
// a uniform grid.  Steps are capped at the output spacing so the interpolant
// error stays far below the integration tolerance.
OdeResult solve_ode(const OdeRhs& rhs, std::span<const double> x0, const OdeSolveConfig& cfg);

// Radix-2 FFT.  Forward leaves values unnormalized; inverse divides by N.
void fft(std::vector<std::complex<double>>& a, bool inverse);
std::vector<std::complex<double>> fft_forward_real(std::span<const double> field);
std::vector<double> ifft_to_real(std::vector<std::complex<double>> spectrum);

struct SpectralGrid {
  std::size_t n_x;
  double domain_length;
  std::vector<double> wavenumbers;  // FFT ordering, 2*pi*m/L with signed m

  static SpectralGrid burgers();  // 64 points on [0, 2*pi)
  static SpectralGrid ks();       // 64 points on [0, 32)
};

// One Strang-split step of viscous Burgers: exact half-step diffusion in
// spectrum, one RK4 step of the dealiased advection term, half-step diffusion.
std::vector<double> step_burgers(std::span<const double> u, double dt, double nu,
                                 const SpectralGrid& grid);

// Precomputed ETD-RK4 coefficients for the KS linear symbol k^2 - k^4.
struct EtdRk4Coeffs {
  std::vector<std::complex<double>> e_full, e_half, f1, f2, f3, q;
};
EtdRk4Coeffs etdrk4_coeffs(const SpectralGrid& grid, double dt);

// One ETD-RK4 step of Kuramoto-Sivashinsky u_t = -u u_x - u_xx - u_xxxx.
std::vector<double> step_ks(std::span<const double> u, const EtdRk4Coeffs& c,
                            const SpectralGrid& grid);

}  // namespace ngcg
