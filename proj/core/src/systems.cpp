#include "ngcg/systems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ngcg {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kGravity = 9.8;        // double pendulum
constexpr double kMu = 0.01215;         // three-body Earth-Moon mass ratio
constexpr double kLorenzSigma = 10.0;
constexpr double kLorenzRho = 28.0;
constexpr double kLorenzBeta = 8.0 / 3.0;

double f32(double v) { return static_cast<double>(static_cast<float>(v)); }

const SystemSpec kSpecs[] = {
    {SystemId::MassSpring, "mass_spring", SystemKind::Ode, 2, true,
     {{"k", 0.5, 1.5}, {"m", 0.5, 1.5}}, 0.1, 500, 500, false, {"q", "p"}},
    {SystemId::LotkaVolterra, "lotka_volterra", SystemKind::Ode, 2, true,
     {{"alpha", 0.15, 0.35}, {"beta", 0.065, 0.085}, {"gamma", 0.14, 0.16}, {"delta", 0.06, 0.08}},
     0.4, 500, 500, true, {"x", "y"}},
    {SystemId::CoupledSprings, "coupled_springs", SystemKind::Ode, 4, true,
     {{"k1", 0.8, 1.2}, {"k2", 0.8, 1.2}, {"k3", 0.8, 1.2}}, 0.1, 500, 500, false,
     {"q1", "q2", "p1", "p2"}},
    {SystemId::HenonHeiles, "henon_heiles", SystemKind::Ode, 4, true,
     {}, 0.1, 500, 500, false, {"x", "y", "px", "py"}},
    {SystemId::DoublePendulum, "double_pendulum", SystemKind::Ode, 4, false,
     {}, 0.02, 500, 500, false, {"th1", "th2", "p1", "p2"}},
    {SystemId::Lorenz, "lorenz", SystemKind::Ode, 3, false,
     {}, 0.02, 500, 500, false, {"x", "y", "z"}},
    {SystemId::ThreeBody, "three_body", SystemKind::Ode, 4, false,
     {}, 0.05, 500, 500, false, {"x", "y", "vx", "vy"}},
    {SystemId::Burgers, "burgers", SystemKind::Pde, 3, false,
     {}, 0.002, 500, 1000, false, {"m1", "m2", "m3"}},
    {SystemId::Ks, "ks", SystemKind::Pde, 3, false,
     {}, 0.1, 500, 1000, false, {"m1", "m2", "m3"}},
};

double get(const ParamSet& p, const char* name) {
  auto it = p.find(name);
  if (it == p.end()) throw std::invalid_argument(std::string("missing parameter ") + name);
  return it->second;
}

double lv_potential(double x, double y, double a, double b, double g, double d) {
  return d * x - g * std::log(x) + b * y - a * std::log(y);
}

}  // namespace

std::string system_name(SystemId id) { return system_spec(id).name; }

SystemId system_from_name(const std::string& name) {
  for (const auto& s : kSpecs)
    if (s.name == name) return s.id;
  throw std::invalid_argument("unknown system: " + name);
}

const SystemSpec& system_spec(SystemId id) {
  for (const auto& s : kSpecs)
    if (s.id == id) return s;
  throw std::invalid_argument("unknown system id");
}

void vector_field(SystemId id, std::span<const double> x, const ParamSet& p,
                  std::span<double> dxdt) {
  const auto& spec = system_spec(id);
  if (spec.kind != SystemKind::Ode) throw std::invalid_argument(spec.name + " is not an ODE");
  if (x.size() != spec.dim || dxdt.size() != spec.dim)
    throw std::invalid_argument("state dimension mismatch for " + spec.name);

  switch (id) {
    case SystemId::MassSpring: {
      double k = get(p, "k"), m = get(p, "m");
      dxdt[0] = x[1] / m;
      dxdt[1] = -k * x[0];
      break;
    }
    case SystemId::LotkaVolterra: {
      double a = get(p, "alpha"), b = get(p, "beta"), g = get(p, "gamma"), d = get(p, "delta");
      dxdt[0] = a * x[0] - b * x[0] * x[1];
      dxdt[1] = d * x[0] * x[1] - g * x[1];
      break;
    }
    case SystemId::CoupledSprings: {
      double k1 = get(p, "k1"), k2 = get(p, "k2"), k3 = get(p, "k3");
      dxdt[0] = x[2];
      dxdt[1] = x[3];
      dxdt[2] = -k1 * x[0] + k2 * (x[1] - x[0]);
      dxdt[3] = -k2 * (x[1] - x[0]) - k3 * x[1];
      break;
    }
    case SystemId::HenonHeiles: {
      dxdt[0] = x[2];
      dxdt[1] = x[3];
      dxdt[2] = -x[0] - 2.0 * x[0] * x[1];
      dxdt[3] = -x[1] - x[0] * x[0] + x[1] * x[1];
      break;
    }
    case SystemId::DoublePendulum: {
      // Canonical equations from H = (p1^2 + 2 p2^2 - 2 p1 p2 cos D) / (2 (1 + sin^2 D))
      //                             - 2 g cos(th1) - g cos(th2),  D = th1 - th2,
      // with m1 = m2 = 1, L1 = L2 = 1, g = 9.8.
      double d = x[0] - x[1];
      double sd = std::sin(d), cd = std::cos(d);
      double den = 1.0 + sd * sd;
      double p1 = x[2], p2 = x[3];
      double h1 = p1 * p2 * sd / den;
      double h2 = (p1 * p1 + 2.0 * p2 * p2 - 2.0 * p1 * p2 * cd) * sd * cd / (den * den);
      dxdt[0] = (p1 - p2 * cd) / den;
      dxdt[1] = (2.0 * p2 - p1 * cd) / den;
      dxdt[2] = -2.0 * kGravity * std::sin(x[0]) - h1 + h2;
      dxdt[3] = -kGravity * std::sin(x[1]) + h1 - h2;
      break;
    }
    case SystemId::Lorenz: {
      dxdt[0] = kLorenzSigma * (x[1] - x[0]);
      dxdt[1] = x[0] * (kLorenzRho - x[2]) - x[1];
      dxdt[2] = x[0] * x[1] - kLorenzBeta * x[2];
      break;
    }
    case SystemId::ThreeBody: {
      // Planar circular restricted three-body problem in the rotating frame.
      double px = x[0], py = x[1], vx = x[2], vy = x[3];
      double r1sq = (px + kMu) * (px + kMu) + py * py;
      double r2sq = (px - 1.0 + kMu) * (px - 1.0 + kMu) + py * py;
      double r1c = r1sq * std::sqrt(r1sq);
      double r2c = r2sq * std::sqrt(r2sq);
      dxdt[0] = vx;
      dxdt[1] = vy;
      dxdt[2] = 2.0 * vy + px - (1.0 - kMu) * (px + kMu) / r1c - kMu * (px - 1.0 + kMu) / r2c;
      dxdt[3] = -2.0 * vx + py - (1.0 - kMu) * py / r1c - kMu * py / r2c;
      break;
    }
    default:
      throw std::invalid_argument("vector_field: not an ODE system");
  }
}

double true_invariant(SystemId id, std::span<const double> x, const ParamSet& p) {
  const auto& spec = system_spec(id);
  if (!spec.has_true_law)
    throw std::invalid_argument(spec.name + " has no ground-truth conservation law");
  if (x.size() != spec.dim) throw std::invalid_argument("state dimension mismatch");
  switch (id) {
    case SystemId::MassSpring: {
      double k = get(p, "k"), m = get(p, "m");
      return x[1] * x[1] / (2.0 * m) + 0.5 * k * x[0] * x[0];
    }
    case SystemId::LotkaVolterra: {
      if (x[0] <= 0.0 || x[1] <= 0.0)
        throw std::domain_error("lotka_volterra invariant needs positive state");
      return lv_potential(x[0], x[1], get(p, "alpha"), get(p, "beta"), get(p, "gamma"),
                          get(p, "delta"));
    }
    case SystemId::CoupledSprings: {
      double k1 = get(p, "k1"), k2 = get(p, "k2"), k3 = get(p, "k3");
      double dq = x[1] - x[0];
      return 0.5 * x[2] * x[2] + 0.5 * x[3] * x[3] + 0.5 * k1 * x[0] * x[0] +
             0.5 * k2 * dq * dq + 0.5 * k3 * x[1] * x[1];
    }
    case SystemId::HenonHeiles: {
      return 0.5 * (x[2] * x[2] + x[3] * x[3]) + 0.5 * (x[0] * x[0] + x[1] * x[1]) +
             x[0] * x[0] * x[1] - x[1] * x[1] * x[1] / 3.0;
    }
    default:
      throw std::invalid_argument("no invariant");
  }
}

ParamSet sample_params(SystemId id, Rng& rng) {
  ParamSet out;
  for (const auto& r : system_spec(id).param_ranges) out[r.name] = f32(rng.uniform(r.lo, r.hi));
  return out;
}

std::vector<double> sample_initial_condition(SystemId id, const ParamSet& p, Rng& rng) {
  std::vector<double> x;
  switch (id) {
    case SystemId::MassSpring:
      x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
      break;
    case SystemId::LotkaVolterra: {
      // Start on a level curve of the invariant: target level Vbar above the
      // equilibrium value along a random ray from (gamma/delta, alpha/beta).
      double a = get(p, "alpha"), b = get(p, "beta"), g = get(p, "gamma"), d = get(p, "delta");
      double xs = g / d, ys = a / b;
      double vstar = lv_potential(xs, ys, a, b, g, d);
      double vbar = rng.uniform(0.2, 0.6);
      double ang = rng.uniform(0.0, 2.0 * kPi);
      double dx = std::cos(ang), dy = std::sin(ang);
      double tmax = 1e9;
      if (dx < 0.0) tmax = std::min(tmax, 0.999 / -dx);
      if (dy < 0.0) tmax = std::min(tmax, 0.999 / -dy);
      auto lev = [&](double t) {
        return lv_potential(xs * (1.0 + t * dx), ys * (1.0 + t * dy), a, b, g, d) - vstar - vbar;
      };
      double lo = 0.0, hi = std::min(1.0, tmax);
      while (lev(hi) < 0.0 && hi < tmax) hi = std::min(hi * 1.8, tmax);
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        (lev(mid) < 0.0 ? lo : hi) = mid;
      }
      double t = 0.5 * (lo + hi);
      x = {xs * (1.0 + t * dx), ys * (1.0 + t * dy)};
      break;
    }
    case SystemId::CoupledSprings:
      x = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
           rng.uniform(-0.5, 0.5)};
      break;
    case SystemId::HenonHeiles: {
      // Rejection sample inside the stable well: H <= 1/12.
      ParamSet none;
      for (;;) {
        x = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
             rng.uniform(-0.5, 0.5)};
        if (true_invariant(SystemId::HenonHeiles, x, none) <= 1.0 / 12.0) break;
      }
      break;
    }
    case SystemId::DoublePendulum:
      // Chaotic regime; small-angle starts admit polynomial near-invariants.
      x = {rng.uniform(-1.6, 1.6), rng.uniform(-1.6, 1.6), 0.0, 0.0};
      break;
    case SystemId::Lorenz:
      x = {rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0), rng.uniform(-10.0, 10.0)};
      break;
    case SystemId::ThreeBody: {
      // Near L4 with a small tangential velocity.
      double l4x = 0.5 - kMu, l4y = std::sqrt(3.0) / 2.0;
      double ang = rng.uniform(0.0, 2.0 * kPi);
      double rad = rng.uniform(0.0, 0.05);
      double speed = rng.uniform(-0.02, 0.02);
      x = {l4x + rad * std::cos(ang), l4y + rad * std::sin(ang), -speed * std::sin(ang),
           speed * std::cos(ang)};
      break;
    }
    case SystemId::Burgers: {
      // u0(x) = sum_{m=1..M} a_m sin(m x + phi_m) on [0, 2 pi), 64 points.
      std::size_t modes = 2 + rng.below(4);
      std::vector<double> amp(modes), phase(modes);
      for (std::size_t m = 0; m < modes; ++m) {
        amp[m] = rng.uniform(-0.3, 0.3);
        phase[m] = rng.uniform(0.0, 2.0 * kPi);
      }
      x.assign(64, 0.0);
      for (std::size_t j = 0; j < 64; ++j) {
        double xx = 2.0 * kPi * static_cast<double>(j) / 64.0;
        for (std::size_t m = 0; m < modes; ++m)
          x[j] += amp[m] * std::sin(static_cast<double>(m + 1) * xx + phase[m]);
      }
      break;
    }
    case SystemId::Ks: {
      // Five low-frequency cosine modes on [0, 32), 64 points.
      std::vector<double> amp(5), phase(5);
      for (std::size_t m = 0; m < 5; ++m) {
        amp[m] = rng.uniform(-0.01, 0.01);
        phase[m] = rng.uniform(0.0, 2.0 * kPi);
      }
      x.assign(64, 0.0);
      for (std::size_t j = 0; j < 64; ++j) {
        double xx = 32.0 * static_cast<double>(j) / 64.0;
        for (std::size_t m = 0; m < 5; ++m)
          x[j] += amp[m] * std::cos(2.0 * kPi * static_cast<double>(m + 1) * xx / 32.0 + phase[m]);
      }
      break;
    }
  }
  for (auto& v : x) v = f32(v);
  return x;
}

std::size_t discovery_dim(SystemId id) {
  const auto& spec = system_spec(id);
  std::size_t n = spec.dim + spec.param_ranges.size();
  if (spec.log_state_features) n += spec.dim;
  return n;
}

std::vector<std::string> discovery_variable_names(SystemId id) {
  const auto& spec = system_spec(id);
  std::vector<std::string> names = spec.state_names;
  if (spec.log_state_features)
    for (const auto& s : spec.state_names) names.push_back("ln_" + s);
  for (const auto& r : spec.param_ranges) names.push_back(r.name);
  return names;
}

void discovery_variables(SystemId id, std::span<const double> x, const ParamSet& p,
                         std::span<double> out) {
  const auto& spec = system_spec(id);
  std::size_t k = 0;
  for (std::size_t i = 0; i < spec.dim; ++i) out[k++] = x[i];
  if (spec.log_state_features)
    for (std::size_t i = 0; i < spec.dim; ++i)
      out[k++] = std::log(std::max(x[i], 0.0) + kLogEps);  // floored, never NaN
  for (const auto& r : spec.param_ranges) out[k++] = get(p, r.name.c_str());
}

}  // namespace ngcg
