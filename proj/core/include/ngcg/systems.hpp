#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ngcg/rng.hpp"

namespace ngcg {

enum class SystemId {
  MassSpring,
  LotkaVolterra,
  CoupledSprings,
  HenonHeiles,
  DoublePendulum,
  Lorenz,
  ThreeBody,
  Burgers,
  Ks,
};

inline constexpr SystemId kAllSystems[] = {
    SystemId::MassSpring,   SystemId::LotkaVolterra, SystemId::CoupledSprings,
    SystemId::HenonHeiles,  SystemId::DoublePendulum, SystemId::Lorenz,
    SystemId::ThreeBody,    SystemId::Burgers,        SystemId::Ks,
};

std::string system_name(SystemId id);
SystemId system_from_name(const std::string& name);

enum class SystemKind { Ode, Pde };

struct ParamRange {
  std::string name;
  double lo;
  double hi;
};

// Per-trajectory physical parameters.
using ParamSet = std::map<std::string, double>;

struct SystemSpec {
  SystemId id;
  std::string name;
  SystemKind kind;
  std::size_t dim;          // state dimension (reduced dimension for PDEs)
  bool has_true_law;
  std::vector<ParamRange> param_ranges;  // varying parameters only
  double dt;                // uniform resample step
  std::size_t T;            // steps per trajectory (full scale)
  std::size_t n_traj;       // trajectory count (full scale)
  bool log_state_features;  // strictly-positive states get log companions
  std::vector<std::string> state_names;
};

const SystemSpec& system_spec(SystemId id);

// Right-hand side of the ODE systems.  Fixed constants (Lorenz sigma/rho/beta,
// double-pendulum masses, three-body mu) live inside.
void vector_field(SystemId id, std::span<const double> x, const ParamSet& p,
                  std::span<double> dxdt);

// Closed-form conserved quantity for the four systems that have one.
double true_invariant(SystemId id, std::span<const double> x, const ParamSet& p);

ParamSet sample_params(SystemId id, Rng& rng);

// ODE initial state, or the initial 64-point field for Burgers/KS.
std::vector<double> sample_initial_condition(SystemId id, const ParamSet& p, Rng& rng);

// Names of the discovery variables: state components, then log companions
// (when log_state_features), then varying parameters.
std::vector<std::string> discovery_variable_names(SystemId id);
std::size_t discovery_dim(SystemId id);

// Maps a raw state + params to the discovery-variable vector.
void discovery_variables(SystemId id, std::span<const double> x, const ParamSet& p,
                         std::span<double> out);

inline constexpr double kLogEps = 1e-8;       // guard inside ln(x + eps)
inline constexpr double kLorenzSettle = 10.0; // pre-sample transient (time units)

}  // namespace ngcg
