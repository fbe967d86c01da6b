#pragma once

#include <functional>
#include <vector>

#include "chainhydro/observables.hpp"
#include "chainhydro/schedule.hpp"
#include "chainhydro/thermo.hpp"

namespace chainhydro {

// Cell-centred fields of the viscous p-system
//   r_t = p_x + eps (tau(r))_xx,   p_t = (tau(r))_x + eps p_xx
// on M uniform cells of [0,1], cell c centred at (c + 1/2) / M.
struct MacroField {
  std::vector<double> r;
  std::vector<double> p;
  double t = 0.0;
  double eps = 0.0;

  MacroField() = default;
  MacroField(std::size_t m, double eps_) : r(m, 0.0), p(m, 0.0), eps(eps_) {}
  std::size_t M() const { return r.size(); }
  double dx() const { return 1.0 / static_cast<double>(r.size()); }
};

// Ghost cells realising p(t,0) = 0, tau(r(t,1)) = tau_bar(t) and the Neumann
// conditions on r at x = 0 and on p at x = 1. The tension ghosts are what the
// stencils use; r_right is the stretch carrying tau_right.
struct Ghosts {
  double r_left = 0.0;
  double p_left = 0.0;
  double tau_left = 0.0;
  double r_right = 0.0;
  double p_right = 0.0;
  double tau_right = 0.0;
};

Ghosts ghost_values(const MacroField& field, const TensionSchedule& schedule,
                    const ThermoModel& thermo);

// Largest dt allowed by dt <= cfl * min(dx / sqrt(max tau'), dx^2 / (2 eps max(tau', 1))).
double macro_stable_dt(const MacroField& field, const ThermoModel& thermo, double cfl = 0.4);

// Semi-discrete right-hand side (central differences) at field.t.
void macro_rhs(const MacroField& field, const TensionSchedule& schedule, const ThermoModel& thermo,
               std::vector<double>& dr, std::vector<double>& dp);

// One three-stage strong-stability-preserving Runge-Kutta step of size dt.
// Throws BlowUp on non-finite values.
MacroField macro_step(const MacroField& field, double dt, const TensionSchedule& schedule,
                      const ThermoModel& thermo);

struct MacroTrajectory {
  EmpiricalField fields;   // l = 0, one frame per requested time
  std::size_t steps = 0;
  double max_total_variation = 0.0;   // of r over the recorded frames
};

double total_variation(const std::vector<double>& a);

// Marches from the profiles sampled at cell centres to the last frame time.
// frame_times must be increasing and start at t = 0.
MacroTrajectory solve(const std::function<double(double)>& r0,
                      const std::function<double(double)>& p0, const TensionSchedule& schedule,
                      const ThermoModel& thermo, double eps, std::size_t M,
                      const std::vector<double>& frame_times, double cfl = 0.4);

} // namespace chainhydro
