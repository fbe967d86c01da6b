#include "chainhydro/pdesolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "chainhydro/errors.hpp"

namespace chainhydro {

Ghosts ghost_values(const MacroField& field, const TensionSchedule& schedule,
                    const ThermoModel& thermo) {
  const std::size_t m = field.M();
  const double tau_bar = schedule.value(field.t);
  Ghosts g;
  g.r_left = field.r.front();
  g.p_left = -field.p.front();
  g.tau_left = thermo.tau_of_ell(g.r_left);
  g.p_right = field.p[m - 1];
  g.tau_right = 2.0 * tau_bar - thermo.tau_of_ell(field.r[m - 1]);
  g.r_right = thermo.ell_of_tau(g.tau_right);
  return g;
}

double macro_stable_dt(const MacroField& field, const ThermoModel& thermo, double cfl) {
  double max_slope = 0.0;
  for (double r : field.r) max_slope = std::max(max_slope, 1.0 / thermo.dell_dtau(thermo.tau_of_ell(r)));
  const double h = field.dx();
  double dt = h / std::sqrt(max_slope);
  if (field.eps > 0.0) dt = std::min(dt, h * h / (2.0 * field.eps * std::max(max_slope, 1.0)));
  return cfl * dt;
}

void macro_rhs(const MacroField& field, const TensionSchedule& schedule, const ThermoModel& thermo,
               std::vector<double>& dr, std::vector<double>& dp) {
  const std::size_t m = field.M();
  if (m < 2) throw std::invalid_argument("macro solver needs at least two cells");
  const double h = field.dx();
  const double tau_bar = schedule.value(field.t);

  // Padded tension and momentum arrays: index c + 1 holds cell c.
  thread_local std::vector<double> tau, p;
  tau.resize(m + 2);
  p.resize(m + 2);
  for (std::size_t c = 0; c < m; ++c) {
    tau[c + 1] = thermo.tau_of_ell(field.r[c]);
    p[c + 1] = field.p[c];
  }
  tau[0] = tau[1];
  p[0] = -p[1];
  tau[m + 1] = 2.0 * tau_bar - tau[m];
  p[m + 1] = p[m];

  dr.resize(m);
  dp.resize(m);
  const double half_inv_h = 0.5 / h;
  const double eps_h2 = field.eps / (h * h);
  for (std::size_t c = 1; c <= m; ++c) {
    dr[c - 1] = (p[c + 1] - p[c - 1]) * half_inv_h + eps_h2 * (tau[c + 1] - 2.0 * tau[c] + tau[c - 1]);
    dp[c - 1] = (tau[c + 1] - tau[c - 1]) * half_inv_h + eps_h2 * (p[c + 1] - 2.0 * p[c] + p[c - 1]);
  }
}

MacroField macro_step(const MacroField& field, double dt, const TensionSchedule& schedule,
                      const ThermoModel& thermo) {
  const std::size_t m = field.M();
  std::vector<double> dr, dp;

  MacroField s1 = field;
  macro_rhs(field, schedule, thermo, dr, dp);
  for (std::size_t c = 0; c < m; ++c) {
    s1.r[c] += dt * dr[c];
    s1.p[c] += dt * dp[c];
  }
  s1.t = field.t + dt;

  MacroField s2 = field;
  macro_rhs(s1, schedule, thermo, dr, dp);
  for (std::size_t c = 0; c < m; ++c) {
    s2.r[c] = 0.75 * field.r[c] + 0.25 * (s1.r[c] + dt * dr[c]);
    s2.p[c] = 0.75 * field.p[c] + 0.25 * (s1.p[c] + dt * dp[c]);
  }
  s2.t = field.t + 0.5 * dt;

  MacroField out = field;
  macro_rhs(s2, schedule, thermo, dr, dp);
  bool finite = true;
  for (std::size_t c = 0; c < m; ++c) {
    out.r[c] = field.r[c] / 3.0 + 2.0 / 3.0 * (s2.r[c] + dt * dr[c]);
    out.p[c] = field.p[c] / 3.0 + 2.0 / 3.0 * (s2.p[c] + dt * dp[c]);
    finite &= std::isfinite(out.r[c]) && std::isfinite(out.p[c]);
  }
  out.t = field.t + dt;
  if (!finite) throw BlowUp("macro solver produced non-finite values at t = " + std::to_string(out.t));
  return out;
}

double total_variation(const std::vector<double>& a) {
  double tv = 0.0;
  for (std::size_t c = 1; c < a.size(); ++c) tv += std::abs(a[c] - a[c - 1]);
  return tv;
}

MacroTrajectory solve(const std::function<double(double)>& r0,
                      const std::function<double(double)>& p0, const TensionSchedule& schedule,
                      const ThermoModel& thermo, double eps, std::size_t M,
                      const std::vector<double>& frame_times, double cfl) {
  if (frame_times.empty() || frame_times.front() != 0.0)
    throw std::invalid_argument("solve: frame times must start at 0");
  if (!(eps >= 0.0)) throw ConfigInvalid("macro.eps", "viscosity must be non-negative");
  MacroField field(M, eps);
  for (std::size_t c = 0; c < M; ++c) {
    const double x = (static_cast<double>(c) + 0.5) / static_cast<double>(M);
    field.r[c] = r0(x);
    field.p[c] = p0(x);
  }

  MacroTrajectory out;
  out.fields.N = M;
  out.fields.l = 0;
  auto record = [&] {
    out.fields.times.push_back(field.t);
    out.fields.r.push_back(field.r);
    out.fields.p.push_back(field.p);
    out.max_total_variation = std::max(out.max_total_variation, total_variation(field.r));
  };
  record();
  for (std::size_t k = 1; k < frame_times.size(); ++k) {
    const double target = frame_times[k];
    if (!(target > frame_times[k - 1])) throw std::invalid_argument("solve: frame times must increase");
    while (field.t < target) {
      double dt = macro_stable_dt(field, thermo, cfl);
      const double remaining = target - field.t;
      if (dt >= remaining * (1.0 - 1e-12)) dt = remaining;
      else if (dt > 0.5 * remaining) dt = 0.5 * remaining;
      field = macro_step(field, dt, schedule, thermo);
      ++out.steps;
      if (dt == remaining) field.t = target;
    }
    record();
  }
  return out;
}

} // namespace chainhydro
