#include "chainhydro/microsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "chainhydro/errors.hpp"

namespace chainhydro {

std::string_view to_string(BoundaryMode mode) {
  return mode == BoundaryMode::Physical ? "physical" : "periodic";
}

BoundaryMode parse_boundary_mode(std::string_view name) {
  if (name == "physical") return BoundaryMode::Physical;
  if (name == "periodic") return BoundaryMode::Periodic;
  throw ConfigInvalid("sim.boundary", "unknown boundary mode '" + std::string(name) + "'");
}

double noise_strength(std::size_t n, double alpha_sigma) {
  return std::pow(static_cast<double>(n), 0.5 + alpha_sigma);
}

double noise_strength(const SimConfig& cfg) { return noise_strength(cfg.N, cfg.alpha_sigma); }

std::size_t block_width(std::size_t n, double sigma) {
  return static_cast<std::size_t>(
      std::floor(std::pow(static_cast<double>(n), 0.25) * std::sqrt(sigma)));
}

std::size_t block_width(const SimConfig& cfg) {
  if (cfg.block_l_override) return *cfg.block_l_override;
  return block_width(cfg.N, noise_strength(cfg));
}

Drift drift(const ChainState& state, const SimConfig& cfg) {
  const std::size_t n = state.size();
  if (n < 2) throw ConfigInvalid("sim.N", "chain needs at least two sites");
  const bool periodic = cfg.boundary == BoundaryMode::Periodic;
  const double nn = static_cast<double>(n);
  const double a = cfg.dynamics.hamiltonian ? nn : 0.0;
  const double b = cfg.dynamics.stochastic ? noise_strength(cfg) * nn : 0.0;
  const double tau = cfg.schedule.value(state.t);

  std::vector<double> f(n);
  for (std::size_t k = 0; k < n; ++k) f[k] = cfg.potential.dv(state.r[k]);

  Drift d{std::vector<double>(n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = state.p[k], fk = f[k];
    const double p_prev = k > 0 ? state.p[k - 1] : (periodic ? state.p[n - 1] : 0.0);
    const double p_next = k + 1 < n ? state.p[k + 1] : (periodic ? state.p[0] : pk);
    const double f_prev = k > 0 ? f[k - 1] : (periodic ? f[n - 1] : fk);
    const double f_next = k + 1 < n ? f[k + 1] : (periodic ? f[0] : tau);
    d.dr[k] = a * (pk - p_prev) + b * (f_next - 2.0 * fk + f_prev);
    d.dp[k] = a * (f_next - fk) + b * (p_next - 2.0 * pk + p_prev);
  }
  return d;
}

double stable_dt(const SimConfig& cfg) {
  if (cfg.dt_override) return *cfg.dt_override;
  const double nn = static_cast<double>(cfg.N);
  const double sigma = noise_strength(cfg);
  const double c2 = cfg.potential.c2();
  return cfg.dt_safety *
         std::min(1.0 / (4.0 * sigma * nn * std::max(c2, 1.0)), 1.0 / (nn * std::sqrt(c2)));
}

Integrator::Integrator(const SimConfig& cfg)
    : cfg_(cfg), force_(cfg.potential), sigma_(noise_strength(cfg)), f_(cfg.N) {
  if (cfg.N < 2) throw ConfigInvalid("sim.N", "chain needs at least two sites");
}

void Integrator::step(ChainState& state, double dt, Rng& rng) {
  const std::size_t n = state.size();
  const bool periodic = cfg_.boundary == BoundaryMode::Periodic;
  const double nn = static_cast<double>(n);
  const double a = cfg_.dynamics.hamiltonian ? nn * dt : 0.0;
  const double sigma_n = sigma_ * nn;
  const bool noisy = cfg_.dynamics.stochastic;
  const double b = noisy ? sigma_n * dt : 0.0;
  const double s = noisy ? std::sqrt(2.0 * sigma_n * dt / cfg_.beta) : 0.0;
  const double tau = cfg_.schedule.value(state.t);

  double* r = state.r.data();
  double* p = state.p.data();
  double* f = f_.data();
  for (std::size_t k = 0; k < n; ++k) f[k] = force_(r[k]);

  // xi[k]: momentum exchange across the bond left of site k (k = 0 is the wall).
  // eta[k]: stretch exchange across the bond right of site k (k = N-1 is the wall).
  thread_local std::vector<double> xi, eta;
  xi.resize(n);
  eta.resize(n);
  if (noisy) {
    for (std::size_t k = 0; k < n; ++k) {
      xi[k] = s * standard_normal(rng);
      eta[k] = s * standard_normal(rng);
    }
  } else {
    std::fill(xi.begin(), xi.end(), 0.0);
    std::fill(eta.begin(), eta.end(), 0.0);
  }

  const double p_first_old = p[0];
  double p_prev = periodic ? p[n - 1] : 0.0;
  double eta_prev = periodic ? eta[n - 1] : 0.0;
  bool finite = true;
  const double limit = cfg_.blowup_threshold;
  for (std::size_t k = 0; k < n; ++k) {
    const double pk = p[k], fk = f[k];
    const bool last = k + 1 == n;
    const double p_next = !last ? p[k + 1] : (periodic ? p_first_old : pk);
    const double f_prev = k > 0 ? f[k - 1] : (periodic ? f[n - 1] : fk);
    const double f_next = !last ? f[k + 1] : (periodic ? f[0] : tau);
    const double xi_next = !last ? xi[k + 1] : (periodic ? xi[0] : 0.0);

    const double dr = a * (pk - p_prev) + b * (f_next - 2.0 * fk + f_prev) + (eta_prev - eta[k]);
    const double dp = a * (f_next - fk) + b * (p_next - 2.0 * pk + p_prev) + (xi[k] - xi_next);

    p_prev = pk;
    eta_prev = eta[k];
    r[k] += dr;
    p[k] += dp;
    finite &= std::abs(r[k]) < limit && std::abs(p[k]) < limit;
  }
  state.t += dt;
  if (!finite)
    throw BlowUp("chain state left the finite range at t = " + std::to_string(state.t));
}

ChainState step(const ChainState& state, const SimConfig& cfg, double dt, Rng& rng) {
  ChainState next = state;
  Integrator integrator(cfg);
  integrator.step(next, dt, rng);
  return next;
}

ChainState sample_initial(const SimConfig& cfg, const ThermoModel& thermo, const Profile& r0,
                          const Profile& p0, Rng& rng) {
  ChainState state(cfg.N);
  const double nn = static_cast<double>(cfg.N);
  for (std::size_t i = 0; i < cfg.N; ++i) {
    const double x = static_cast<double>(i + 1) / nn;
    const double tau = thermo.tau_of_ell(r0(x));
    const SitePoint site = thermo.sample_site(p0(x), tau, rng);
    state.r[i] = site.r;
    state.p[i] = site.p;
  }
  return state;
}

std::vector<double> frame_times(const SimConfig& cfg, double t_start) {
  std::vector<double> times;
  if (!cfg.record_times.empty()) {
    times.push_back(t_start);
    for (double t : cfg.record_times)
      if (t > t_start + 1e-12 && t <= cfg.t_end + 1e-12) times.push_back(t);
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    return times;
  }
  const double spacing = 1.0 / cfg.frames_per_unit;
  for (std::size_t k = 0;; ++k) {
    const double t = t_start + spacing * static_cast<double>(k);
    if (t > cfg.t_end + 1e-9 * spacing) break;
    times.push_back(t);
  }
  if (times.back() < cfg.t_end - 1e-9 * spacing) times.push_back(cfg.t_end);
  return times;
}

double energy_monitor(std::span<const double> r, std::span<const double> p,
                      const Potential& potential) {
  double e = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) e += 0.5 * p[i] * p[i] + potential.v(r[i]);
  return r.empty() ? 0.0 : e / static_cast<double>(r.size());
}

double energy_monitor(const ChainState& state, const Potential& potential) {
  return energy_monitor(state.r, state.p, potential);
}

namespace {

double mean_length(const ChainState& state) {
  double s = 0.0;
  for (double x : state.r) s += x;
  return s / static_cast<double>(state.size());
}

} // namespace

Trajectory simulate(const SimConfig& cfg, ChainState state, Rng& rng,
                    const SimulateOptions& options) {
  if (state.size() != cfg.N) throw ConfigInvalid("sim.N", "initial state size does not match N");
  Integrator integrator(cfg);
  const std::vector<double> times = frame_times(cfg, state.t);
  const double dt_nominal = stable_dt(cfg);

  Trajectory traj;
  traj.N = cfg.N;
  traj.dt = dt_nominal;

  auto record_frame = [&] {
    Frame frame{state.t, state.r, state.p};
    const double e = energy_monitor(state, cfg.potential);
    traj.max_energy = std::max(traj.max_energy, e);
    if (e > cfg.energy_bound) traj.energy_bound_exceeded = true;
    if (options.sink) options.sink->write(frame);
    if (options.keep_frames) traj.frames.push_back(std::move(frame));
  };

  record_frame();
  traj.length_times.push_back(state.t);
  traj.lengths.push_back(mean_length(state));

  for (std::size_t k = 1; k < times.size(); ++k) {
    const double t0 = times[k - 1], t1 = times[k];
    const double span = t1 - t0;
    const auto samples = static_cast<std::size_t>(
        std::max(1.0, std::ceil(span * cfg.length_samples_per_unit - 1e-9)));
    const auto stride = static_cast<std::size_t>(
        std::max(1.0, std::ceil(span / (dt_nominal * static_cast<double>(samples)) - 1e-9)));
    const double dt = span / static_cast<double>(samples * stride);
    for (std::size_t s = 0; s < samples; ++s) {
      for (std::size_t j = 0; j < stride; ++j) integrator.step(state, dt, rng);
      traj.steps += stride;
      if (s + 1 == samples) state.t = t1;
      traj.length_times.push_back(state.t);
      traj.lengths.push_back(mean_length(state));
    }
    record_frame();
  }
  return traj;
}

std::vector<double> microscopic_work(std::span<const double> times,
                                     std::span<const double> lengths,
                                     const TensionSchedule& schedule) {
  std::vector<double> work(times.size(), 0.0);
  if (times.empty()) return work;
  const double tau_start = schedule.value(times[0]);
  double integral = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (k > 0) {
      const double h = times[k] - times[k - 1];
      integral += 0.5 * h *
                  (schedule.derivative(times[k - 1]) * lengths[k - 1] +
                   schedule.derivative(times[k]) * lengths[k]);
    }
    work[k] = -integral + schedule.value(times[k]) * lengths[k] - tau_start * lengths[0];
  }
  return work;
}

} // namespace chainhydro
