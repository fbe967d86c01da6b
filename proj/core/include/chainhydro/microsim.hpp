#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "chainhydro/potential.hpp"
#include "chainhydro/random.hpp"
#include "chainhydro/schedule.hpp"
#include "chainhydro/thermo.hpp"

namespace chainhydro {

// Physical: particle 0 pinned (p_0 = 0), tension tau_bar on the last particle,
// boundary heat-bath operators at both ends.
// Periodic: ring closure with every coupling a bulk exchange; all boundary
// fluxes vanish, so sum(r) and sum(p) are conserved. Used for conservation checks.
enum class BoundaryMode { Physical, Periodic };

std::string_view to_string(BoundaryMode mode);
BoundaryMode parse_boundary_mode(std::string_view name);

struct DynamicsMask {
  bool hamiltonian = true;
  bool stochastic = true;
};

struct SimConfig {
  std::size_t N = 128;
  double beta = 1.0;
  // sigma = N^(1/2 + alpha_sigma), alpha_sigma in (0, 1/2).
  double alpha_sigma = 0.25;
  // Fraction of the explicit stability bound used as time step.
  double dt_safety = 0.1;
  double t_end = 0.5;
  TensionSchedule schedule = TensionSchedule::constant(0.0);
  Potential potential = Potential::mollified_kappa();
  std::uint64_t seed = 1;
  // Uniform frame cadence, used when record_times is empty.
  double frames_per_unit = 50.0;
  std::vector<double> record_times;
  // Cadence of the total-length series used for the work integral.
  double length_samples_per_unit = 1000.0;
  std::optional<std::size_t> block_l_override;
  BoundaryMode boundary = BoundaryMode::Physical;
  DynamicsMask dynamics;
  double blowup_threshold = 1e8;
  // Per-site energy bound; runs exceeding it are flagged.
  double energy_bound = 50.0;
  std::optional<double> dt_override;
};

double noise_strength(std::size_t n, double alpha_sigma);
double noise_strength(const SimConfig& cfg);
// l(N) = floor(N^(1/4) sigma^(1/2)).
std::size_t block_width(std::size_t n, double sigma);
std::size_t block_width(const SimConfig& cfg);

struct ChainState {
  std::vector<double> r;
  std::vector<double> p;
  double t = 0.0;

  ChainState() = default;
  explicit ChainState(std::size_t n) : r(n, 0.0), p(n, 0.0) {}
  std::size_t size() const { return r.size(); }
};

struct Drift {
  std::vector<double> dr;
  std::vector<double> dp;
};

// Deterministic drift per unit macroscopic time at (state, state.t).
Drift drift(const ChainState& state, const SimConfig& cfg);

// dt = dt_safety * min(1 / (4 sigma N max(c2, 1)), 1 / (N sqrt(c2))).
double stable_dt(const SimConfig& cfg);

// Euler-Maruyama stepper. One Gaussian per exchange bond and per step, applied
// with opposite signs to the two sites it couples.
class Integrator {
public:
  explicit Integrator(const SimConfig& cfg);

  // Advances state by dt; throws BlowUp if any entry leaves the finite range.
  void step(ChainState& state, double dt, Rng& rng);

  double sigma() const { return sigma_; }

private:
  SimConfig cfg_;
  ForceTable force_;
  double sigma_;
  std::vector<double> f_;
};

// Functional form of a single step.
ChainState step(const ChainState& state, const SimConfig& cfg, double dt, Rng& rng);

using Profile = std::function<double(double)>;

// Local-equilibrium initial state: site i is drawn from the site measure with
// mean momentum p0(i/N) and tension tau(r0(i/N)).
ChainState sample_initial(const SimConfig& cfg, const ThermoModel& thermo, const Profile& r0,
                          const Profile& p0, Rng& rng);

struct Frame {
  double t = 0.0;
  std::vector<double> r;
  std::vector<double> p;
};

class FrameSink {
public:
  virtual ~FrameSink() = default;
  virtual void write(const Frame& frame) = 0;
};

struct Trajectory {
  std::size_t N = 0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<Frame> frames;
  // (1/N) sum r_i sampled on the length cadence, including every frame time.
  std::vector<double> length_times;
  std::vector<double> lengths;
  double max_energy = 0.0;
  bool energy_bound_exceeded = false;
};

struct SimulateOptions {
  bool keep_frames = true;
  FrameSink* sink = nullptr;
};

// Runs from `initial` (whose t is taken as the start time) to cfg.t_end.
Trajectory simulate(const SimConfig& cfg, ChainState initial, Rng& rng,
                    const SimulateOptions& options = {});

// Frame times implied by the config.
std::vector<double> frame_times(const SimConfig& cfg, double t_start = 0.0);

// W(t) = -int_0^t tau'(s) L(s) ds + tau(t) L(t) - tau(0) L(0), trapezoid on the samples.
std::vector<double> microscopic_work(std::span<const double> times,
                                     std::span<const double> lengths,
                                     const TensionSchedule& schedule);

// (1/N) sum (p_i^2 / 2 + V(r_i)).
double energy_monitor(const ChainState& state, const Potential& potential);
double energy_monitor(std::span<const double> r, std::span<const double> p,
                      const Potential& potential);

} // namespace chainhydro
