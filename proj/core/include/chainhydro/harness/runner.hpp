#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "chainhydro/harness/config.hpp"
#include "chainhydro/microsim.hpp"
#include "chainhydro/observables.hpp"
#include "chainhydro/pdesolver.hpp"
#include "chainhydro/thermo.hpp"

namespace chainhydro::harness {

struct InitialProfiles {
  Profile r0;
  Profile p0;
};

InitialProfiles initial_profiles(const ExperimentConfig& cfg, const ThermoModel& thermo);

// Exact standing wave of the linear (harmonic) system used by ManufacturedLinear:
//   r = mean - A cos(pi t / 2) cos(pi x / 2),  p = A sin(pi t / 2) sin(pi x / 2).
struct LinearWave {
  double mean = 0.5;
  double amplitude = 0.2;
  double r(double t, double x) const;
  double p(double t, double x) const;
};

// Rng stream of one replica; depends on the run seed, N and the replica index only.
std::uint64_t replica_seed(std::uint64_t seed, std::size_t N, std::size_t replica);

// Draws the initial state and integrates one replica from an explicit stream seed.
Trajectory run_replica(const SimConfig& sim, const ThermoModel& thermo,
                       const InitialProfiles& profiles, std::uint64_t stream,
                       const SimulateOptions& options = {});

// Runs fn(0..count-1) on a bounded pool of worker threads.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);
unsigned resolve_threads(unsigned requested);

struct ReplicaAnalysis {
  double one_block = 0.0;          // time average over frames
  TwoBlockResidual two_block;      // time average over frames
  ClausiusReplica clausius;
  std::vector<WeakResidual> weak;  // phi_k / psi_k pairs, k = 0..7
};

ReplicaAnalysis analyze_trajectory(const ExperimentConfig& cfg, const SimConfig& sim,
                                   const Trajectory& traj, const ThermoModel& thermo);

// Time-averaged one-block residual of a single trajectory.
double mean_one_block_residual(const Trajectory& traj, std::size_t l, const ThermoModel& thermo);

// Weak residuals of a field against the fixed basis (phi_k, psi_k), k = 0..7.
std::vector<WeakResidual> basis_weak_residuals(const EmpiricalField& field,
                                               const TensionSchedule& schedule,
                                               const TensionMap& tau);

struct ReplicaRecord {
  std::size_t N = 0;
  std::size_t replica = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  double wall_seconds = 0.0;
  std::string frames_file;
  std::string lengths_file;
};

struct ExperimentReport {
  std::vector<ReplicaRecord> replicas;
  std::vector<std::filesystem::path> outputs;
  std::filesystem::path manifest;
  std::size_t failed = 0;
};

// Validates, runs every (N, replica) pair in parallel, writes the requested
// artifacts and a manifest. Failed replicas are recorded, not fatal.
ExperimentReport run(const ExperimentConfig& cfg, std::ostream* progress = nullptr);

// Recomputes residual, Clausius and weak tables from a finished run directory.
ExperimentReport analyze_directory(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                                   std::ostream* progress = nullptr);

// Replays one replica from an explicit stream seed into dir.
ReplicaRecord replay_replica(const ExperimentConfig& cfg, std::size_t N, std::uint64_t stream,
                             const std::filesystem::path& dir);

// (tau, G, ell) and (ell, F, tau) tables.
std::vector<std::filesystem::path> write_thermo_tables(const ThermoModel& thermo,
                                                       const std::filesystem::path& dir,
                                                       double step = 0.01);

// Viscous macro solution for the scenario's initial data on the frame times of sim.
MacroTrajectory run_macro(const ExperimentConfig& cfg, std::size_t N, const ThermoModel& thermo);
void write_macro_frames(const MacroTrajectory& macro, const std::filesystem::path& path);

} // namespace chainhydro::harness
