#include "chainhydro/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <nlohmann/json.hpp>

#include "chainhydro/errors.hpp"
#include "chainhydro/harness/frame_io.hpp"
#include "chainhydro/stats.hpp"
#include "chainhydro/version.hpp"

namespace chainhydro::harness {

namespace fs = std::filesystem;

InitialProfiles initial_profiles(const ExperimentConfig& cfg, const ThermoModel& thermo) {
  if (cfg.scenario == Scenario::ManufacturedLinear) {
    const LinearWave wave{cfg.profile.mean, cfg.profile.amplitude};
    return {[wave](double x) { return wave.r(0.0, x); }, [wave](double x) { return wave.p(0.0, x); }};
  }
  const double ell0 = thermo.ell_of_tau(cfg.sim.schedule.value(0.0));
  return {[ell0](double) { return ell0; }, [](double) { return 0.0; }};
}

double LinearWave::r(double t, double x) const {
  const double h = 0.5 * std::numbers::pi;
  return mean - amplitude * std::cos(h * t) * std::cos(h * x);
}

double LinearWave::p(double t, double x) const {
  const double h = 0.5 * std::numbers::pi;
  return amplitude * std::sin(h * t) * std::sin(h * x);
}

std::uint64_t replica_seed(std::uint64_t seed, std::size_t N, std::size_t replica) {
  return stream_seed(stream_seed(seed, N), replica);
}

Trajectory run_replica(const SimConfig& sim, const ThermoModel& thermo,
                       const InitialProfiles& profiles, std::uint64_t stream,
                       const SimulateOptions& options) {
  Rng rng(stream);
  ChainState initial = sample_initial(sim, thermo, profiles.r0, profiles.p0, rng);
  return simulate(sim, std::move(initial), rng, options);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(resolve_threads(threads), count);
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < count; k = next++) {
          try {
            fn(k);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
  }
  if (first_error) std::rethrow_exception(first_error);
}

double mean_one_block_residual(const Trajectory& traj, std::size_t l, const ThermoModel& thermo) {
  if (traj.frames.empty()) return 0.0;
  double s = 0.0;
  for (const Frame& f : traj.frames) s += one_block_residual(f.r, l, thermo);
  return s / static_cast<double>(traj.frames.size());
}

std::vector<WeakResidual> basis_weak_residuals(const EmpiricalField& field,
                                               const TensionSchedule& schedule,
                                               const TensionMap& tau) {
  const double T = field.times.back();
  const auto phis = phi_basis(T), psis = psi_basis(T);
  std::vector<WeakResidual> out;
  for (std::size_t k = 0; k < phis.size(); ++k)
    out.push_back(weak_residual(field, phis[k], psis[k], schedule, tau));
  return out;
}

ReplicaAnalysis analyze_trajectory(const ExperimentConfig& cfg, const SimConfig& sim,
                                   const Trajectory& traj, const ThermoModel& thermo) {
  ReplicaAnalysis a;
  const std::size_t l = block_width(sim);
  if (cfg.emit.contains(Emit::Residuals)) {
    a.one_block = mean_one_block_residual(traj, l, thermo);
    for (const Frame& f : traj.frames) {
      ChainState s(f.r.size());
      s.r = f.r;
      s.p = f.p;
      const TwoBlockResidual t = two_block_residual(s, l, sim.potential);
      a.two_block.p += t.p;
      a.two_block.force += t.force;
      a.two_block.r += t.r;
    }
    const double inv = 1.0 / static_cast<double>(std::max<std::size_t>(1, traj.frames.size()));
    a.two_block.p *= inv;
    a.two_block.force *= inv;
    a.two_block.r *= inv;
  }
  if (cfg.emit.contains(Emit::Clausius)) a.clausius = clausius_replica(traj, l, thermo, sim.schedule);
  if (cfg.emit.contains(Emit::Weak)) {
    const EmpiricalField field = hat_field(traj.frames, l, StripFill::Zero);
    a.weak = basis_weak_residuals(field, sim.schedule,
                                  [&thermo](double r) { return thermo.tau_of_ell(r); });
  }
  return a;
}

namespace {

std::string frames_name(std::size_t N, std::size_t replica, FrameFormat fmt) {
  return "frames_N" + std::to_string(N) + "_r" + std::to_string(replica) +
         (fmt == FrameFormat::Csv ? ".csv" : ".bin");
}

std::string lengths_name(std::size_t N, std::size_t replica) {
  return "lengths_N" + std::to_string(N) + "_r" + std::to_string(replica) + ".csv";
}

std::string join(std::initializer_list<double> xs) {
  std::string s;
  for (double x : xs) {
    if (!s.empty()) s += ',';
    s += format_double(x);
  }
  return s;
}

bool needs_analysis(const ExperimentConfig& cfg) {
  return cfg.emit.contains(Emit::Residuals) || cfg.emit.contains(Emit::Clausius) ||
         cfg.emit.contains(Emit::Weak);
}

// Per-N tables from the per-replica analyses (successful replicas only).
void write_tables(const ExperimentConfig& cfg, const fs::path& dir,
                  const std::vector<ReplicaRecord>& records,
                  const std::vector<ReplicaAnalysis>& analyses, ExperimentReport& report) {
  std::vector<std::string> residual_rows, two_block_rows;
  for (std::size_t N : cfg.N_list) {
    const SimConfig sim = sim_for(cfg, N);
    const double sigma = noise_strength(sim);
    const auto l = static_cast<double>(block_width(sim));
    std::vector<const ReplicaAnalysis*> group;
    for (std::size_t k = 0; k < records.size(); ++k)
      if (records[k].N == N && records[k].ok) group.push_back(&analyses[k]);
    if (group.empty()) continue;
    const double nn = static_cast<double>(N);

    if (cfg.emit.contains(Emit::Residuals)) {
      std::vector<double> one, tp, tf, tr;
      for (const auto* a : group) {
        one.push_back(a->one_block);
        tp.push_back(a->two_block.p);
        tf.push_back(a->two_block.force);
        tr.push_back(a->two_block.r);
      }
      const MeanSE m = mean_se(one);
      residual_rows.push_back(join({nn, l, sigma, m.mean, m.se}));
      const MeanSE mp = mean_se(tp), mf = mean_se(tf), mr = mean_se(tr);
      two_block_rows.push_back(
          join({nn, l, sigma, mp.mean, mp.se, mf.mean, mf.se, mr.mean, mr.se}));
    }
    if (cfg.emit.contains(Emit::Clausius)) {
      std::vector<ClausiusReplica> reps;
      for (const auto* a : group) reps.push_back(a->clausius);
      const ClausiusReport rep = clausius_balance(reps);
      std::vector<std::string> rows;
      for (std::size_t k = 0; k < rep.times.size(); ++k)
        rows.push_back(join({rep.times[k], rep.mean_work[k], rep.mean_delta_F[k],
                             rep.mean_work[k] - rep.mean_delta_F[k], rep.slack_se[k]}));
      const fs::path p = dir / ("clausius_N" + std::to_string(N) + ".csv");
      write_table(p, "t,mean_W,mean_dF,slack,se", rows);
      report.outputs.push_back(p);
      const fs::path s = dir / ("clausius_summary_N" + std::to_string(N) + ".csv");
      write_table(s, "replicas,mean_int_W,mean_int_dF,slack,se_analytic,se_bootstrap",
                  {join({static_cast<double>(rep.replicas), rep.mean_int_work, rep.mean_int_delta_F,
                         rep.slack, rep.slack_se_analytic, rep.slack_se_bootstrap})});
      report.outputs.push_back(s);
    }
    if (cfg.emit.contains(Emit::Weak)) {
      std::vector<std::string> rows;
      const std::size_t nb = group.front()->weak.size();
      for (std::size_t b = 0; b < nb; ++b) {
        std::vector<double> rr, rp;
        for (const auto* a : group) {
          rr.push_back(a->weak[b].r);
          rp.push_back(a->weak[b].p);
        }
        const MeanSE mr = mean_se(rr), mp = mean_se(rp);
        rows.push_back(join({static_cast<double>(b), mr.mean, mp.mean, mr.se, mp.se}));
      }
      const fs::path p = dir / ("weak_N" + std::to_string(N) + ".csv");
      write_table(p, "basis,R_r,R_p,se_r,se_p", rows);
      report.outputs.push_back(p);
    }
  }
  if (cfg.emit.contains(Emit::Residuals)) {
    write_table(dir / "residuals.csv", "N,l,sigma,residual,se", residual_rows);
    write_table(dir / "two_block_residuals.csv",
                "N,l,sigma,p,se_p,force,se_force,r,se_r", two_block_rows);
    report.outputs.push_back(dir / "residuals.csv");
    report.outputs.push_back(dir / "two_block_residuals.csv");
  }
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_manifest(const ExperimentConfig& cfg, const fs::path& path,
                    const std::vector<ReplicaRecord>& records, const std::string& started,
                    double wall_seconds) {
  nlohmann::json reps = nlohmann::json::array();
  for (const auto& r : records)
    reps.push_back({{"N", r.N},
                    {"replica", r.replica},
                    {"seed", r.seed},
                    {"ok", r.ok},
                    {"error", r.error},
                    {"wall_seconds", r.wall_seconds},
                    {"frames_file", r.frames_file},
                    {"lengths_file", r.lengths_file}});
  const nlohmann::json manifest{{"schema", 1},
                                {"version", std::string(version())},
                                {"git_revision", std::string(git_revision())},
                                {"started", started},
                                {"finished", utc_now()},
                                {"wall_seconds", wall_seconds},
                                {"config", to_json(cfg)},
                                {"replicas", reps}};
  std::ofstream out(path);
  out << manifest.dump(2) << '\n';
}

} // namespace

ExperimentReport run(const ExperimentConfig& cfg, std::ostream* progress) {
  const auto diagnostics = validate(cfg);
  if (progress)
    for (const auto& d : diagnostics) *progress << "[validate] " << d << '\n';
  const auto t_start = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);

  const ThermoModel thermo(cfg.sim.potential, cfg.sim.beta, cfg.thermo);
  const InitialProfiles profiles = initial_profiles(cfg, thermo);
  ExperimentReport report;
  if (cfg.emit.contains(Emit::ThermoTables)) {
    auto files = write_thermo_tables(thermo, dir);
    report.outputs.insert(report.outputs.end(), files.begin(), files.end());
  }

  std::vector<ReplicaRecord> records;
  for (std::size_t N : cfg.N_list)
    for (std::size_t k = 0; k < cfg.replicas; ++k)
      records.push_back({N, k, replica_seed(cfg.sim.seed, N, k), false, {}, 0.0, {}, {}});
  std::vector<ReplicaAnalysis> analyses(records.size());
  const bool analyze = needs_analysis(cfg);
  const bool frames = cfg.emit.contains(Emit::Frames);
  std::mutex log_mutex;

  parallel_for(records.size(), cfg.threads, [&](std::size_t j) {
    ReplicaRecord& rec = records[j];
    const SimConfig sim = sim_for(cfg, rec.N);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      std::unique_ptr<FrameSink> sink;
      if (frames) {
        rec.frames_file = frames_name(rec.N, rec.replica, cfg.frame_format);
        if (cfg.frame_format == FrameFormat::Csv)
          sink = std::make_unique<CsvFrameSink>(dir / rec.frames_file);
        else
          sink = std::make_unique<BinaryFrameSink>(dir / rec.frames_file, rec.N);
      }
      SimulateOptions opts;
      opts.keep_frames = analyze;
      opts.sink = sink.get();
      const Trajectory traj = run_replica(sim, thermo, profiles, rec.seed, opts);
      if (frames) {
        rec.lengths_file = lengths_name(rec.N, rec.replica);
        write_lengths_csv(dir / rec.lengths_file, traj.length_times, traj.lengths);
      }
      if (traj.energy_bound_exceeded)
        throw BlowUp("per-site energy exceeded the configured bound");
      if (analyze) analyses[j] = analyze_trajectory(cfg, sim, traj, thermo);
      rec.ok = true;
    } catch (const std::exception& e) {
      rec.error = e.what();
    }
    rec.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) {
      std::lock_guard lock(log_mutex);
      *progress << "[run] N=" << rec.N << " replica=" << rec.replica
                << (rec.ok ? " ok " : " FAILED ") << rec.wall_seconds << "s"
                << (rec.ok ? "" : " (" + rec.error + ")") << '\n';
    }
  });

  for (const auto& r : records) report.failed += r.ok ? 0 : 1;
  if (analyze) write_tables(cfg, dir, records, analyses, report);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  report.manifest = dir / "manifest.json";
  write_manifest(cfg, report.manifest, records, started, wall);
  report.replicas = std::move(records);
  return report;
}

ExperimentReport analyze_directory(const ExperimentConfig& cfg, const fs::path& dir,
                                   std::ostream* progress) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigInvalid("analyze", "no manifest.json in " + dir.string());
  const nlohmann::json manifest = nlohmann::json::parse(in);
  const ThermoModel thermo(cfg.sim.potential, cfg.sim.beta, cfg.thermo);

  std::vector<ReplicaRecord> records;
  for (const auto& r : manifest.at("replicas")) {
    ReplicaRecord rec;
    rec.N = r.at("N").get<std::size_t>();
    rec.replica = r.at("replica").get<std::size_t>();
    rec.seed = r.at("seed").get<std::uint64_t>();
    rec.ok = r.at("ok").get<bool>();
    rec.frames_file = r.at("frames_file").get<std::string>();
    rec.lengths_file = r.at("lengths_file").get<std::string>();
    if (rec.ok && rec.frames_file.empty()) {
      rec.ok = false;
      rec.error = "no frames recorded";
    }
    records.push_back(rec);
  }
  ExperimentConfig effective = cfg;
  effective.N_list.clear();
  for (const auto& r : records)
    if (std::find(effective.N_list.begin(), effective.N_list.end(), r.N) == effective.N_list.end())
      effective.N_list.push_back(r.N);

  std::vector<ReplicaAnalysis> analyses(records.size());
  parallel_for(records.size(), cfg.threads, [&](std::size_t j) {
    ReplicaRecord& rec = records[j];
    if (!rec.ok) return;
    try {
      Trajectory traj;
      traj.N = rec.N;
      traj.frames = read_frames(dir / rec.frames_file);
      read_lengths_csv(dir / rec.lengths_file, traj.length_times, traj.lengths);
      analyses[j] = analyze_trajectory(effective, sim_for(effective, rec.N), traj, thermo);
    } catch (const std::exception& e) {
      rec.ok = false;
      rec.error = e.what();
    }
  });
  ExperimentReport report;
  for (const auto& r : records) {
    report.failed += r.ok ? 0 : 1;
    if (progress && !r.ok)
      *progress << "[analyze] skipped N=" << r.N << " replica=" << r.replica << ": " << r.error << '\n';
  }
  write_tables(effective, dir, records, analyses, report);
  report.replicas = std::move(records);
  return report;
}

ReplicaRecord replay_replica(const ExperimentConfig& cfg, std::size_t N, std::uint64_t stream,
                             const fs::path& dir) {
  fs::create_directories(dir);
  const ThermoModel thermo(cfg.sim.potential, cfg.sim.beta, cfg.thermo);
  const SimConfig sim = sim_for(cfg, N);
  ReplicaRecord rec{N, 0, stream, false, {}, 0.0, {}, {}};
  rec.frames_file = "replay_N" + std::to_string(N) + "_s" + std::to_string(stream) +
                    (cfg.frame_format == FrameFormat::Csv ? ".csv" : ".bin");
  rec.lengths_file = "replay_lengths_N" + std::to_string(N) + "_s" + std::to_string(stream) + ".csv";
  std::unique_ptr<FrameSink> sink;
  if (cfg.frame_format == FrameFormat::Csv) sink = std::make_unique<CsvFrameSink>(dir / rec.frames_file);
  else sink = std::make_unique<BinaryFrameSink>(dir / rec.frames_file, N);
  const auto t0 = std::chrono::steady_clock::now();
  SimulateOptions opts;
  opts.keep_frames = false;
  opts.sink = sink.get();
  const Trajectory traj = run_replica(sim, thermo, initial_profiles(cfg, thermo), stream, opts);
  write_lengths_csv(dir / rec.lengths_file, traj.length_times, traj.lengths);
  rec.ok = true;
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<fs::path> write_thermo_tables(const ThermoModel& thermo, const fs::path& dir,
                                          double step) {
  fs::create_directories(dir);
  const ThermoOptions& o = thermo.options();
  std::vector<std::string> tau_rows, ell_rows;
  const auto n_tau = static_cast<std::size_t>(std::llround((o.tau_max - o.tau_min) / step));
  for (std::size_t k = 0; k <= n_tau; ++k) {
    const double tau = o.tau_min + step * static_cast<double>(k);
    tau_rows.push_back(join({tau, thermo.gibbs_G(tau), thermo.ell_of_tau(tau)}));
  }
  const double lo = std::ceil(thermo.ell_grid_min() / step) * step;
  const double hi = thermo.ell_grid_max();
  for (std::size_t k = 0;; ++k) {
    const double ell = lo + step * static_cast<double>(k);
    if (ell > hi) break;
    ell_rows.push_back(join({ell, thermo.free_energy_F(ell), thermo.tau_of_ell(ell)}));
  }
  const fs::path a = dir / "thermo_tau.csv", b = dir / "thermo_ell.csv";
  write_table(a, "tau,G,ell", tau_rows);
  write_table(b, "ell,F,tau", ell_rows);
  return {a, b};
}

MacroTrajectory run_macro(const ExperimentConfig& cfg, std::size_t N, const ThermoModel& thermo) {
  const SimConfig sim = sim_for(cfg, N);
  const double eps = cfg.macro.eps ? *cfg.macro.eps : noise_strength(sim) / static_cast<double>(N);
  const std::size_t M = cfg.macro.M ? *cfg.macro.M : N;
  const InitialProfiles prof = initial_profiles(cfg, thermo);
  return solve(prof.r0, prof.p0, sim.schedule, thermo, eps, M, frame_times(sim), cfg.macro.cfl);
}

void write_macro_frames(const MacroTrajectory& macro, const fs::path& path) {
  CsvFrameSink sink(path);
  const EmpiricalField& f = macro.fields;
  for (std::size_t k = 0; k < f.frames(); ++k) sink.write(Frame{f.times[k], f.r[k], f.p[k]});
}

} // namespace chainhydro::harness
