// chainhydro: command line front end for the chain hydrodynamics laboratory.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "chainhydro/errors.hpp"
#include "chainhydro/harness/config.hpp"
#include "chainhydro/harness/frame_io.hpp"
#include "chainhydro/harness/runner.hpp"
#include "chainhydro/version.hpp"

namespace fs = std::filesystem;
using namespace chainhydro;
using namespace chainhydro::harness;

namespace {

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "TOML experiment file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "Override a config key, e.g. --set sim.N=256")
      ->take_all()
      ->allow_extra_args(false);
  cmd->add_option("--seed", o.seed, "Run seed (unsigned 64-bit)");
  cmd->add_option("--out", o.out, "Output directory");
  cmd->add_option("--threads", o.threads, "Worker threads (0: all cores)");
}

ExperimentConfig resolve(const CommonOptions& o) {
  ExperimentConfig cfg = o.config.empty() ? parse_config("", o.overrides)
                                          : load_config(o.config, o.overrides);
  if (o.seed) cfg.sim.seed = *o.seed;
  if (o.out) cfg.output_dir = *o.out;
  if (o.threads) cfg.threads = *o.threads;
  return cfg;
}

int finish(const ExperimentReport& report) {
  for (const auto& p : report.outputs) std::cerr << "wrote " << p.string() << '\n';
  if (!report.manifest.empty()) std::cerr << "wrote " << report.manifest.string() << '\n';
  if (report.failed > 0) {
    std::cerr << report.failed << " replica(s) failed; see the manifest\n";
    return 3;
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic anharmonic chain: simulation, macro reference solver and analysis"};
  app.set_version_flag("--version", std::string(version()) + " (" + std::string(git_revision()) + ")");
  app.require_subcommand(1);

  CommonOptions thermo_o, sim_o, macro_o, analyze_o, sweep_o, validate_o;

  auto* thermo_cmd = app.add_subcommand("thermo-table", "Write (tau, G, ell) and (ell, F, tau) tables");
  add_common(thermo_cmd, thermo_o);
  double table_step = 0.01;
  thermo_cmd->add_option("--step", table_step, "Table spacing")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "Run the replica ensemble at sim.N");
  add_common(sim_cmd, sim_o);
  std::optional<std::uint64_t> replay_seed;
  sim_cmd->add_option("--replay-seed", replay_seed,
                      "Re-run a single replica from the stream seed recorded in a manifest");

  auto* macro_cmd = app.add_subcommand("macro-solve", "Solve the viscous macroscopic system");
  add_common(macro_cmd, macro_o);

  auto* analyze_cmd = app.add_subcommand("analyze", "Residual, weak and Clausius tables from recorded frames");
  add_common(analyze_cmd, analyze_o);
  std::string in_dir;
  analyze_cmd->add_option("--in", in_dir, "Directory of a finished run")->required()->check(CLI::ExistingDirectory);

  auto* sweep_cmd = app.add_subcommand("sweep", "Run the replica ensemble for every N in N_list");
  add_common(sweep_cmd, sweep_o);

  auto* validate_cmd = app.add_subcommand("validate", "Check a config and print the implied step counts");
  add_common(validate_cmd, validate_o);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*thermo_cmd) {
      const ExperimentConfig cfg = resolve(thermo_o);
      const ThermoModel thermo(cfg.sim.potential, cfg.sim.beta, cfg.thermo);
      for (const auto& p : write_thermo_tables(thermo, cfg.output_dir, table_step))
        std::cerr << "wrote " << p.string() << '\n';
      return 0;
    }
    if (*sim_cmd) {
      ExperimentConfig cfg = resolve(sim_o);
      cfg.N_list = {cfg.sim.N};
      if (replay_seed) {
        validate(cfg);
        const ReplicaRecord rec = replay_replica(cfg, cfg.sim.N, *replay_seed, cfg.output_dir);
        std::cerr << "wrote " << (cfg.output_dir / rec.frames_file).string() << '\n'
                  << "wrote " << (cfg.output_dir / rec.lengths_file).string() << '\n';
        return 0;
      }
      return finish(run(cfg, &std::cerr));
    }
    if (*macro_cmd) {
      const ExperimentConfig cfg = resolve(macro_o);
      validate(cfg);
      const ThermoModel thermo(cfg.sim.potential, cfg.sim.beta, cfg.thermo);
      fs::create_directories(cfg.output_dir);
      const MacroTrajectory macro = run_macro(cfg, cfg.sim.N, thermo);
      const fs::path path = cfg.output_dir / "macro_frames.csv";
      write_macro_frames(macro, path);
      std::cerr << "steps=" << macro.steps << " max_tv=" << macro.max_total_variation << '\n'
                << "wrote " << path.string() << '\n';
      return 0;
    }
    if (*analyze_cmd) {
      ExperimentConfig cfg = resolve(analyze_o);
      if (cfg.emit.empty() || (cfg.emit.size() == 1 && cfg.emit.contains(Emit::Frames)))
        cfg.emit = {Emit::Residuals, Emit::Clausius, Emit::Weak};
      return finish(analyze_directory(cfg, in_dir, &std::cerr));
    }
    if (*sweep_cmd) return finish(run(resolve(sweep_o), &std::cerr));
    if (*validate_cmd) {
      for (const auto& line : validate(resolve(validate_o))) std::cout << line << '\n';
      return 0;
    }
  } catch (const ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
