#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "chainhydro/microsim.hpp"
#include "chainhydro/thermo.hpp"

namespace chainhydro::harness {

enum class Scenario { Stationary, QuasiStaticRamp, FastRampShock, ManufacturedLinear };

std::string_view to_string(Scenario s);
Scenario parse_scenario(std::string_view name);

enum class Emit { Frames, Residuals, Clausius, Weak, ThermoTables };

std::string_view to_string(Emit e);
Emit parse_emit(std::string_view name);

enum class FrameFormat { Csv, Binary };

struct MacroSettings {
  std::optional<double> eps;   // defaults to sigma(N) / N
  std::optional<std::size_t> M;  // defaults to N
  double cfl = 0.4;
};

// Initial profiles. Ramp and stationary scenarios start from the Gibbs state at
// tau0; ManufacturedLinear starts from r0(x) = mean - amplitude cos(pi x / 2), p0 = 0.
struct ProfileSettings {
  double mean = 0.5;
  double amplitude = 0.2;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::Stationary;
  SimConfig sim;
  std::size_t replicas = 1;
  std::vector<std::size_t> N_list;
  std::filesystem::path output_dir = "out";
  std::set<Emit> emit{Emit::Frames};
  FrameFormat frame_format = FrameFormat::Csv;
  unsigned threads = 0;   // 0: hardware concurrency
  ThermoOptions thermo;
  MacroSettings macro;
  ProfileSettings profile;
};

// Scenario defaults, applied before the file and the overrides.
ExperimentConfig scenario_defaults(Scenario s);

// Parses TOML text. Keys not given keep the scenario defaults.
ExperimentConfig parse_config(std::string_view toml_text,
                              const std::vector<std::string>& overrides = {});
ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides = {});

// Throws ConfigInvalid on the first violated rule; otherwise returns
// human-readable diagnostics (sigma, l, dt and step counts per N).
std::vector<std::string> validate(const ExperimentConfig& cfg);

// SimConfig for one entry of N_list.
SimConfig sim_for(const ExperimentConfig& cfg, std::size_t N);

nlohmann::json to_json(const ExperimentConfig& cfg);

} // namespace chainhydro::harness
