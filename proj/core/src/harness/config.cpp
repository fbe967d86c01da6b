#include "chainhydro/harness/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <toml.hpp>

#include "chainhydro/errors.hpp"

namespace chainhydro::harness {

std::string_view to_string(Scenario s) {
  switch (s) {
  case Scenario::Stationary: return "stationary";
  case Scenario::QuasiStaticRamp: return "quasi_static_ramp";
  case Scenario::FastRampShock: return "fast_ramp_shock";
  case Scenario::ManufacturedLinear: return "manufactured_linear";
  }
  return "unknown";
}

Scenario parse_scenario(std::string_view name) {
  if (name == "stationary") return Scenario::Stationary;
  if (name == "quasi_static_ramp") return Scenario::QuasiStaticRamp;
  if (name == "fast_ramp_shock") return Scenario::FastRampShock;
  if (name == "manufactured_linear") return Scenario::ManufacturedLinear;
  throw ConfigInvalid("scenario", "unknown scenario '" + std::string(name) + "'");
}

std::string_view to_string(Emit e) {
  switch (e) {
  case Emit::Frames: return "frames";
  case Emit::Residuals: return "residuals";
  case Emit::Clausius: return "clausius";
  case Emit::Weak: return "weak";
  case Emit::ThermoTables: return "thermo_tables";
  }
  return "unknown";
}

Emit parse_emit(std::string_view name) {
  if (name == "frames") return Emit::Frames;
  if (name == "residuals") return Emit::Residuals;
  if (name == "clausius") return Emit::Clausius;
  if (name == "weak") return Emit::Weak;
  if (name == "thermo_tables") return Emit::ThermoTables;
  throw ConfigInvalid("emit", "unknown output kind '" + std::string(name) + "'");
}

ExperimentConfig scenario_defaults(Scenario s) {
  ExperimentConfig cfg;
  cfg.scenario = s;
  SimConfig& sim = cfg.sim;
  switch (s) {
  case Scenario::Stationary:
    sim.N = 128;
    sim.t_end = 0.5;
    sim.schedule = TensionSchedule::constant(0.5);
    break;
  case Scenario::QuasiStaticRamp:
    sim.N = 128;
    sim.t_end = 1.5;
    sim.schedule = TensionSchedule::smooth_ramp(0.0, 0.6, 1.0);
    break;
  case Scenario::FastRampShock:
    sim.N = 256;
    sim.t_end = 0.5;
    sim.schedule = TensionSchedule::smooth_ramp(0.0, 0.6, 0.2);
    break;
  case Scenario::ManufacturedLinear:
    sim.N = 128;
    sim.t_end = 0.5;
    sim.potential = Potential::harmonic();
    sim.schedule = TensionSchedule::constant(cfg.profile.mean);
    break;
  }
  cfg.N_list = {sim.N};
  return cfg;
}

namespace {

[[noreturn]] void bad(const std::string& key, const std::string& msg) { throw ConfigInvalid(key, msg); }

// Sets root[a.b.c] to the TOML value written in `text`; bare words become strings.
void apply_override(toml::table& root, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) bad(assignment, "override must look like key=value");
  std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  while (!key.empty() && key.back() == ' ') key.pop_back();

  toml::table parsed;
  try {
    parsed = toml::parse("v = " + text);
  } catch (const toml::parse_error&) {
    parsed = toml::table{{"v", text}};
  }

  toml::table* tbl = &root;
  std::size_t start = 0;
  for (std::size_t dot = key.find('.'); dot != std::string::npos; dot = key.find('.', start)) {
    const std::string part = key.substr(start, dot - start);
    if (!tbl->contains(part)) tbl->insert(part, toml::table{});
    tbl = (*tbl)[part].as_table();
    if (!tbl) bad(key, "'" + part + "' is not a table");
    start = dot + 1;
  }
  const std::string leaf = key.substr(start);
  parsed["v"].visit([&](auto&& node) { tbl->insert_or_assign(leaf, node); });
}

void check_keys(const toml::table& tbl, const std::string& prefix,
                std::initializer_list<std::string_view> known) {
  for (const auto& [k, v] : tbl) {
    bool ok = false;
    for (auto name : known) ok |= (k.str() == name);
    if (!ok) bad(prefix + std::string(k.str()), "unknown key");
  }
}

double get_double(const toml::node_view<const toml::node>& n, const std::string& key, double fallback) {
  if (!n) return fallback;
  if (auto v = n.value<double>()) return *v;
  bad(key, "expected a number");
}

long long get_int(const toml::node_view<const toml::node>& n, const std::string& key, long long fallback) {
  if (!n) return fallback;
  if (auto v = n.value<long long>()) return *v;
  bad(key, "expected an integer");
}

std::string get_string(const toml::node_view<const toml::node>& n, const std::string& key,
                       const std::string& fallback) {
  if (!n) return fallback;
  if (auto v = n.value<std::string>()) return *v;
  bad(key, "expected a string");
}

bool get_bool(const toml::node_view<const toml::node>& n, const std::string& key, bool fallback) {
  if (!n) return fallback;
  if (auto v = n.value<bool>()) return *v;
  bad(key, "expected a boolean");
}

std::size_t get_count(const toml::node_view<const toml::node>& n, const std::string& key,
                      std::size_t fallback) {
  const long long v = get_int(n, key, static_cast<long long>(fallback));
  if (v < 0) bad(key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

std::vector<double> get_doubles(const toml::node_view<const toml::node>& n, const std::string& key) {
  std::vector<double> out;
  const toml::array* arr = n.as_array();
  if (!arr) bad(key, "expected an array");
  for (const auto& e : *arr) {
    auto v = e.value<double>();
    if (!v) bad(key, "expected an array of numbers");
    out.push_back(*v);
  }
  return out;
}

ExperimentConfig from_table(const toml::table& root) {
  check_keys(root, "", {"scenario", "replicas", "N_list", "output_dir", "emit", "frame_format",
                        "threads", "sim", "potential", "schedule", "thermo", "macro", "profile"});
  const toml::node_view<const toml::node> top{root};
  const Scenario scenario = parse_scenario(get_string(top["scenario"], "scenario", "stationary"));
  ExperimentConfig cfg = scenario_defaults(scenario);

  if (const auto* t = root["profile"].as_table()) {
    check_keys(*t, "profile.", {"mean", "amplitude"});
    cfg.profile.mean = get_double(top["profile"]["mean"], "profile.mean", cfg.profile.mean);
    cfg.profile.amplitude =
        get_double(top["profile"]["amplitude"], "profile.amplitude", cfg.profile.amplitude);
    if (scenario == Scenario::ManufacturedLinear)
      cfg.sim.schedule = TensionSchedule::constant(cfg.profile.mean);
  }

  cfg.replicas = get_count(top["replicas"], "replicas", cfg.replicas);
  cfg.output_dir = get_string(top["output_dir"], "output_dir", cfg.output_dir.string());
  cfg.threads = static_cast<unsigned>(get_count(top["threads"], "threads", cfg.threads));
  const std::string fmt = get_string(top["frame_format"], "frame_format", "csv");
  if (fmt == "csv") cfg.frame_format = FrameFormat::Csv;
  else if (fmt == "binary") cfg.frame_format = FrameFormat::Binary;
  else bad("frame_format", "expected 'csv' or 'binary'");
  if (top["emit"]) {
    const toml::array* arr = top["emit"].as_array();
    if (!arr) bad("emit", "expected an array of strings");
    cfg.emit.clear();
    for (const auto& e : *arr) {
      auto s = e.value<std::string>();
      if (!s) bad("emit", "expected an array of strings");
      cfg.emit.insert(parse_emit(*s));
    }
  }

  SimConfig& sim = cfg.sim;
  if (const auto* t = root["sim"].as_table()) {
    check_keys(*t, "sim.",
               {"N", "beta", "alpha_sigma", "dt_safety", "t_end", "seed", "frames_per_unit",
                "record_times", "length_samples_per_unit", "block_l", "boundary",
                "blowup_threshold", "energy_bound", "dt", "hamiltonian", "stochastic"});
    const auto s = top["sim"];
    sim.N = get_count(s["N"], "sim.N", sim.N);
    sim.beta = get_double(s["beta"], "sim.beta", sim.beta);
    sim.alpha_sigma = get_double(s["alpha_sigma"], "sim.alpha_sigma", sim.alpha_sigma);
    sim.dt_safety = get_double(s["dt_safety"], "sim.dt_safety", sim.dt_safety);
    sim.t_end = get_double(s["t_end"], "sim.t_end", sim.t_end);
    const long long seed = get_int(s["seed"], "sim.seed", static_cast<long long>(sim.seed));
    if (seed < 0) bad("sim.seed", "must be non-negative");
    sim.seed = static_cast<std::uint64_t>(seed);
    sim.frames_per_unit = get_double(s["frames_per_unit"], "sim.frames_per_unit", sim.frames_per_unit);
    if (s["record_times"]) sim.record_times = get_doubles(s["record_times"], "sim.record_times");
    sim.length_samples_per_unit =
        get_double(s["length_samples_per_unit"], "sim.length_samples_per_unit",
                   sim.length_samples_per_unit);
    if (s["block_l"]) sim.block_l_override = get_count(s["block_l"], "sim.block_l", 0);
    if (s["boundary"]) sim.boundary = parse_boundary_mode(get_string(s["boundary"], "sim.boundary", ""));
    sim.blowup_threshold = get_double(s["blowup_threshold"], "sim.blowup_threshold", sim.blowup_threshold);
    sim.energy_bound = get_double(s["energy_bound"], "sim.energy_bound", sim.energy_bound);
    if (s["dt"]) sim.dt_override = get_double(s["dt"], "sim.dt", 0.0);
    sim.dynamics.hamiltonian = get_bool(s["hamiltonian"], "sim.hamiltonian", sim.dynamics.hamiltonian);
    sim.dynamics.stochastic = get_bool(s["stochastic"], "sim.stochastic", sim.dynamics.stochastic);
  }
  if (top["N_list"]) {
    cfg.N_list.clear();
    const toml::array* arr = top["N_list"].as_array();
    if (!arr) bad("N_list", "expected an array of integers");
    for (const auto& e : *arr) {
      auto v = e.value<long long>();
      if (!v || *v <= 0) bad("N_list", "expected positive integers");
      cfg.N_list.push_back(static_cast<std::size_t>(*v));
    }
  } else {
    cfg.N_list = {sim.N};
  }

  if (const auto* t = root["potential"].as_table()) {
    check_keys(*t, "potential.", {"kind", "kappa", "delta"});
    const auto s = top["potential"];
    const PotentialKind kind = parse_potential_kind(
        get_string(s["kind"], "potential.kind", std::string(to_string(sim.potential.kind()))));
    if (kind == PotentialKind::Harmonic) {
      sim.potential = Potential::harmonic();
    } else {
      const double kappa = get_double(s["kappa"], "potential.kappa",
                                      sim.potential.kind() == kind ? sim.potential.kappa() : 0.2);
      const double delta = get_double(s["delta"], "potential.delta",
                                      sim.potential.kind() == kind ? sim.potential.delta() : 0.1);
      sim.potential = Potential::mollified_kappa(kappa, delta);
    }
  }

  if (const auto* t = root["schedule"].as_table()) {
    check_keys(*t, "schedule.", {"kind", "tau0", "tau1", "t_ramp", "knots"});
    const auto s = top["schedule"];
    const ScheduleKind kind = parse_schedule_kind(
        get_string(s["kind"], "schedule.kind", std::string(to_string(sim.schedule.kind()))));
    const double tau0 = get_double(s["tau0"], "schedule.tau0", sim.schedule.tau0());
    const double tau1 = get_double(s["tau1"], "schedule.tau1", sim.schedule.tau1());
    switch (kind) {
    case ScheduleKind::Constant: sim.schedule = TensionSchedule::constant(tau0); break;
    case ScheduleKind::SmoothRamp: {
      const double t_ramp = get_double(s["t_ramp"], "schedule.t_ramp",
                                       sim.schedule.t_ramp() > 0 ? sim.schedule.t_ramp() : 1.0);
      sim.schedule = TensionSchedule::smooth_ramp(tau0, tau1, t_ramp);
      break;
    }
    case ScheduleKind::PiecewiseCubic: {
      const toml::array* arr = s["knots"].as_array();
      if (!arr) bad("schedule.knots", "piecewise_cubic needs knots = [[t, value, slope], ...]");
      std::vector<TensionSchedule::Knot> knots;
      for (const auto& e : *arr) {
        const toml::array* k = e.as_array();
        if (!k || k->size() != 3) bad("schedule.knots", "each knot is [t, value, slope]");
        auto a = (*k)[0].value<double>(), b = (*k)[1].value<double>(), c = (*k)[2].value<double>();
        if (!a || !b || !c) bad("schedule.knots", "knot entries must be numbers");
        knots.push_back({*a, *b, *c});
      }
      sim.schedule = TensionSchedule::piecewise_cubic(std::move(knots));
      break;
    }
    }
  }

  if (const auto* t = root["thermo"].as_table()) {
    check_keys(*t, "thermo.", {"quad_tol", "inversion_tol", "tau_min", "tau_max", "tau_step"});
    const auto s = top["thermo"];
    cfg.thermo.quad_tol = get_double(s["quad_tol"], "thermo.quad_tol", cfg.thermo.quad_tol);
    cfg.thermo.inversion_tol = get_double(s["inversion_tol"], "thermo.inversion_tol", cfg.thermo.inversion_tol);
    cfg.thermo.tau_min = get_double(s["tau_min"], "thermo.tau_min", cfg.thermo.tau_min);
    cfg.thermo.tau_max = get_double(s["tau_max"], "thermo.tau_max", cfg.thermo.tau_max);
    cfg.thermo.tau_step = get_double(s["tau_step"], "thermo.tau_step", cfg.thermo.tau_step);
  }

  if (const auto* t = root["macro"].as_table()) {
    check_keys(*t, "macro.", {"eps", "M", "cfl"});
    const auto s = top["macro"];
    if (s["eps"]) cfg.macro.eps = get_double(s["eps"], "macro.eps", 0.0);
    if (s["M"]) cfg.macro.M = get_count(s["M"], "macro.M", 0);
    cfg.macro.cfl = get_double(s["cfl"], "macro.cfl", cfg.macro.cfl);
  }
  return cfg;
}

} // namespace

ExperimentConfig parse_config(std::string_view toml_text, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << e.description() << " at line " << e.source().begin.line;
    throw ConfigInvalid("config", msg.str());
  }
  for (const auto& o : overrides) apply_override(root, o);
  return from_table(root);
}

ExperimentConfig load_config(const std::filesystem::path& path,
                             const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("config", "cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

SimConfig sim_for(const ExperimentConfig& cfg, std::size_t N) {
  SimConfig sim = cfg.sim;
  sim.N = N;
  return sim;
}

std::vector<std::string> validate(const ExperimentConfig& cfg) {
  const SimConfig& sim = cfg.sim;
  if (cfg.replicas < 1) bad("replicas", "at least one replica is required");
  if (cfg.N_list.empty()) bad("N_list", "at least one N is required");
  if (!(sim.alpha_sigma > 0.0 && sim.alpha_sigma < 0.5))
    bad("sim.alpha_sigma", "must lie in (0, 1/2) so that sigma/N -> 0 and N/sigma^2 -> 0");
  if (!(sim.beta > 0.0)) bad("sim.beta", "must be positive");
  if (!(sim.dt_safety > 0.0 && sim.dt_safety < 1.0)) bad("sim.dt_safety", "must lie in (0, 1)");
  if (!(sim.t_end > 0.0)) bad("sim.t_end", "must be positive");
  if (!(sim.frames_per_unit > 0.0)) bad("sim.frames_per_unit", "must be positive");
  if (!(sim.length_samples_per_unit > 0.0)) bad("sim.length_samples_per_unit", "must be positive");
  if (sim.dt_override && !(*sim.dt_override > 0.0)) bad("sim.dt", "must be positive");
  if (cfg.macro.eps && !(*cfg.macro.eps >= 0.0)) bad("macro.eps", "must be non-negative");
  if (!(cfg.macro.cfl > 0.0 && cfg.macro.cfl <= 1.0)) bad("macro.cfl", "must lie in (0, 1]");

  std::vector<std::string> diag;
  for (std::size_t N : cfg.N_list) {
    if (N < 2) bad("N_list", "N must be at least 2");
    const SimConfig s = sim_for(cfg, N);
    const double sigma = noise_strength(s);
    const std::size_t l = block_width(s);
    const double nn = static_cast<double>(N);
    if (!(sigma < nn)) bad("sim.alpha_sigma", "sigma/N must be below 1 for N = " + std::to_string(N));
    if (!(nn < sigma * sigma)) bad("sim.alpha_sigma", "N/sigma^2 must be below 1 for N = " + std::to_string(N));
    if (l < 2) bad("N_list", "block width l(N) < 2 for N = " + std::to_string(N));
    if (2 * l + 1 > N) bad("N_list", "block width leaves no supported cell for N = " + std::to_string(N));
    const double dt = stable_dt(s);
    const double steps = std::ceil(s.t_end / dt);
    std::ostringstream line;
    line << "N=" << N << " sigma=" << sigma << " l=" << l << " dt=" << dt << " steps=" << steps
         << " site_steps_total=" << steps * nn * static_cast<double>(cfg.replicas);
    diag.push_back(line.str());
  }
  return diag;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  const SimConfig& s = cfg.sim;
  json sched{{"kind", to_string(s.schedule.kind())},
             {"tau0", s.schedule.tau0()},
             {"tau1", s.schedule.tau1()},
             {"t_ramp", s.schedule.t_ramp()}};
  if (s.schedule.kind() == ScheduleKind::PiecewiseCubic) {
    json knots = json::array();
    for (const auto& k : s.schedule.knots()) knots.push_back({k.t, k.value, k.slope});
    sched["knots"] = knots;
  }
  json emit = json::array();
  for (Emit e : cfg.emit) emit.push_back(to_string(e));
  json sim{{"N", s.N},
           {"beta", s.beta},
           {"alpha_sigma", s.alpha_sigma},
           {"dt_safety", s.dt_safety},
           {"t_end", s.t_end},
           {"seed", s.seed},
           {"frames_per_unit", s.frames_per_unit},
           {"record_times", s.record_times},
           {"length_samples_per_unit", s.length_samples_per_unit},
           {"boundary", to_string(s.boundary)},
           {"blowup_threshold", s.blowup_threshold},
           {"energy_bound", s.energy_bound},
           {"hamiltonian", s.dynamics.hamiltonian},
           {"stochastic", s.dynamics.stochastic}};
  if (s.block_l_override) sim["block_l"] = *s.block_l_override;
  if (s.dt_override) sim["dt"] = *s.dt_override;
  json macro{{"cfl", cfg.macro.cfl}};
  if (cfg.macro.eps) macro["eps"] = *cfg.macro.eps;
  if (cfg.macro.M) macro["M"] = *cfg.macro.M;
  return json{{"scenario", to_string(cfg.scenario)},
              {"replicas", cfg.replicas},
              {"N_list", cfg.N_list},
              {"output_dir", cfg.output_dir.string()},
              {"emit", emit},
              {"frame_format", cfg.frame_format == FrameFormat::Csv ? "csv" : "binary"},
              {"threads", cfg.threads},
              {"sim", sim},
              {"potential",
               {{"kind", to_string(s.potential.kind())},
                {"kappa", s.potential.kappa()},
                {"delta", s.potential.delta()}}},
              {"schedule", sched},
              {"thermo",
               {{"quad_tol", cfg.thermo.quad_tol},
                {"inversion_tol", cfg.thermo.inversion_tol},
                {"tau_min", cfg.thermo.tau_min},
                {"tau_max", cfg.thermo.tau_max},
                {"tau_step", cfg.thermo.tau_step}}},
              {"macro", macro},
              {"profile", {{"mean", cfg.profile.mean}, {"amplitude", cfg.profile.amplitude}}}};
}

} // namespace chainhydro::harness
