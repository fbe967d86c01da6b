#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "chainhydro/errors.hpp"
#include "chainhydro/harness/config.hpp"
#include "chainhydro/harness/frame_io.hpp"
#include "chainhydro/harness/runner.hpp"

using namespace chainhydro;
using namespace chainhydro::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chainhydro_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

} // namespace

TEST(Config, ValidateReportsBlockWidth) {
  ExperimentConfig cfg = parse_config("", {"sim.N=64"});
  const auto diag = validate(cfg);
  ASSERT_EQ(diag.size(), 1u);
  EXPECT_NE(diag[0].find("l=13"), std::string::npos) << diag[0];
}

TEST(Config, RejectsAlphaOutsideRange) {
  ExperimentConfig cfg = parse_config("", {"sim.alpha_sigma=0.6"});
  EXPECT_THROW(validate(cfg), ConfigInvalid);
  try {
    validate(cfg);
  } catch (const ConfigInvalid& e) {
    EXPECT_EQ(e.field(), "sim.alpha_sigma");
  }
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  EXPECT_THROW(parse_config("[sim]\nfoo = 1\n"), ConfigInvalid);
  EXPECT_THROW(parse_config("scenario = \"teleport\"\n"), ConfigInvalid);
  EXPECT_THROW(parse_config("[sim]\nN = \"many\"\n"), ConfigInvalid);
  EXPECT_THROW(validate(parse_config("replicas = 0\n")), ConfigInvalid);
  EXPECT_THROW(validate(parse_config("N_list = [4]\n")), ConfigInvalid);
}

TEST(Config, FileThenOverrides) {
  const std::string text = R"(
scenario = "fast_ramp_shock"
replicas = 3
N_list = [64, 128]
[sim]
seed = 42
t_end = 0.25
[potential]
kind = "mollified_kappa"
kappa = 0.25
[schedule]
kind = "smooth_ramp"
tau0 = 0.0
tau1 = 0.6
t_ramp = 0.2
)";
  const auto cfg = parse_config(text, {"sim.seed=7", "replicas=5"});
  EXPECT_EQ(cfg.scenario, Scenario::FastRampShock);
  EXPECT_EQ(cfg.replicas, 5u);
  EXPECT_EQ(cfg.sim.seed, 7u);
  EXPECT_EQ(cfg.N_list, (std::vector<std::size_t>{64, 128}));
  EXPECT_DOUBLE_EQ(cfg.sim.t_end, 0.25);
  EXPECT_DOUBLE_EQ(cfg.sim.potential.kappa(), 0.25);
  EXPECT_DOUBLE_EQ(cfg.sim.schedule.value(1.0), 0.6);
  EXPECT_NO_THROW(validate(cfg));
}

TEST(Config, ScenarioDefaults) {
  const auto st = scenario_defaults(Scenario::Stationary);
  EXPECT_EQ(st.sim.N, 128u);
  EXPECT_DOUBLE_EQ(st.sim.schedule.value(0.3), 0.5);
  const auto fr = scenario_defaults(Scenario::FastRampShock);
  EXPECT_EQ(fr.sim.N, 256u);
  EXPECT_DOUBLE_EQ(fr.sim.schedule.t_ramp(), 0.2);
  EXPECT_DOUBLE_EQ(fr.sim.schedule.tau1(), 0.6);
  EXPECT_EQ(scenario_defaults(Scenario::ManufacturedLinear).sim.potential.kind(), PotentialKind::Harmonic);
}

TEST(FrameIo, CsvRoundTripIsExact) {
  const auto dir = scratch("csv");
  const Frame a{0.125, {0.1, -2.5e-17, 3.0}, {1.0 / 3.0, 0.0, -7.25}};
  const Frame b{0.25, {1e300, 2.0, -0.0}, {4.0, 5.0, 6.0}};
  {
    CsvFrameSink sink(dir / "f.csv");
    sink.write(a);
    sink.write(b);
  }
  const auto frames = read_frames(dir / "f.csv");
  ASSERT_EQ(frames.size(), 2u);
  EXPECT_EQ(frames[0].t, a.t);
  EXPECT_EQ(frames[0].r, a.r);
  EXPECT_EQ(frames[0].p, a.p);
  EXPECT_EQ(frames[1].r, b.r);
  EXPECT_EQ(slurp(dir / "f.csv").rfind("# schema=1\nt,i,r,p\n", 0), 0u);
}

TEST(FrameIo, BinaryRoundTripIsExact) {
  const auto dir = scratch("bin");
  const Frame a{0.5, {0.1, 0.2}, {0.3, 0.4}};
  {
    BinaryFrameSink sink(dir / "f.bin", 2);
    sink.write(a);
    EXPECT_THROW(sink.write(Frame{0.0, {1.0}, {1.0}}), std::runtime_error);
  }
  const auto frames = read_frames(dir / "f.bin");
  ASSERT_EQ(frames.size(), 1u);
  EXPECT_EQ(frames[0].r, a.r);
  EXPECT_EQ(frames[0].p, a.p);
}

TEST(FrameIo, RefusesMissingSchema) {
  const auto dir = scratch("schema");
  std::ofstream(dir / "x.csv") << "t,i,r,p\n0,1,0,0\n";
  EXPECT_THROW(read_frames_csv(dir / "x.csv"), std::runtime_error);
  std::ofstream(dir / "y.csv") << "# schema=2\nN,residual\n";
  EXPECT_THROW(read_table(dir / "y.csv"), std::runtime_error);
}

TEST(FrameIo, TableRoundTrip) {
  const auto dir = scratch("table");
  write_table(dir / "t.csv", "N,residual", {"128,0.5", "256,0.25"});
  const auto t = read_table(dir / "t.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"N", "residual"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1][1], 0.25);
}

TEST(Runner, StationarySmokeRunAndDeterminism) {
  const auto dir = scratch("smoke");
  auto cfg = parse_config("", {"sim.N=64", "sim.t_end=0.05", "replicas=4", "threads=2"});
  cfg.output_dir = dir / "a";
  const auto rep = run(cfg);
  EXPECT_EQ(rep.failed, 0u);
  std::size_t frame_files = 0;
  for (const auto& e : fs::directory_iterator(cfg.output_dir))
    if (e.path().filename().string().rfind("frames_N64_r", 0) == 0) ++frame_files;
  EXPECT_EQ(frame_files, 4u);
  ASSERT_TRUE(fs::exists(cfg.output_dir / "manifest.json"));

  // Identical config, fresh directory: byte-identical data files.
  cfg.output_dir = dir / "b";
  run(cfg);
  for (int k = 0; k < 4; ++k) {
    const std::string f = "frames_N64_r" + std::to_string(k) + ".csv";
    const std::string l = "lengths_N64_r" + std::to_string(k) + ".csv";
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f));
    EXPECT_EQ(slurp(dir / "a" / l), slurp(dir / "b" / l));
  }

  // Any replica regenerates from its manifest seed alone.
  std::ifstream in(dir / "a" / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  EXPECT_EQ(manifest.at("schema"), 1);
  const auto& third = manifest.at("replicas").at(2);
  const auto seed = third.at("seed").get<std::uint64_t>();
  const auto replay = replay_replica(cfg, 64, seed, dir / "c");
  EXPECT_EQ(slurp(dir / "a" / third.at("frames_file").get<std::string>()),
            slurp(dir / "c" / replay.frames_file));
}

TEST(Runner, AnalyzeRecomputesTables) {
  const auto dir = scratch("analyze");
  auto cfg = parse_config("", {"sim.N=32", "sim.t_end=0.1", "replicas=3", "threads=1"});
  cfg.emit = {Emit::Frames, Emit::Residuals, Emit::Clausius, Emit::Weak};
  cfg.output_dir = dir;
  run(cfg);
  const std::string residuals = slurp(dir / "residuals.csv");
  const std::string clausius = slurp(dir / "clausius_N32.csv");
  fs::remove(dir / "residuals.csv");
  fs::remove(dir / "clausius_N32.csv");
  analyze_directory(cfg, dir);
  EXPECT_EQ(slurp(dir / "residuals.csv"), residuals);
  EXPECT_EQ(slurp(dir / "clausius_N32.csv"), clausius);
  const auto weak = read_table(dir / "weak_N32.csv");
  EXPECT_EQ(weak.rows.size(), 8u);
}

TEST(Runner, ThermoTablesAndMacroFrames) {
  const auto dir = scratch("tables");
  const ThermoModel thermo(Potential::harmonic(), 1.0);
  const auto paths = write_thermo_tables(thermo, dir, 0.5);
  ASSERT_EQ(paths.size(), 2u);
  const auto t = read_table(paths[0]);
  EXPECT_EQ(t.header, (std::vector<std::string>{"tau", "G", "ell"}));
  for (const auto& row : t.rows) EXPECT_NEAR(row[2], row[0], 1e-8);

  auto cfg = parse_config("scenario = \"manufactured_linear\"\n", {"sim.N=32", "sim.t_end=0.2"});
  const auto macro = run_macro(cfg, 32, thermo);
  write_macro_frames(macro, dir / "macro.csv");
  const auto frames = read_frames(dir / "macro.csv");
  EXPECT_EQ(frames.size(), macro.fields.frames());
  // Manufactured initial data is the standing wave at t = 0.
  const LinearWave wave{cfg.profile.mean, cfg.profile.amplitude};
  EXPECT_NEAR(frames[0].r[0], wave.r(0.0, macro.fields.center(0)), 1e-15);
}

TEST(Runner, ReplicaSeedsAreDistinct) {
  EXPECT_NE(replica_seed(1, 128, 0), replica_seed(1, 128, 1));
  EXPECT_NE(replica_seed(1, 128, 0), replica_seed(1, 256, 0));
  EXPECT_NE(replica_seed(1, 128, 0), replica_seed(2, 128, 0));
  EXPECT_EQ(replica_seed(1, 128, 5), replica_seed(1, 128, 5));
}

TEST(Runner, ParallelForPropagatesErrors) {
  std::vector<int> hits(20, 0);
  parallel_for(20, 3, [&](std::size_t k) { hits[k] += 1; });
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(5, 2, [](std::size_t k) {
                 if (k == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}
