#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "chainhydro/errors.hpp"
#include "chainhydro/pdesolver.hpp"

using namespace chainhydro;

namespace {

class PdeTest : public ::testing::Test {
protected:
  static void SetUpTestSuite() {
    kappa_ = std::make_unique<ThermoModel>(Potential::mollified_kappa(), 1.0);
    harmonic_ = std::make_unique<ThermoModel>(Potential::harmonic(), 1.0);
  }
  static void TearDownTestSuite() {
    kappa_.reset();
    harmonic_.reset();
  }
  static std::unique_ptr<ThermoModel> kappa_;
  static std::unique_ptr<ThermoModel> harmonic_;
};

std::unique_ptr<ThermoModel> PdeTest::kappa_;
std::unique_ptr<ThermoModel> PdeTest::harmonic_;

double wave_r(double t, double x) { return 0.5 - 0.2 * std::cos(M_PI * t / 2) * std::cos(M_PI * x / 2); }
double wave_p(double t, double x) { return 0.2 * std::sin(M_PI * t / 2) * std::sin(M_PI * x / 2); }

std::vector<double> uniform_times(double T, std::size_t n) {
  std::vector<double> t;
  for (std::size_t k = 0; k <= n; ++k) t.push_back(T * static_cast<double>(k) / static_cast<double>(n));
  return t;
}

} // namespace

TEST_F(PdeTest, EquilibriumIsAFixedPoint) {
  for (const ThermoModel* th : {kappa_.get(), harmonic_.get()}) {
    const double ell = 0.37;
    const auto sched = TensionSchedule::constant(th->tau_of_ell(ell));
    MacroField f(64, 0.01);
    std::fill(f.r.begin(), f.r.end(), ell);
    MacroField g = f;
    for (int k = 0; k < 50; ++k) g = macro_step(g, macro_stable_dt(g, *th), sched, *th);
    for (std::size_t c = 0; c < 64; ++c) {
      EXPECT_EQ(g.r[c], ell);
      EXPECT_EQ(g.p[c], 0.0);
    }
  }
}

TEST_F(PdeTest, ZeroDataZeroTensionStaysZero) {
  const auto traj = solve([](double) { return 0.0; }, [](double) { return 0.0; },
                          TensionSchedule::constant(0.0), *harmonic_, 1e-3, 32, {0.0, 0.1, 0.2});
  for (std::size_t k = 0; k < traj.fields.frames(); ++k)
    for (std::size_t c = 0; c < 32; ++c) {
      EXPECT_EQ(traj.fields.r[k][c], 0.0);
      EXPECT_EQ(traj.fields.p[k][c], 0.0);
    }
}

TEST_F(PdeTest, GhostsRealiseBoundaryConditions) {
  MacroField f(16, 1e-3);
  for (std::size_t c = 0; c < 16; ++c) {
    f.r[c] = 0.1 * static_cast<double>(c);
    f.p[c] = 0.2 - 0.01 * static_cast<double>(c);
  }
  f.t = 0.3;
  const auto sched = TensionSchedule::smooth_ramp(0.0, 0.6, 1.0);
  const auto g = ghost_values(f, sched, *kappa_);
  EXPECT_NEAR(0.5 * (g.p_left + f.p[0]), 0.0, 1e-12);
  EXPECT_NEAR(0.5 * (g.tau_right + kappa_->tau_of_ell(f.r[15])), sched.value(0.3), 1e-12);
  EXPECT_EQ(g.r_left, f.r[0]);
  EXPECT_EQ(g.p_right, f.p[15]);
  EXPECT_NEAR(kappa_->tau_of_ell(g.r_right), g.tau_right, 1e-8);
}

TEST_F(PdeTest, TotalsChangeOnlyThroughBoundaryFluxes) {
  for (double eps : {0.0, 2e-3}) {
    MacroField f(40, eps);
    for (std::size_t c = 0; c < 40; ++c) {
      const double x = f.dx() * (static_cast<double>(c) + 0.5);
      f.r[c] = 0.2 + 0.3 * std::sin(5 * x);
      f.p[c] = 0.1 * std::cos(7 * x);
    }
    const auto sched = TensionSchedule::constant(0.0);
    std::vector<double> dr, dp;
    macro_rhs(f, sched, *kappa_, dr, dp);
    const auto g = ghost_values(f, sched, *kappa_);
    const double h = f.dx();
    const double tau_first = kappa_->tau_of_ell(f.r.front()), tau_last = kappa_->tau_of_ell(f.r.back());
    double sr = 0.0, sp = 0.0;
    for (std::size_t c = 0; c < 40; ++c) {
      sr += dr[c] * h;
      sp += dp[c] * h;
    }
    const double flux_r = 0.5 * (f.p.back() + g.p_right) - 0.5 * (f.p.front() + g.p_left) +
                          eps * ((g.tau_right - tau_last) - (tau_first - g.tau_left)) / h;
    const double flux_p = 0.5 * (tau_last + g.tau_right) - 0.5 * (tau_first + g.tau_left) +
                          eps * ((g.p_right - f.p.back()) - (f.p.front() - g.p_left)) / h;
    EXPECT_NEAR(sr, flux_r, 1e-13);
    EXPECT_NEAR(sp, flux_p, 1e-13);
  }
}

TEST_F(PdeTest, ManufacturedLinearWaveConvergesAtSecondOrder) {
  const auto sched = TensionSchedule::constant(0.5);
  std::vector<double> err;
  for (std::size_t m : {32, 64, 128, 256}) {
    const auto traj = solve([](double x) { return wave_r(0.0, x); }, [](double x) { return wave_p(0.0, x); },
                            sched, *harmonic_, 0.0, m, {0.0, 0.5});
    double e = 0.0;
    for (std::size_t c = 0; c < m; ++c) {
      const double x = traj.fields.center(c);
      e += std::abs(traj.fields.r[1][c] - wave_r(0.5, x)) + std::abs(traj.fields.p[1][c] - wave_p(0.5, x));
    }
    err.push_back(e / static_cast<double>(m));
  }
  for (std::size_t k = 1; k < err.size(); ++k) EXPECT_GE(std::log2(err[k - 1] / err[k]), 1.8) << k;
}

TEST_F(PdeTest, FramesLandOnRequestedTimes) {
  const auto times = uniform_times(0.3, 7);
  const auto traj = solve([](double) { return 0.2; }, [](double) { return 0.0; },
                          TensionSchedule::smooth_ramp(0.0, 0.4, 0.3), *kappa_, 1e-3, 50, times);
  ASSERT_EQ(traj.fields.frames(), times.size());
  for (std::size_t k = 0; k < times.size(); ++k) EXPECT_EQ(traj.fields.times[k], times[k]);
  EXPECT_EQ(traj.fields.l, 0u);
  EXPECT_GT(traj.steps, 0u);
}

TEST_F(PdeTest, VanishingViscosityCauchyTrend) {
  const auto sched = TensionSchedule::smooth_ramp(0.0, 0.6, 0.5);
  const double ell0 = kappa_->ell_of_tau(0.0);
  auto run = [&](double eps) {
    return solve([&](double x) { return ell0 + 0.1 * std::cos(M_PI * x); }, [](double) { return 0.0; }, sched,
                 *kappa_, eps, 512, {0.0, 0.5});
  };
  const auto a = run(4e-3), b = run(2e-3), c = run(1e-3);
  const double dab = l1_distance(a.fields, 1, b.fields, 1), dbc = l1_distance(b.fields, 1, c.fields, 1);
  EXPECT_LT(dbc, dab);
}

TEST_F(PdeTest, ShockRegimeWeakResidualIsTheViscousTerm) {
  // Integrating the viscous system against (phi, psi) by parts leaves exactly
  // R_r = eps int int tau(r)_x phi_x and R_p = eps int int p_x psi_x, so the
  // inviscid residual is O(eps) and what remains after subtracting those
  // terms is discretisation error.
  const double eps = 1e-3, T = 0.5;
  const auto sched = TensionSchedule::smooth_ramp(0.0, 0.6, 0.2);
  const double ell0 = kappa_->ell_of_tau(0.0);
  const auto traj = solve([&](double) { return ell0; }, [](double) { return 0.0; }, sched, *kappa_, eps, 2048,
                          uniform_times(T, 200));
  EXPECT_TRUE(std::isfinite(traj.max_total_variation));
  EXPECT_LT(traj.max_total_variation, 2.0);

  const auto& f = traj.fields;
  const double h = f.dx();
  auto viscous = [&](const TestFunction& phi, const TestFunction& psi) {
    double vr = 0.0, vp = 0.0;
    for (std::size_t k = 0; k < f.frames(); ++k) {
      const double t = f.times[k];
      const double w = (k == 0 || k + 1 == f.frames() ? 0.5 : 1.0) * (T / 200.0);
      for (std::size_t c = 0; c + 1 < f.N; ++c) {
        const double x = static_cast<double>(c + 1) * h;
        vr += w * eps * (kappa_->tau_of_ell(f.r[k][c + 1]) - kappa_->tau_of_ell(f.r[k][c])) * phi.dx(t, x);
        vp += w * eps * (f.p[k][c + 1] - f.p[k][c]) * psi.dx(t, x);
      }
    }
    return std::pair{vr, vp};
  };
  const auto phi = phi_basis(T), psi = psi_basis(T);
  for (std::size_t k = 0; k < phi.size(); ++k) {
    const auto r = weak_residual(f, phi[k], psi[k], sched, *kappa_);
    const auto [vr, vp] = viscous(phi[k], psi[k]);
    EXPECT_LT(std::abs(r.r) + std::abs(r.p), 1e-2) << "basis " << k;
    EXPECT_LT(std::abs(r.r - vr) + std::abs(r.p - vp), 1e-4) << "basis " << k << " R=(" << r.r << ", " << r.p
                                                              << ") viscous=(" << vr << ", " << vp << ")";
  }
}

TEST_F(PdeTest, RejectsBadInput) {
  EXPECT_THROW(solve([](double) { return 0.0; }, [](double) { return 0.0; }, TensionSchedule::constant(0.0),
                     *harmonic_, -1.0, 8, {0.0, 0.1}),
               ConfigInvalid);
  EXPECT_THROW(solve([](double) { return 0.0; }, [](double) { return 0.0; }, TensionSchedule::constant(0.0),
                     *harmonic_, 0.0, 8, {0.1, 0.2}),
               std::invalid_argument);
  MacroField f(8, 0.0);
  f.r[3] = NAN;
  EXPECT_THROW(macro_step(f, 1e-3, TensionSchedule::constant(0.0), *harmonic_), std::exception);
}

TEST(TotalVariation, Basic) {
  EXPECT_EQ(total_variation({1.0, 3.0, 2.0, 2.0}), 3.0);
  EXPECT_EQ(total_variation({}), 0.0);
}
