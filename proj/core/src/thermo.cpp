#include "chainhydro/thermo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "chainhydro/errors.hpp"

namespace chainhydro {

namespace {

// Integrand below 1e-16 of its peak is dropped: exp(-x) < 1e-16 for x > 36.85.
constexpr double kTailExponent = 36.85;

struct Hermite {
  double f0, d0, f1, d1;  // values and derivatives w.r.t. the local coordinate

  double value(double u) const {
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * f0 + (u3 - 2 * u2 + u) * d0 + (-2 * u3 + 3 * u2) * f1 +
           (u3 - u2) * d1;
  }
  double slope(double u) const {
    const double u2 = u * u;
    return (6 * u2 - 6 * u) * f0 + (3 * u2 - 4 * u + 1) * d0 + (-6 * u2 + 6 * u) * f1 +
           (3 * u2 - 2 * u) * d1;
  }
};

} // namespace

ThermoModel::ThermoModel(Potential potential, double beta, ThermoOptions options)
    : potential_(potential), beta_(beta), options_(options) {
  if (!(beta > 0.0)) throw ConfigInvalid("sim.beta", "inverse temperature must be positive");
  if (!(options_.tau_step > 0.0) || !(options_.tau_max > options_.tau_min))
    throw ConfigInvalid("thermo.tau_grid", "empty or inverted tension grid");
  const auto n = static_cast<std::size_t>(
                     std::llround((options_.tau_max - options_.tau_min) / options_.tau_step)) + 1;
  tau_.resize(n);
  g_.resize(n);
  ell_.resize(n);
  dell_.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = options_.tau_min + options_.tau_step * static_cast<double>(k);
    const SiteMoments m = site_moments(tau);
    tau_[k] = tau;
    g_[k] = m.log_z;
    ell_[k] = m.mean;
    dell_[k] = beta_ * m.variance;
  }
  for (std::size_t k = 1; k < n; ++k) {
    if (!(ell_[k] > ell_[k - 1]))
      throw NonConvergedQuadrature("ell(tau) is not increasing on the tension grid");
  }
}

SiteMoments ThermoModel::site_moments(double tau) const {
  using boost::math::quadrature::gauss_kronrod;
  const double mode = potential_.force_root(tau);
  const double g0 = beta_ * (potential_.v(mode) - tau * mode);
  const double half_width = std::sqrt(2.0 * kTailExponent / (beta_ * potential_.c1()));

  std::vector<double> cuts{mode - half_width, mode, mode + half_width};
  if (potential_.kind() == PotentialKind::MollifiedKappa && cuts.front() < 0.0 &&
      cuts.back() > 0.0 && mode != 0.0)
    cuts.push_back(0.0);
  std::sort(cuts.begin(), cuts.end());

  auto weight = [&](double r) {
    return std::exp(-(beta_ * (potential_.v(r) - tau * r) - g0));
  };

  double z = 0.0, m1 = 0.0, m2 = 0.0, z_err = 0.0;
  for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
    const double a = cuts[s], b = cuts[s + 1];
    double err = 0.0;
    z += gauss_kronrod<double, 31>::integrate(weight, a, b, options_.max_refinements, 1e-13, &err);
    z_err += err;
    m1 += gauss_kronrod<double, 31>::integrate(
        [&](double r) { return (r - mode) * weight(r); }, a, b, options_.max_refinements, 1e-13);
    m2 += gauss_kronrod<double, 31>::integrate(
        [&](double r) { return (r - mode) * (r - mode) * weight(r); }, a, b,
        options_.max_refinements, 1e-13);
  }
  if (!(z > 0.0) || !std::isfinite(z) || z_err > options_.quad_tol * z)
    throw NonConvergedQuadrature("partition integral at tau = " + std::to_string(tau) +
                                 " did not reach tolerance");
  const double mean_shift = m1 / z;
  return SiteMoments{-g0 + std::log(z), mode + mean_shift, m2 / z - mean_shift * mean_shift};
}

bool ThermoModel::on_grid(double tau) const { return tau >= tau_.front() && tau <= tau_.back(); }

std::size_t ThermoModel::segment(double tau, double& u) const {
  const double s = (tau - tau_.front()) / options_.tau_step;
  auto k = static_cast<std::size_t>(std::max(0.0, std::floor(s)));
  if (k >= tau_.size() - 1) k = tau_.size() - 2;
  u = (tau - tau_[k]) / options_.tau_step;
  return k;
}

double ThermoModel::gibbs_G(double tau) const {
  if (!on_grid(tau)) return site_moments(tau).log_z;
  double u = 0.0;
  const std::size_t k = segment(tau, u);
  const double h = options_.tau_step;
  const Hermite hg{g_[k], h * beta_ * ell_[k], g_[k + 1], h * beta_ * ell_[k + 1]};
  return hg.value(u);
}

double ThermoModel::ell_of_tau(double tau) const {
  if (!on_grid(tau)) return site_moments(tau).mean;
  double u = 0.0;
  const std::size_t k = segment(tau, u);
  const double h = options_.tau_step;
  const Hermite he{ell_[k], h * dell_[k], ell_[k + 1], h * dell_[k + 1]};
  return he.value(u);
}

double ThermoModel::dell_dtau(double tau) const {
  if (!on_grid(tau)) return beta_ * site_moments(tau).variance;
  double u = 0.0;
  const std::size_t k = segment(tau, u);
  const double h = options_.tau_step;
  const Hermite he{ell_[k], h * dell_[k], ell_[k + 1], h * dell_[k + 1]};
  return he.slope(u) / h;
}

double ThermoModel::tau_of_ell(double ell) const {
  if (!std::isfinite(ell)) throw OutOfRange("tau_of_ell: non-finite argument");
  if (ell < ell_.front() || ell > ell_.back()) return tau_of_ell_direct(ell);

  auto it = std::upper_bound(ell_.begin(), ell_.end(), ell);
  std::size_t k = it == ell_.begin() ? 0 : static_cast<std::size_t>(it - ell_.begin()) - 1;
  if (k >= ell_.size() - 1) k = ell_.size() - 2;
  const double h = options_.tau_step;
  const Hermite he{ell_[k], h * dell_[k], ell_[k + 1], h * dell_[k + 1]};

  // Safeguarded Newton on the monotone segment polynomial.
  double lo = 0.0, hi = 1.0;
  double u = (ell - ell_[k]) / (ell_[k + 1] - ell_[k]);
  for (int it_count = 0; it_count < 60; ++it_count) {
    const double f = he.value(u) - ell;
    if (f == 0.0) break;
    if (f > 0.0) hi = u; else lo = u;
    const double d = he.slope(u);
    double next = d > 0.0 ? u - f / d : 0.5 * (lo + hi);
    if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - u) < 1e-16) { u = next; break; }
    u = next;
  }
  return tau_[k] + h * u;
}

double ThermoModel::tau_of_ell_direct(double ell) const {
  // Extend the bracket geometrically away from the cached grid.
  double lo, hi;
  if (ell > ell_.back()) {
    lo = tau_.back();
    double step = 1.0;
    hi = lo + step;
    while (site_moments(hi).mean < ell) {
      lo = hi;
      step *= 2.0;
      hi = lo + step;
      if (hi > 1e4) throw OutOfRange("tau_of_ell: cannot bracket ell = " + std::to_string(ell));
    }
  } else {
    hi = tau_.front();
    double step = 1.0;
    lo = hi - step;
    while (site_moments(lo).mean > ell) {
      hi = lo;
      step *= 2.0;
      lo = hi - step;
      if (lo < -1e4) throw OutOfRange("tau_of_ell: cannot bracket ell = " + std::to_string(ell));
    }
  }
  double tau = 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const SiteMoments m = site_moments(tau);
    const double f = m.mean - ell;
    if (std::abs(f) <= 1e-3 * options_.inversion_tol) return tau;
    if (f > 0.0) hi = tau; else lo = tau;
    double next = tau - f / (beta_ * m.variance);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    tau = next;
    if (hi - lo < 1e-15 * std::max(1.0, std::abs(tau))) return tau;
  }
  const double residual = site_moments(tau).mean - ell;
  if (std::abs(residual) > options_.inversion_tol)
    throw OutOfRange("tau_of_ell: inversion did not converge for ell = " + std::to_string(ell));
  return tau;
}

double ThermoModel::free_energy_F(double ell) const {
  const double tau = tau_of_ell(ell);
  return tau * ell - gibbs_G(tau) / beta_;
}

SitePoint ThermoModel::sample_site(double pbar, double tau, Rng& rng) const {
  SitePoint out;
  out.p = pbar + standard_normal(rng) / std::sqrt(beta_);

  const double mode = potential_.force_root(tau);
  const double curvature = beta_ * potential_.c1();
  const double sd = 1.0 / std::sqrt(curvature);
  const double v_mode = potential_.v(mode);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    const double x = mode + sd * standard_normal(rng);
    const double dx = x - mode;
    // log(target / envelope) <= 0 because V'' >= c1.
    const double log_ratio =
        -beta_ * (potential_.v(x) - v_mode - tau * dx) + 0.5 * curvature * dx * dx;
    if (log_ratio > 1e-9 * (1.0 + 0.5 * curvature * dx * dx))
      throw EnvelopeFailure("Gaussian envelope does not dominate the site measure");
    if (std::log(uniform01(rng)) < log_ratio) {
      out.r = x;
      return out;
    }
  }
  throw EnvelopeFailure("rejection sampler exceeded its attempt budget");
}

CurvatureReport tau_curvature_check(const ThermoModel& model, std::span<const double> ell_grid,
                                    double nonlinearity_tol) {
  CurvatureReport report;
  const std::size_t n = ell_grid.size();
  if (n < 3) return report;
  report.ell.assign(ell_grid.begin(), ell_grid.end());
  report.tau.resize(n);
  for (std::size_t i = 0; i < n; ++i) report.tau[i] = model.tau_of_ell(ell_grid[i]);

  report.min_dtau = std::numeric_limits<double>::infinity();
  report.max_dtau = -std::numeric_limits<double>::infinity();
  report.min_d2tau = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h1 = ell_grid[i] - ell_grid[i - 1];
    const double h2 = ell_grid[i + 1] - ell_grid[i];
    const double fm = report.tau[i - 1], f0 = report.tau[i], fp = report.tau[i + 1];
    const double d1 =
        -h2 / (h1 * (h1 + h2)) * fm + (h2 - h1) / (h1 * h2) * f0 + h1 / (h2 * (h1 + h2)) * fp;
    const double d2 = 2.0 * (fm / (h1 * (h1 + h2)) - f0 / (h1 * h2) + fp / (h2 * (h1 + h2)));
    report.dtau.push_back(d1);
    report.d2tau.push_back(d2);
    report.min_dtau = std::min(report.min_dtau, d1);
    report.max_dtau = std::max(report.max_dtau, d1);
    report.min_d2tau = std::min(report.min_d2tau, d2);
  }
  report.strictly_hyperbolic = report.min_dtau > 0.0;
  report.genuinely_nonlinear = report.min_d2tau > nonlinearity_tol;
  return report;
}

} // namespace chainhydro
