#include "chainhydro/potential.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "chainhydro/errors.hpp"

namespace chainhydro {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double normal_pdf(double u) { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }
double normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

// Antiderivatives of Phi, used for the closed forms of V' and V:
//   d/du [u Phi(u) + phi(u)] = Phi(u)
//   d/du [((u^2 + 1) Phi(u) + u phi(u)) / 2] = u Phi(u) + phi(u)
double phi_int1(double u) { return u * normal_cdf(u) + normal_pdf(u); }
double phi_int2(double u) {
  return 0.5 * ((u * u + 1.0) * normal_cdf(u) + u * normal_pdf(u));
}

// Tabulation window in units of delta; beyond it Phi is 0 or 1 to double precision.
constexpr double kTableHalfWidth = 9.0;
constexpr int kNodesPerDelta = 200;

} // namespace

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
  case PotentialKind::Harmonic: return "harmonic";
  case PotentialKind::MollifiedKappa: return "mollified_kappa";
  }
  return "unknown";
}

PotentialKind parse_potential_kind(std::string_view name) {
  if (name == "harmonic") return PotentialKind::Harmonic;
  if (name == "mollified_kappa") return PotentialKind::MollifiedKappa;
  throw ConfigInvalid("potential.kind", "unknown potential '" + std::string(name) + "'");
}

Potential Potential::harmonic() { return Potential(PotentialKind::Harmonic, 0.0, 0.0); }

Potential Potential::mollified_kappa(double kappa, double delta) {
  if (!(kappa > 0.0 && kappa < 1.0 / 3.0))
    throw ConfigInvalid("potential.kappa", "kappa must lie in (0, 1/3)");
  if (!(delta > 0.0)) throw ConfigInvalid("potential.delta", "delta must be positive");
  return Potential(PotentialKind::MollifiedKappa, kappa, delta);
}

double Potential::c1() const { return kind_ == PotentialKind::Harmonic ? 1.0 : 1.0 - kappa_; }
double Potential::c2() const { return 1.0; }
double Potential::curvature_minus() const { return c1(); }
double Potential::curvature_plus() const { return 1.0; }

double Potential::v(double r) const {
  if (kind_ == PotentialKind::Harmonic) return 0.5 * r * r;
  const double u = r / delta_;
  return 0.5 * (1.0 - kappa_) * r * r + kappa_ * delta_ * delta_ * (phi_int2(u) - 0.25);
}

double Potential::dv(double r) const {
  if (kind_ == PotentialKind::Harmonic) return r;
  return (1.0 - kappa_) * r + kappa_ * delta_ * phi_int1(r / delta_);
}

double Potential::ddv(double r) const {
  if (kind_ == PotentialKind::Harmonic) return 1.0;
  return (1.0 - kappa_) + kappa_ * normal_cdf(r / delta_);
}

double Potential::force_root(double tau) const {
  if (kind_ == PotentialKind::Harmonic) return tau;
  // V' is increasing with slope in [c1, c2]; bracket from the two linear bounds.
  double lo = std::min(tau / c1(), tau / c2()) - 1.0;
  double hi = std::max(tau / c1(), tau / c2()) + 1.0;
  double r = tau >= 0.0 ? tau : tau / c1();
  for (int it = 0; it < 100; ++it) {
    const double f = dv(r) - tau;
    if (f == 0.0) return r;
    if (f > 0.0) hi = r; else lo = r;
    double next = r - f / ddv(r);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - r) <= 1e-15 * std::max(1.0, std::abs(r))) return next;
    r = next;
  }
  return r;
}

ForceTable::ForceTable(const Potential& potential) {
  if (potential.kind() == PotentialKind::Harmonic) return;
  harmonic_ = false;
  const double delta = potential.delta();
  lo_ = -kTableHalfWidth * delta;
  hi_ = kTableHalfWidth * delta;
  slope_minus_ = potential.curvature_minus();
  n_intervals_ = static_cast<std::size_t>(2 * kTableHalfWidth * kNodesPerDelta);
  const double h = (hi_ - lo_) / static_cast<double>(n_intervals_);
  inv_h_ = 1.0 / h;
  coeffs_.resize(4 * n_intervals_);
  for (std::size_t k = 0; k < n_intervals_; ++k) {
    const double x0 = lo_ + h * static_cast<double>(k);
    const double x1 = lo_ + h * static_cast<double>(k + 1);
    const double f0 = potential.dv(x0), f1 = potential.dv(x1);
    const double d0 = potential.ddv(x0) * h, d1 = potential.ddv(x1) * h;
    // Hermite cubic in the local coordinate u in [0, 1].
    coeffs_[4 * k + 0] = f0;
    coeffs_[4 * k + 1] = d0;
    coeffs_[4 * k + 2] = 3.0 * (f1 - f0) - 2.0 * d0 - d1;
    coeffs_[4 * k + 3] = 2.0 * (f0 - f1) + d0 + d1;
  }
}

} // namespace chainhydro
