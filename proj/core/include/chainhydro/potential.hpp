#pragma once

#include <string_view>
#include <vector>

namespace chainhydro {

enum class PotentialKind { Harmonic, MollifiedKappa };

std::string_view to_string(PotentialKind kind);
PotentialKind parse_potential_kind(std::string_view name);

// Spring interaction V(r) between neighbouring particles.
//
// Harmonic:        V(r) = r^2 / 2.
// MollifiedKappa:  Gaussian mollification (width delta) of
//                  (1 - kappa) r^2 / 2 + kappa r |r|_+ / 2, which gives
//                  V''(r) = (1 - kappa) + kappa * Phi(r / delta)
//                  with Phi the standard normal CDF. The integration constants
//                  are V(0) = 0 and V'(0) = kappa * delta * phi(0), so that
//                  V'(r) -> (1 - kappa) r as r -> -inf.
//
// Both kinds are uniformly convex with c1 <= V'' <= c2 and reach constant
// curvature exponentially fast in |r|.
class Potential {
public:
  Potential() = default;

  static Potential harmonic();
  // kappa must lie in (0, 1/3) and delta must be positive.
  static Potential mollified_kappa(double kappa = 0.2, double delta = 0.1);

  PotentialKind kind() const { return kind_; }
  double kappa() const { return kappa_; }
  double delta() const { return delta_; }

  double c1() const;
  double c2() const;
  // Limits of V'' at -inf and +inf.
  double curvature_minus() const;
  double curvature_plus() const;

  double v(double r) const;
  double dv(double r) const;
  double ddv(double r) const;

  // The unique r with V'(r) = tau (minimiser of V(r) - tau r).
  double force_root(double tau) const;

  bool operator==(const Potential&) const = default;

private:
  Potential(PotentialKind kind, double kappa, double delta)
      : kind_(kind), kappa_(kappa), delta_(delta) {}

  PotentialKind kind_ = PotentialKind::Harmonic;
  double kappa_ = 0.0;
  double delta_ = 0.0;
};

// Tabulated V' for the inner integration loop.
//
// Nodes carry the exact V' and V''; cubic Hermite interpolation in between.
// Outside the tabulated window the asymptotic linear branches are used, which
// agree with the closed form to double precision. Max error is below 1e-11 for
// the default mollification widths.
class ForceTable {
public:
  explicit ForceTable(const Potential& potential);

  double operator()(double r) const {
    if (harmonic_) return r;
    if (r <= lo_) return slope_minus_ * r;
    if (r >= hi_) return r;
    const double s = (r - lo_) * inv_h_;
    auto k = static_cast<std::size_t>(s);
    if (k >= n_intervals_) k = n_intervals_ - 1;
    const double u = s - static_cast<double>(k);
    const double* c = &coeffs_[4 * k];
    return c[0] + u * (c[1] + u * (c[2] + u * c[3]));
  }

private:
  bool harmonic_ = true;
  double lo_ = 0.0;
  double hi_ = 0.0;
  double inv_h_ = 0.0;
  double slope_minus_ = 1.0;
  std::size_t n_intervals_ = 0;
  std::vector<double> coeffs_;
};

} // namespace chainhydro
