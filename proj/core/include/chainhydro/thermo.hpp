#pragma once

#include <span>
#include <vector>

#include "chainhydro/potential.hpp"
#include "chainhydro/random.hpp"

namespace chainhydro {

struct ThermoOptions {
  // Absolute tolerance on G, i.e. relative tolerance on the partition integral.
  double quad_tol = 1e-9;
  // Residual tolerance on ell when inverting ell(tau).
  double inversion_tol = 1e-8;
  // Cached tension grid.
  double tau_min = -3.0;
  double tau_max = 3.0;
  double tau_step = 1e-3;
  unsigned max_refinements = 15;
};

// Log-partition function and the first two moments of r under the single-site
// measure exp(-beta V(r) + beta tau r).
struct SiteMoments {
  double log_z = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

struct SitePoint {
  double r = 0.0;
  double p = 0.0;
};

// Equilibrium thermodynamics of one spring at fixed inverse temperature beta:
//   G(tau)   = log int exp(-beta V(r) + beta tau r) dr
//   ell(tau) = G'(tau) / beta,   tau(ell) = F'(ell)
//   F(ell)   = sup_tau { tau ell - G(tau) / beta }
//
// G, G' and G'' are precomputed on a uniform tension grid and interpolated with
// cubic Hermite polynomials; queries outside the grid fall back to direct
// quadrature. Immutable after construction, so all queries are re-entrant.
class ThermoModel {
public:
  ThermoModel(Potential potential, double beta, ThermoOptions options = {});

  const Potential& potential() const { return potential_; }
  double beta() const { return beta_; }
  const ThermoOptions& options() const { return options_; }

  double gibbs_G(double tau) const;
  double ell_of_tau(double tau) const;
  // d ell / d tau = beta Var(r).
  double dell_dtau(double tau) const;
  double tau_of_ell(double ell) const;
  double free_energy_F(double ell) const;

  // Adaptive quadrature, bypassing the grid cache.
  SiteMoments site_moments(double tau) const;

  // Exact draw from the single-site Gibbs measure with mean momentum pbar and
  // tension tau: p ~ Normal(pbar, 1/beta), r by rejection from a Gaussian
  // envelope of curvature c1 centred at the mode.
  SitePoint sample_site(double pbar, double tau, Rng& rng) const;

  // Range of ell covered by the cached grid.
  double ell_grid_min() const { return ell_.front(); }
  double ell_grid_max() const { return ell_.back(); }

private:
  bool on_grid(double tau) const;
  std::size_t segment(double tau, double& u) const;
  double tau_of_ell_direct(double ell) const;

  Potential potential_;
  double beta_;
  ThermoOptions options_;
  std::vector<double> tau_;
  std::vector<double> g_;       // G
  std::vector<double> ell_;     // G' / beta
  std::vector<double> dell_;    // G'' / beta
};

struct CurvatureReport {
  std::vector<double> ell;
  std::vector<double> tau;
  std::vector<double> dtau;   // tau'(ell), centred differences at interior nodes
  std::vector<double> d2tau;  // tau''(ell), second differences at interior nodes
  double min_dtau = 0.0;
  double max_dtau = 0.0;
  double min_d2tau = 0.0;
  bool strictly_hyperbolic = false;   // tau' > 0 everywhere on the grid
  bool genuinely_nonlinear = false;   // tau'' > nonlinearity_tol everywhere
};

// Divided-difference estimates of tau' and tau'' on a monotone ell grid.
// Report only; never throws for a violated condition.
CurvatureReport tau_curvature_check(const ThermoModel& model, std::span<const double> ell_grid,
                                    double nonlinearity_tol = 1e-6);

} // namespace chainhydro
