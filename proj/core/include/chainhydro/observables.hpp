#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "chainhydro/microsim.hpp"
#include "chainhydro/schedule.hpp"
#include "chainhydro/thermo.hpp"

namespace chainhydro {

// Block averages. Indices are 1-based as in the formulas.
//   bar: a-bar_{l,i} = (1/l) sum_{j=1..l} a_{i-j+1},            needs l <= i <= len
//   hat: a-hat_{l,i} = (1/l) sum_{|j|<l} (l-|j|)/l a_{i-j},     needs l <= i <= len-l+1
// Sums are accumulated in long double and rounded once.
double bar_average(std::span<const double> a, std::size_t l, std::size_t i);
double hat_average(std::span<const double> a, std::size_t l, std::size_t i);

// |(hat_{i+1} - hat_i) - (bar_{i+l} - bar_i) / l|, needs l <= i <= len - l.
double block_gradient_identity_check(std::span<const double> a, std::size_t l, std::size_t i);

// Largest magnitude among the four averages entering the identity at (l, i).
double block_identity_scale(std::span<const double> a, std::size_t l, std::size_t i);

// hat_{l,i} for all i in [l+1, len-l]; element k holds i = l+1+k.
std::vector<double> hat_series(std::span<const double> a, std::size_t l);

// How the cells outside the hat support [l+1, N-l] are filled.
//   Zero: value 0 (the support convention of the empirical field).
//   Edge: the nearest supported value (constant extension).
enum class StripFill { Zero, Edge };

// Piecewise-constant fields on N uniform cells tiling [0,1]; cell c (0-based)
// is [c/N, (c+1)/N] and carries site i = c+1. Macro solutions use the same
// layout with l = 0.
struct EmpiricalField {
  std::size_t N = 0;
  std::size_t l = 0;
  std::vector<double> times;
  std::vector<std::vector<double>> r;
  std::vector<std::vector<double>> p;

  std::size_t frames() const { return times.size(); }
  double dx() const { return 1.0 / static_cast<double>(N); }
  double center(std::size_t c) const { return (static_cast<double>(c) + 0.5) * dx(); }
  // First and one-past-last supported cell.
  std::size_t support_begin() const { return l; }
  std::size_t support_end() const { return N - l; }
};

EmpiricalField hat_field(std::span<const Frame> frames, std::size_t l,
                         StripFill fill = StripFill::Zero);
EmpiricalField ensemble_mean(std::span<const EmpiricalField> fields);

// L1 distance over the supported cells of a at frame k_a and b at frame k_b.
// Both fields must share N; the support is the narrower of the two.
double l1_distance(const EmpiricalField& a, std::size_t k_a, const EmpiricalField& b,
                   std::size_t k_b);

// (1/N) sum J(i/N) r_i and (1/N) sum J(i/N) p_i.
std::pair<double, double> empirical_pairing(const ChainState& state,
                                            const std::function<double(double)>& J);
// Same pairing against frame k of a field, by midpoint quadrature over the cells.
std::pair<double, double> field_pairing(const EmpiricalField& field, std::size_t k,
                                        const std::function<double(double)>& J);

// int_0^1 |u_hat|^2 dx and (1/N) sum |u_i|^2 for one frame.
std::pair<double, double> l2_contraction(const Frame& frame, std::size_t l);

// (1/N) sum_{i=l+1}^{N-l} (V'-hat_{l,i} - tau(r-hat_{l,i}))^2.
double one_block_residual(const ChainState& state, std::size_t l, const ThermoModel& thermo);
double one_block_residual(std::span<const double> r, std::size_t l, const ThermoModel& thermo);

struct TwoBlockResidual {
  double p = 0.0;
  double force = 0.0;
  double r = 0.0;
};

// (1/N) sum_{i=l+1}^{N-l} (a-bar_{l,i+l} - a-bar_{l,i})^2 for a in {p, V'(r), r}.
TwoBlockResidual two_block_residual(const ChainState& state, std::size_t l,
                                    const Potential& potential);

enum class TestFunctionKind { SeparableSmooth, TensorPolynomialCosine };
enum class SideConstraint { None, VanishesAtOne, VanishesAtZero, CompactSupport };

// Smooth function on [0,T] x [0,1] with its partial derivatives.
struct TestFunction {
  using Fn = std::function<double(double t, double x)>;
  TestFunctionKind kind = TestFunctionKind::SeparableSmooth;
  SideConstraint constraint = SideConstraint::None;
  Fn value;
  Fn dt;
  Fn dx;
};

// Samples the constrained boundary trace; throws ConstraintViolation if
// max |trace| >= 1e-12.
void check_constraint(const TestFunction& f, double T);

// a f + b g; the constraint is kept when both share it.
TestFunction linear_combination(double a, const TestFunction& f, double b, const TestFunction& g);

// phi_k(t,x) = (1-x) cos(k pi x) (1 + t/T), vanishing at x = 1.
std::vector<TestFunction> phi_basis(double T, std::size_t count = 8);
// psi_k(t,x) = x cos(k pi x) (1 + t/T), vanishing at x = 0.
std::vector<TestFunction> psi_basis(double T, std::size_t count = 8);
// sin(pi t/T)^2 sin(k pi x) sin(pi x), vanishing on the boundary of [0,T] x [0,1].
TestFunction compact_bump(double T, int k = 1);

struct WeakResidual {
  double r = 0.0;
  double p = 0.0;
};

using TensionMap = std::function<double(double)>;

// Trapezoid in time over the frames, midpoint over the cells, terminal terms kept:
//   R_r = int phi(0) r(0) + int int (r phi_t - p phi_x) - int phi(T) r(T)
//   R_p = int psi(0) p(0) + int int (p psi_t - tau(r) psi_x) + int psi(t,1) tau_bar
//         - int psi(T) p(T)
WeakResidual weak_residual(const EmpiricalField& field, const TestFunction& phi,
                           const TestFunction& psi, const TensionSchedule& schedule,
                           const TensionMap& tau);
WeakResidual weak_residual(const EmpiricalField& field, const TestFunction& phi,
                           const TestFunction& psi, const TensionSchedule& schedule,
                           const ThermoModel& thermo);

enum class EntropyPairKind { MechanicalEnergy, UserSupplied };

struct EntropyPair {
  EntropyPairKind kind = EntropyPairKind::UserSupplied;
  std::function<double(double r, double p)> eta;
  std::function<double(double r, double p)> q;
};

// eta = p^2/2 + F(r) - F(ell_ref), q = -p tau(r).
EntropyPair mechanical_energy_pair(const ThermoModel& thermo, double ell_ref);

// Checks d_r eta + d_p q = 0 and tau'(r) d_p eta + d_r q = 0 by central
// differences on a grid over r_range x p_range; throws PairInvalid on failure.
void check_lax_relations(const EntropyPair& pair, const ThermoModel& thermo,
                         std::pair<double, double> r_range = {-2.0, 3.0},
                         std::pair<double, double> p_range = {-2.0, 2.0}, double tol = 1e-5);

// X = -int int (eta(u_hat) phi_t + q(u_hat) phi_x). Time increments of the cell
// averages of phi and face differences in x, so a constant eta or q contributes
// exactly nothing when phi vanishes on the boundary.
double entropy_production_X(const EmpiricalField& field, const EntropyPair& pair,
                            const TestFunction& phi);

// Per-replica Clausius bookkeeping on the frame times.
struct ClausiusReplica {
  std::vector<double> times;
  std::vector<double> work;      // W_N(t)
  std::vector<double> delta_F;   // F_total(t) - F_total(0)
  double int_work = 0.0;         // int_0^T W dt
  double int_delta_F = 0.0;      // int_0^T delta_F dt
};

// F_total(t) = int (p_hat^2/2 + F(r_hat)) dx over the whole interval, with the
// hat field extended by StripFill::Edge into the boundary strips.
ClausiusReplica clausius_replica(const Trajectory& traj, std::size_t l, const ThermoModel& thermo,
                                 const TensionSchedule& schedule);

struct ClausiusReport {
  std::size_t replicas = 0;
  std::vector<double> times;
  std::vector<double> mean_work;
  std::vector<double> mean_delta_F;
  std::vector<double> slack_se;       // SE of W - delta_F at each frame time
  double mean_int_work = 0.0;
  double mean_int_delta_F = 0.0;
  double slack = 0.0;                 // mean int W - mean int delta_F
  double slack_se_analytic = 0.0;
  double slack_se_bootstrap = 0.0;
  double terminal_work = 0.0;
  double terminal_delta_F = 0.0;
  double terminal_slack = 0.0;
  double terminal_slack_se = 0.0;
};

ClausiusReport clausius_balance(std::span<const ClausiusReplica> replicas,
                                std::size_t bootstrap_resamples = 2000,
                                std::uint64_t bootstrap_seed = 7);

} // namespace chainhydro
