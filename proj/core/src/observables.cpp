#include "chainhydro/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "chainhydro/errors.hpp"
#include "chainhydro/stats.hpp"

namespace chainhydro {

namespace {

void require(bool ok, const char* what, std::size_t l, std::size_t i, std::size_t len) {
  if (!ok)
    throw IndexOutOfRange(std::string(what) + ": (l, i) = (" + std::to_string(l) + ", " +
                          std::to_string(i) + ") outside the valid range for length " +
                          std::to_string(len));
}

long double bar_ld(std::span<const double> a, std::size_t l, std::size_t i) {
  long double s = 0.0L;
  for (std::size_t j = 1; j <= l; ++j) s += a[i - j];  // a_{i-j+1}, 1-based
  return s / static_cast<long double>(l);
}

long double hat_ld(std::span<const double> a, std::size_t l, std::size_t i) {
  const auto ll = static_cast<long double>(l);
  long double s = ll * a[i - 1];
  for (std::size_t j = 1; j < l; ++j)
    s += static_cast<long double>(l - j) * (static_cast<long double>(a[i - 1 - j]) + a[i - 1 + j]);
  return s / (ll * ll);
}

std::vector<double> gauss3_nodes(double a, double b) {
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  const double s = std::sqrt(0.6);
  return {m - s * h, m, m + s * h};
}

// Cell average of f(t, .) on [a, b] by 3-point Gauss-Legendre.
double cell_average(const TestFunction::Fn& f, double t, double a, double b) {
  const auto x = gauss3_nodes(a, b);
  return (5.0 * f(t, x[0]) + 8.0 * f(t, x[1]) + 5.0 * f(t, x[2])) / 18.0;
}

std::vector<double> trapezoid_weights(std::span<const double> t) {
  std::vector<double> w(t.size(), 0.0);
  for (std::size_t k = 1; k < t.size(); ++k) {
    const double h = 0.5 * (t[k] - t[k - 1]);
    w[k - 1] += h;
    w[k] += h;
  }
  return w;
}

void check_field(const EmpiricalField& f) {
  if (f.N == 0 || f.times.empty() || f.r.size() != f.times.size() || f.p.size() != f.times.size())
    throw std::invalid_argument("empirical field is empty or inconsistent");
}

} // namespace

double bar_average(std::span<const double> a, std::size_t l, std::size_t i) {
  require(l >= 1 && i >= l && i <= a.size(), "bar_average", l, i, a.size());
  return static_cast<double>(bar_ld(a, l, i));
}

double hat_average(std::span<const double> a, std::size_t l, std::size_t i) {
  require(l >= 1 && i >= l && i + l <= a.size() + 1, "hat_average", l, i, a.size());
  return static_cast<double>(hat_ld(a, l, i));
}

double block_gradient_identity_check(std::span<const double> a, std::size_t l, std::size_t i) {
  require(l >= 1 && i >= l && i + l <= a.size(), "block_gradient_identity_check", l, i, a.size());
  const long double lhs =
      static_cast<long double>(hat_average(a, l, i + 1)) - hat_average(a, l, i);
  const long double rhs =
      (static_cast<long double>(bar_average(a, l, i + l)) - bar_average(a, l, i)) /
      static_cast<long double>(l);
  return static_cast<double>(std::abs(lhs - rhs));
}

double block_identity_scale(std::span<const double> a, std::size_t l, std::size_t i) {
  require(l >= 1 && i >= l && i + l <= a.size(), "block_identity_scale", l, i, a.size());
  return std::max({std::abs(hat_average(a, l, i)), std::abs(hat_average(a, l, i + 1)),
                   std::abs(bar_average(a, l, i)), std::abs(bar_average(a, l, i + l))});
}

std::vector<double> hat_series(std::span<const double> a, std::size_t l) {
  if (l == 0 || a.size() < 2 * l + 1) return {};
  std::vector<double> out;
  out.reserve(a.size() - 2 * l);
  for (std::size_t i = l + 1; i + l <= a.size(); ++i)
    out.push_back(static_cast<double>(hat_ld(a, l, i)));
  return out;
}

namespace {

std::vector<double> fill_cells(std::span<const double> a, std::size_t l, StripFill fill) {
  const std::size_t n = a.size();
  if (l == 0) return {a.begin(), a.end()};
  const std::vector<double> hat = hat_series(a, l);
  std::vector<double> cells(n, 0.0);
  if (hat.empty()) return cells;
  std::copy(hat.begin(), hat.end(), cells.begin() + static_cast<std::ptrdiff_t>(l));
  if (fill == StripFill::Edge) {
    std::fill(cells.begin(), cells.begin() + static_cast<std::ptrdiff_t>(l), hat.front());
    std::fill(cells.end() - static_cast<std::ptrdiff_t>(l), cells.end(), hat.back());
  }
  return cells;
}

} // namespace

EmpiricalField hat_field(std::span<const Frame> frames, std::size_t l, StripFill fill) {
  EmpiricalField f;
  if (frames.empty()) return f;
  f.N = frames.front().r.size();
  f.l = l;
  if (2 * l + 1 > f.N)
    throw IndexOutOfRange("hat_field: block width " + std::to_string(l) +
                          " leaves no supported cell for N = " + std::to_string(f.N));
  for (const Frame& fr : frames) {
    f.times.push_back(fr.t);
    f.r.push_back(fill_cells(fr.r, l, fill));
    f.p.push_back(fill_cells(fr.p, l, fill));
  }
  return f;
}

EmpiricalField ensemble_mean(std::span<const EmpiricalField> fields) {
  if (fields.empty()) return {};
  EmpiricalField out = fields.front();
  for (std::size_t m = 1; m < fields.size(); ++m) {
    const EmpiricalField& f = fields[m];
    if (f.N != out.N || f.frames() != out.frames())
      throw std::invalid_argument("ensemble_mean: fields differ in shape");
    for (std::size_t k = 0; k < out.frames(); ++k)
      for (std::size_t c = 0; c < out.N; ++c) {
        out.r[k][c] += f.r[k][c];
        out.p[k][c] += f.p[k][c];
      }
  }
  const double inv = 1.0 / static_cast<double>(fields.size());
  for (std::size_t k = 0; k < out.frames(); ++k)
    for (std::size_t c = 0; c < out.N; ++c) {
      out.r[k][c] *= inv;
      out.p[k][c] *= inv;
    }
  return out;
}

double l1_distance(const EmpiricalField& a, std::size_t k_a, const EmpiricalField& b,
                   std::size_t k_b) {
  if (a.N != b.N) throw std::invalid_argument("l1_distance: fields differ in N");
  const std::size_t begin = std::max(a.support_begin(), b.support_begin());
  const std::size_t end = std::min(a.support_end(), b.support_end());
  double s = 0.0;
  for (std::size_t c = begin; c < end; ++c)
    s += std::abs(a.r[k_a][c] - b.r[k_b][c]) + std::abs(a.p[k_a][c] - b.p[k_b][c]);
  return s * a.dx();
}

std::pair<double, double> empirical_pairing(const ChainState& state,
                                            const std::function<double(double)>& J) {
  const std::size_t n = state.size();
  double sr = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = J(static_cast<double>(i + 1) / static_cast<double>(n));
    sr += w * state.r[i];
    sp += w * state.p[i];
  }
  return {sr / static_cast<double>(n), sp / static_cast<double>(n)};
}

std::pair<double, double> field_pairing(const EmpiricalField& field, std::size_t k,
                                        const std::function<double(double)>& J) {
  double sr = 0.0, sp = 0.0;
  for (std::size_t c = 0; c < field.N; ++c) {
    const double w = J(field.center(c));
    sr += w * field.r[k][c];
    sp += w * field.p[k][c];
  }
  return {sr * field.dx(), sp * field.dx()};
}

std::pair<double, double> l2_contraction(const Frame& frame, std::size_t l) {
  const std::size_t n = frame.r.size();
  const auto hr = hat_series(frame.r, l), hp = hat_series(frame.p, l);
  double field = 0.0, sites = 0.0;
  for (std::size_t k = 0; k < hr.size(); ++k) field += hr[k] * hr[k] + hp[k] * hp[k];
  for (std::size_t i = 0; i < n; ++i) sites += frame.r[i] * frame.r[i] + frame.p[i] * frame.p[i];
  return {field / static_cast<double>(n), sites / static_cast<double>(n)};
}

double one_block_residual(std::span<const double> r, std::size_t l, const ThermoModel& thermo) {
  const std::size_t n = r.size();
  std::vector<double> force(n);
  for (std::size_t i = 0; i < n; ++i) force[i] = thermo.potential().dv(r[i]);
  const auto hr = hat_series(r, l), hf = hat_series(force, l);
  double s = 0.0;
  for (std::size_t k = 0; k < hr.size(); ++k) {
    const double d = hf[k] - thermo.tau_of_ell(hr[k]);
    s += d * d;
  }
  return s / static_cast<double>(n);
}

double one_block_residual(const ChainState& state, std::size_t l, const ThermoModel& thermo) {
  return one_block_residual(state.r, l, thermo);
}

TwoBlockResidual two_block_residual(const ChainState& state, std::size_t l,
                                    const Potential& potential) {
  const std::size_t n = state.size();
  TwoBlockResidual out;
  if (l == 0 || n < 2 * l + 1) return out;
  std::vector<double> force(n);
  for (std::size_t i = 0; i < n; ++i) force[i] = potential.dv(state.r[i]);
  auto sum = [&](std::span<const double> a) {
    double s = 0.0;
    for (std::size_t i = l + 1; i + l <= n; ++i) {
      const double d = bar_average(a, l, i + l) - bar_average(a, l, i);
      s += d * d;
    }
    return s / static_cast<double>(n);
  };
  out.p = sum(state.p);
  out.force = sum(force);
  out.r = sum(state.r);
  return out;
}

void check_constraint(const TestFunction& f, double T) {
  if (!f.value) throw ConstraintViolation("test function has no value closure");
  constexpr int samples = 101;
  double worst = 0.0;
  auto probe = [&](double t, double x) { worst = std::max(worst, std::abs(f.value(t, x))); };
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    switch (f.constraint) {
    case SideConstraint::None: break;
    case SideConstraint::VanishesAtOne: probe(s * T, 1.0); break;
    case SideConstraint::VanishesAtZero: probe(s * T, 0.0); break;
    case SideConstraint::CompactSupport:
      probe(s * T, 0.0);
      probe(s * T, 1.0);
      probe(0.0, s);
      probe(T, s);
      break;
    }
  }
  if (!(worst < 1e-12))
    throw ConstraintViolation("boundary trace of test function reaches " + std::to_string(worst));
}

TestFunction linear_combination(double a, const TestFunction& f, double b, const TestFunction& g) {
  TestFunction out;
  out.kind = f.kind == g.kind ? f.kind : TestFunctionKind::SeparableSmooth;
  out.constraint = f.constraint == g.constraint ? f.constraint : SideConstraint::None;
  out.value = [a, b, fv = f.value, gv = g.value](double t, double x) {
    return a * fv(t, x) + b * gv(t, x);
  };
  out.dt = [a, b, fd = f.dt, gd = g.dt](double t, double x) { return a * fd(t, x) + b * gd(t, x); };
  out.dx = [a, b, fd = f.dx, gd = g.dx](double t, double x) { return a * fd(t, x) + b * gd(t, x); };
  return out;
}

namespace {

// w(x) cos(k pi x) (1 + t/T) with w(x) = 1 - x or w(x) = x.
TestFunction cosine_mode(double T, std::size_t k, bool vanish_at_one) {
  const double w = std::numbers::pi * static_cast<double>(k);
  const double sign = vanish_at_one ? -1.0 : 1.0;
  const double offset = vanish_at_one ? 1.0 : 0.0;
  TestFunction f;
  f.kind = TestFunctionKind::TensorPolynomialCosine;
  f.constraint = vanish_at_one ? SideConstraint::VanishesAtOne : SideConstraint::VanishesAtZero;
  f.value = [=](double t, double x) {
    return (offset + sign * x) * std::cos(w * x) * (1.0 + t / T);
  };
  f.dt = [=](double, double x) { return (offset + sign * x) * std::cos(w * x) / T; };
  f.dx = [=](double t, double x) {
    return (sign * std::cos(w * x) - (offset + sign * x) * w * std::sin(w * x)) * (1.0 + t / T);
  };
  return f;
}

} // namespace

std::vector<TestFunction> phi_basis(double T, std::size_t count) {
  std::vector<TestFunction> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(cosine_mode(T, k, true));
  return out;
}

std::vector<TestFunction> psi_basis(double T, std::size_t count) {
  std::vector<TestFunction> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(cosine_mode(T, k, false));
  return out;
}

TestFunction compact_bump(double T, int k) {
  const double pi = std::numbers::pi;
  const double w = pi * k;
  TestFunction f;
  f.kind = TestFunctionKind::SeparableSmooth;
  f.constraint = SideConstraint::CompactSupport;
  auto g = [=](double t) { const double s = std::sin(pi * t / T); return s * s; };
  auto dg = [=](double t) { return pi / T * std::sin(2.0 * pi * t / T); };
  auto h = [=](double x) { return std::sin(w * x) * std::sin(pi * x); };
  auto dh = [=](double x) {
    return w * std::cos(w * x) * std::sin(pi * x) + pi * std::sin(w * x) * std::cos(pi * x);
  };
  f.value = [=](double t, double x) { return g(t) * h(x); };
  f.dt = [=](double t, double x) { return dg(t) * h(x); };
  f.dx = [=](double t, double x) { return g(t) * dh(x); };
  return f;
}

WeakResidual weak_residual(const EmpiricalField& field, const TestFunction& phi,
                           const TestFunction& psi, const TensionSchedule& schedule,
                           const TensionMap& tau) {
  check_field(field);
  const double T = field.times.back();
  if (phi.constraint != SideConstraint::VanishesAtOne &&
      phi.constraint != SideConstraint::CompactSupport)
    throw ConstraintViolation("phi must vanish at x = 1");
  if (psi.constraint != SideConstraint::VanishesAtZero &&
      psi.constraint != SideConstraint::CompactSupport)
    throw ConstraintViolation("psi must vanish at x = 0");
  check_constraint(phi, T);
  check_constraint(psi, T);

  const std::size_t n = field.N, K = field.frames();
  const double h = field.dx();
  const std::vector<double> w = trapezoid_weights(field.times);

  long double rr = 0.0L, rp = 0.0L;
  std::vector<double> tau_cells(n);
  for (std::size_t k = 0; k < K; ++k) {
    const double t = field.times[k];
    const auto& r = field.r[k];
    const auto& p = field.p[k];
    for (std::size_t c = 0; c < n; ++c) tau_cells[c] = tau(r[c]);
    long double sr = 0.0L, sp = 0.0L;
    for (std::size_t c = 0; c < n; ++c) {
      const double x = field.center(c);
      sr += r[c] * phi.dt(t, x) - p[c] * phi.dx(t, x);
      sp += p[c] * psi.dt(t, x) - tau_cells[c] * psi.dx(t, x);
    }
    rr += w[k] * h * sr;
    rp += w[k] * (h * sp + psi.value(t, 1.0) * schedule.value(t));
  }
  for (std::size_t c = 0; c < n; ++c) {
    const double x = field.center(c);
    rr += h * (phi.value(field.times.front(), x) * field.r.front()[c] -
               phi.value(T, x) * field.r.back()[c]);
    rp += h * (psi.value(field.times.front(), x) * field.p.front()[c] -
               psi.value(T, x) * field.p.back()[c]);
  }
  return {static_cast<double>(rr), static_cast<double>(rp)};
}

WeakResidual weak_residual(const EmpiricalField& field, const TestFunction& phi,
                           const TestFunction& psi, const TensionSchedule& schedule,
                           const ThermoModel& thermo) {
  return weak_residual(field, phi, psi, schedule,
                       [&thermo](double r) { return thermo.tau_of_ell(r); });
}

EntropyPair mechanical_energy_pair(const ThermoModel& thermo, double ell_ref) {
  const double f_ref = thermo.free_energy_F(ell_ref);
  EntropyPair pair;
  pair.kind = EntropyPairKind::MechanicalEnergy;
  pair.eta = [&thermo, f_ref](double r, double p) {
    return 0.5 * p * p + thermo.free_energy_F(r) - f_ref;
  };
  pair.q = [&thermo](double r, double p) { return -p * thermo.tau_of_ell(r); };
  return pair;
}

void check_lax_relations(const EntropyPair& pair, const ThermoModel& thermo,
                         std::pair<double, double> r_range, std::pair<double, double> p_range,
                         double tol) {
  if (!pair.eta || !pair.q) throw PairInvalid("entropy pair is missing a closure");
  constexpr int nodes = 21;
  constexpr double h = 1e-4;
  for (int a = 0; a < nodes; ++a) {
    const double r = r_range.first + (r_range.second - r_range.first) * a / (nodes - 1);
    const double dtau = (thermo.tau_of_ell(r + h) - thermo.tau_of_ell(r - h)) / (2.0 * h);
    for (int b = 0; b < nodes; ++b) {
      const double p = p_range.first + (p_range.second - p_range.first) * b / (nodes - 1);
      const double eta_r = (pair.eta(r + h, p) - pair.eta(r - h, p)) / (2.0 * h);
      const double eta_p = (pair.eta(r, p + h) - pair.eta(r, p - h)) / (2.0 * h);
      const double q_r = (pair.q(r + h, p) - pair.q(r - h, p)) / (2.0 * h);
      const double q_p = (pair.q(r, p + h) - pair.q(r, p - h)) / (2.0 * h);
      const double first = eta_r + q_p;
      const double second = dtau * eta_p + q_r;
      const double scale = 1.0 + std::abs(eta_r) + std::abs(q_p) + std::abs(q_r);
      if (std::abs(first) > tol * scale || std::abs(second) > tol * scale)
        throw PairInvalid("Lax relations fail at (r, p) = (" + std::to_string(r) + ", " +
                          std::to_string(p) + ")");
    }
  }
}

double entropy_production_X(const EmpiricalField& field, const EntropyPair& pair,
                            const TestFunction& phi) {
  check_field(field);
  const double T = field.times.back();
  if (phi.constraint != SideConstraint::CompactSupport)
    throw ConstraintViolation("entropy production needs a compactly supported test function");
  check_constraint(phi, T);

  const std::size_t n = field.N, K = field.frames();
  const double h = field.dx();
  const std::vector<double> w = trapezoid_weights(field.times);

  std::vector<std::vector<double>> eta(K, std::vector<double>(n));
  std::vector<std::vector<double>> avg(K, std::vector<double>(n));
  long double flux = 0.0L;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = field.times[k];
    long double s = 0.0L;
    for (std::size_t c = 0; c < n; ++c) {
      const double r = field.r[k][c], p = field.p[k][c];
      eta[k][c] = pair.eta(r, p);
      const double left = static_cast<double>(c) * h, right = static_cast<double>(c + 1) * h;
      avg[k][c] = cell_average(phi.value, t, left, right);
      s += pair.q(r, p) * (phi.value(t, right) - phi.value(t, left));
    }
    flux += w[k] * s;
  }
  long double temporal = 0.0L;
  for (std::size_t k = 0; k + 1 < K; ++k)
    for (std::size_t c = 0; c < n; ++c)
      temporal += 0.5L * (eta[k][c] + eta[k + 1][c]) * h * (avg[k + 1][c] - avg[k][c]);
  return static_cast<double>(-(temporal + flux));
}

ClausiusReplica clausius_replica(const Trajectory& traj, std::size_t l, const ThermoModel& thermo,
                                 const TensionSchedule& schedule) {
  ClausiusReplica out;
  if (traj.frames.empty()) return out;
  const EmpiricalField field = hat_field(traj.frames, l, StripFill::Edge);
  const std::vector<double> work_series =
      microscopic_work(traj.length_times, traj.lengths, schedule);

  std::size_t j = 0;
  double f0 = 0.0;
  for (std::size_t k = 0; k < field.frames(); ++k) {
    const double t = field.times[k];
    while (j < traj.length_times.size() && traj.length_times[j] < t) ++j;
    if (j == traj.length_times.size() || traj.length_times[j] != t)
      throw std::invalid_argument("clausius_replica: frame time missing from the length series");
    double F_total = 0.0;
    for (std::size_t c = 0; c < field.N; ++c) {
      const double p = field.p[k][c];
      F_total += 0.5 * p * p + thermo.free_energy_F(field.r[k][c]);
    }
    F_total *= field.dx();
    if (k == 0) f0 = F_total;
    out.times.push_back(t);
    out.work.push_back(work_series[j]);
    out.delta_F.push_back(F_total - f0);
  }
  out.int_work = trapezoid(out.times, out.work);
  out.int_delta_F = trapezoid(out.times, out.delta_F);
  return out;
}

ClausiusReport clausius_balance(std::span<const ClausiusReplica> replicas,
                                std::size_t bootstrap_resamples, std::uint64_t bootstrap_seed) {
  ClausiusReport rep;
  rep.replicas = replicas.size();
  if (replicas.empty()) return rep;
  const std::size_t K = replicas.front().times.size();
  rep.times = replicas.front().times;
  rep.mean_work.assign(K, 0.0);
  rep.mean_delta_F.assign(K, 0.0);
  rep.slack_se.assign(K, 0.0);

  std::vector<double> column(replicas.size());
  for (std::size_t k = 0; k < K; ++k) {
    double w = 0.0, f = 0.0;
    for (std::size_t m = 0; m < replicas.size(); ++m) {
      if (replicas[m].times.size() != K)
        throw std::invalid_argument("clausius_balance: replicas have different frame counts");
      w += replicas[m].work[k];
      f += replicas[m].delta_F[k];
      column[m] = replicas[m].work[k] - replicas[m].delta_F[k];
    }
    rep.mean_work[k] = w / static_cast<double>(replicas.size());
    rep.mean_delta_F[k] = f / static_cast<double>(replicas.size());
    rep.slack_se[k] = mean_se(column).se;
  }

  std::vector<double> iw(replicas.size()), idf(replicas.size()), diff(replicas.size());
  for (std::size_t m = 0; m < replicas.size(); ++m) {
    iw[m] = replicas[m].int_work;
    idf[m] = replicas[m].int_delta_F;
    diff[m] = iw[m] - idf[m];
  }
  rep.mean_int_work = mean_se(iw).mean;
  rep.mean_int_delta_F = mean_se(idf).mean;
  const MeanSE d = mean_se(diff);
  rep.slack = rep.mean_int_work - rep.mean_int_delta_F;
  rep.slack_se_analytic = d.se;
  rep.slack_se_bootstrap = bootstrap_se(
      diff, [](std::span<const double> xs) { return mean_se(xs).mean; }, bootstrap_resamples,
      bootstrap_seed);

  rep.terminal_work = rep.mean_work.back();
  rep.terminal_delta_F = rep.mean_delta_F.back();
  rep.terminal_slack = rep.terminal_work - rep.terminal_delta_F;
  rep.terminal_slack_se = rep.slack_se.back();
  return rep;
}

} // namespace chainhydro
