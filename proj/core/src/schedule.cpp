#include "chainhydro/schedule.hpp"

#include <algorithm>
#include <string>

#include "chainhydro/errors.hpp"

namespace chainhydro {

std::string_view to_string(ScheduleKind kind) {
  switch (kind) {
  case ScheduleKind::Constant: return "constant";
  case ScheduleKind::SmoothRamp: return "smooth_ramp";
  case ScheduleKind::PiecewiseCubic: return "piecewise_cubic";
  }
  return "unknown";
}

ScheduleKind parse_schedule_kind(std::string_view name) {
  if (name == "constant") return ScheduleKind::Constant;
  if (name == "smooth_ramp") return ScheduleKind::SmoothRamp;
  if (name == "piecewise_cubic") return ScheduleKind::PiecewiseCubic;
  throw ConfigInvalid("schedule.kind", "unknown schedule '" + std::string(name) + "'");
}

TensionSchedule TensionSchedule::constant(double tau) {
  TensionSchedule s;
  s.kind_ = ScheduleKind::Constant;
  s.tau0_ = s.tau1_ = tau;
  return s;
}

TensionSchedule TensionSchedule::smooth_ramp(double tau0, double tau1, double t_ramp) {
  if (!(t_ramp > 0.0)) throw ConfigInvalid("schedule.t_ramp", "ramp duration must be positive");
  TensionSchedule s;
  s.kind_ = ScheduleKind::SmoothRamp;
  s.tau0_ = tau0;
  s.tau1_ = tau1;
  s.t_ramp_ = t_ramp;
  return s;
}

TensionSchedule TensionSchedule::piecewise_cubic(std::vector<Knot> knots) {
  if (knots.empty()) throw ConfigInvalid("schedule.knots", "at least one knot is required");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k].t > knots[k - 1].t))
      throw ConfigInvalid("schedule.knots", "knot times must be strictly increasing");
  TensionSchedule s;
  s.kind_ = ScheduleKind::PiecewiseCubic;
  s.tau0_ = knots.front().value;
  s.tau1_ = knots.back().value;
  s.t_ramp_ = knots.back().t;
  s.knots_ = std::move(knots);
  return s;
}

double TensionSchedule::value(double t) const {
  switch (kind_) {
  case ScheduleKind::Constant: return tau0_;
  case ScheduleKind::SmoothRamp: {
    if (t <= 0.0) return tau0_;
    if (t >= t_ramp_) return tau1_;
    const double u = t / t_ramp_;
    return tau0_ + (tau1_ - tau0_) * u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
  }
  case ScheduleKind::PiecewiseCubic: {
    if (t <= knots_.front().t) return knots_.front().value;
    if (t >= knots_.back().t) return knots_.back().value;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double x, const Knot& k) { return x < k.t; });
    const Knot& b = *it;
    const Knot& a = *(it - 1);
    const double h = b.t - a.t, u = (t - a.t) / h;
    const double u2 = u * u, u3 = u2 * u;
    return (2 * u3 - 3 * u2 + 1) * a.value + (u3 - 2 * u2 + u) * h * a.slope +
           (-2 * u3 + 3 * u2) * b.value + (u3 - u2) * h * b.slope;
  }
  }
  return tau0_;
}

double TensionSchedule::derivative(double t) const {
  switch (kind_) {
  case ScheduleKind::Constant: return 0.0;
  case ScheduleKind::SmoothRamp: {
    if (t <= 0.0 || t >= t_ramp_) return 0.0;
    const double u = t / t_ramp_;
    return (tau1_ - tau0_) * 30.0 * u * u * (1.0 - u) * (1.0 - u) / t_ramp_;
  }
  case ScheduleKind::PiecewiseCubic: {
    if (t <= knots_.front().t || t >= knots_.back().t) return 0.0;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double x, const Knot& k) { return x < k.t; });
    const Knot& b = *it;
    const Knot& a = *(it - 1);
    const double h = b.t - a.t, u = (t - a.t) / h;
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * a.value + (3 * u2 - 4 * u + 1) * h * a.slope +
            (-6 * u2 + 6 * u) * b.value + (3 * u2 - 2 * u) * h * b.slope) /
           h;
  }
  }
  return 0.0;
}

} // namespace chainhydro
