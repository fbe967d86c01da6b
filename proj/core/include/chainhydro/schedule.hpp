#pragma once

#include <string_view>
#include <vector>

namespace chainhydro {

enum class ScheduleKind { Constant, SmoothRamp, PiecewiseCubic };

std::string_view to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(std::string_view name);

// Boundary tension tau_bar(t) acting on the last particle, with its exact
// time derivative. All kinds are C^1 in t.
class TensionSchedule {
public:
  struct Knot {
    double t = 0.0;
    double value = 0.0;
    double slope = 0.0;
  };

  TensionSchedule() = default;

  static TensionSchedule constant(double tau);
  // tau0 for t <= 0, tau1 for t >= t_ramp, quintic smoothstep in between (C^2).
  static TensionSchedule smooth_ramp(double tau0, double tau1, double t_ramp);
  // Cubic Hermite through the knots (strictly increasing t), constant outside.
  static TensionSchedule piecewise_cubic(std::vector<Knot> knots);

  ScheduleKind kind() const { return kind_; }
  double tau0() const { return tau0_; }
  double tau1() const { return tau1_; }
  double t_ramp() const { return t_ramp_; }
  const std::vector<Knot>& knots() const { return knots_; }

  double value(double t) const;
  double derivative(double t) const;

private:
  ScheduleKind kind_ = ScheduleKind::Constant;
  double tau0_ = 0.0;
  double tau1_ = 0.0;
  double t_ramp_ = 0.0;
  std::vector<Knot> knots_;
};

} // namespace chainhydro
