#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace chainhydro {

struct MeanSE {
  double mean = 0.0;
  double se = 0.0;      // sample standard deviation / sqrt(n); 0 when n < 2
  double stddev = 0.0;
  std::size_t n = 0;
};

MeanSE mean_se(std::span<const double> xs);

// Trapezoid rule on a (possibly non-uniform) grid.
double trapezoid(std::span<const double> t, std::span<const double> y);

using Statistic = std::function<double(std::span<const double>)>;

// Standard deviation of the statistic over resamples drawn with replacement.
double bootstrap_se(std::span<const double> xs, const Statistic& stat, std::size_t resamples,
                    std::uint64_t seed);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = intercept + slope * x.
LineFit least_squares(std::span<const double> x, std::span<const double> y);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_lo = 0.0;   // percentile bootstrap interval
  double slope_hi = 0.0;
  double level = 0.95;
  std::size_t resamples = 0;
};

// Fits log(mean(samples[k])) against log(x[k]). The confidence interval comes
// from resampling the replicas within each group independently.
LogLogFit bootstrap_loglog(std::span<const double> x,
                           const std::vector<std::vector<double>>& samples,
                           std::size_t resamples, std::uint64_t seed, double level = 0.95);

} // namespace chainhydro
