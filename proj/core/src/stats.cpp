#include "chainhydro/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/random/uniform_int_distribution.hpp>

#include "chainhydro/random.hpp"

namespace chainhydro {

MeanSE mean_se(std::span<const double> xs) {
  MeanSE out;
  out.n = xs.size();
  if (xs.empty()) return out;
  long double s = 0.0L;
  for (double x : xs) s += x;
  out.mean = static_cast<double>(s / static_cast<long double>(xs.size()));
  if (xs.size() < 2) return out;
  long double ss = 0.0L;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.stddev = std::sqrt(static_cast<double>(ss / static_cast<long double>(xs.size() - 1)));
  out.se = out.stddev / std::sqrt(static_cast<double>(xs.size()));
  return out;
}

double trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw std::invalid_argument("trapezoid: size mismatch");
  double s = 0.0;
  for (std::size_t k = 1; k < t.size(); ++k) s += 0.5 * (t[k] - t[k - 1]) * (y[k] + y[k - 1]);
  return s;
}

double bootstrap_se(std::span<const double> xs, const Statistic& stat, std::size_t resamples,
                    std::uint64_t seed) {
  if (xs.size() < 2 || resamples < 2) return 0.0;
  Rng rng(seed);
  boost::random::uniform_int_distribution<std::size_t> pick(0, xs.size() - 1);
  std::vector<double> draw(xs.size()), values(resamples);
  for (std::size_t b = 0; b < resamples; ++b) {
    for (double& d : draw) d = xs[pick(rng)];
    values[b] = stat(draw);
  }
  return mean_se(values).stddev;
}

LineFit least_squares(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    mx += x[k];
    my += y[k];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

namespace {

double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

} // namespace

LogLogFit bootstrap_loglog(std::span<const double> x,
                           const std::vector<std::vector<double>>& samples,
                           std::size_t resamples, std::uint64_t seed, double level) {
  if (x.size() != samples.size() || x.size() < 2)
    throw std::invalid_argument("bootstrap_loglog: need one sample group per x, at least two");
  std::vector<double> lx(x.size()), ly(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (samples[k].empty()) throw std::invalid_argument("bootstrap_loglog: empty group");
    lx[k] = std::log(x[k]);
    ly[k] = std::log(mean_of(samples[k]));
  }
  const LineFit point = least_squares(lx, ly);

  LogLogFit out;
  out.slope = point.slope;
  out.intercept = point.intercept;
  out.level = level;
  out.resamples = resamples;
  if (resamples < 2) {
    out.slope_lo = out.slope_hi = point.slope;
    return out;
  }

  Rng rng(seed);
  std::vector<double> slopes(resamples), ly_b(x.size()), draw;
  for (std::size_t b = 0; b < resamples; ++b) {
    for (std::size_t k = 0; k < x.size(); ++k) {
      const auto& g = samples[k];
      boost::random::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
      draw.resize(g.size());
      for (double& d : draw) d = g[pick(rng)];
      ly_b[k] = std::log(mean_of(draw));
    }
    slopes[b] = least_squares(lx, ly_b).slope;
  }
  std::sort(slopes.begin(), slopes.end());
  const double tail = 0.5 * (1.0 - level);
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(resamples - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, resamples - 1);
    return slopes[lo] + (pos - static_cast<double>(lo)) * (slopes[hi] - slopes[lo]);
  };
  out.slope_lo = quantile(tail);
  out.slope_hi = quantile(1.0 - tail);
  return out;
}

} // namespace chainhydro
