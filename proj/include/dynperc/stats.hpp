#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dynperc/errors.hpp"

namespace dynperc {

/// Monte Carlo estimate with normal-approximation 95% interval.
struct EstimateRecord {
  std::string label;
  std::uint64_t reps = 0;
  double mean = 0.0;
  double sample_std = 0.0;
  double stderror = 0.0;  ///< sample_std / sqrt(reps)
  double ci_lo = 0.0;
  double ci_hi = 0.0;

  static EstimateRecord from_samples(std::string label,
                                     std::span<const double> samples) {
    if (samples.size() < 2)
      throw ConfigError("reps", "need at least 2 replications for an estimate");
    EstimateRecord rec;
    rec.label = std::move(label);
    rec.reps = samples.size();
    double sum = 0.0;
    for (const double v : samples) sum += v;
    rec.mean = sum / double(rec.reps);
    double ss = 0.0;
    for (const double v : samples) ss += (v - rec.mean) * (v - rec.mean);
    rec.sample_std = std::sqrt(ss / double(rec.reps - 1));
    rec.stderror = rec.sample_std / std::sqrt(double(rec.reps));
    rec.ci_lo = rec.mean - 1.96 * rec.stderror;
    rec.ci_hi = rec.mean + 1.96 * rec.stderror;
    return rec;
  }

  /// From exact integer accumulators (deterministic under any merge order).
  static EstimateRecord from_moments(std::string label, std::uint64_t count,
                                     double sum, double sum_sq) {
    if (count < 2)
      throw ConfigError("reps", "need at least 2 replications for an estimate");
    EstimateRecord rec;
    rec.label = std::move(label);
    rec.reps = count;
    rec.mean = sum / double(count);
    const double var =
        (sum_sq - sum * sum / double(count)) / double(count - 1);
    rec.sample_std = var > 0.0 ? std::sqrt(var) : 0.0;
    rec.stderror = rec.sample_std / std::sqrt(double(count));
    rec.ci_lo = rec.mean - 1.96 * rec.stderror;
    rec.ci_hi = rec.mean + 1.96 * rec.stderror;
    return rec;
  }
};

/// Ordinary least squares y = slope*x + intercept with the slope's standard
/// error (normal-theory).
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

inline LinearFit fit_linear(std::span<const std::pair<double, double>> pts) {
  if (pts.size() < 3)
    throw ConfigError("points", "need at least 3 points to fit");
  const double n = double(pts.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& [x, y] : pts) {
    sx += x;
    sy += y;
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& [x, y] : pts) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (sxx == 0.0) throw ConfigError("points", "x values are all equal");
  LinearFit fit;
  fit.points = pts.size();
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : pts) {
    const double e = y - (fit.slope * x + fit.intercept);
    ss_res += e * e;
  }
  fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  if (pts.size() > 2) {
    const double sigma2 = ss_res / (n - 2.0);
    fit.slope_se = std::sqrt(sigma2 / sxx);
  }
  return fit;
}

/// Power-law exponent: least squares on (log n, log value).
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

inline FitResult fit_loglog(std::span<const std::pair<double, double>> pts) {
  if (pts.size() < 3)
    throw ConfigError("points", "need at least 3 points to fit");
  std::vector<std::pair<double, double>> logs;
  logs.reserve(pts.size());
  for (const auto& [x, y] : pts) {
    if (!(x > 0.0 && y > 0.0))
      throw ConfigError("points", "log-log fit needs positive values");
    logs.emplace_back(std::log(x), std::log(y));
  }
  const LinearFit lin = fit_linear(logs);
  return {lin.slope, lin.intercept, lin.r_squared, lin.points};
}

/// H_m = 1 + 1/2 + ... + 1/m, accumulated smallest-first in extended
/// precision.
inline double harmonic(std::uint64_t m) {
  if (m < 1) throw ConfigError("m", "harmonic number needs m >= 1");
  long double acc = 0.0L;
  for (std::uint64_t k = m; k >= 1; --k) acc += 1.0L / static_cast<long double>(k);
  return double(acc);
}

}  // namespace dynperc
