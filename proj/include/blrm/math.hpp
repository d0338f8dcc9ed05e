#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace blrm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// log(1 + exp(x)), stable for large |x|.
inline double log1pexp(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// log(1 - exp(x)) for x <= 0. Returns -inf at x == 0, NaN for x > 0.
inline double log1mexp(double x) {
  if (x >= 0.0) {
    return x == 0.0 ? kNegInf : std::numeric_limits<double>::quiet_NaN();
  }
  // Crossover at -log(2) keeps both branches well conditioned.
  if (x > -0.6931471805599453) return std::log(-std::expm1(x));
  return std::log1p(-std::exp(x));
}

/// Inverse logit. Maps -inf -> 0 and +inf -> 1.
inline double expit(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Log-odds of p. logit(0) == -inf, logit(1) == +inf.
inline double logit(double p) { return std::log(p) - std::log1p(-p); }

/// log(exp(a) + exp(b)) with -inf treated as an absent term.
inline double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = a > b ? a : b;
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

/// Linear-interpolation quantile of an ascending-sorted sample (the common
/// "type 7" convention: h = (n-1)p). Pre: xs sorted, non-empty, 0 <= p <= 1.
inline double sorted_quantile(std::span<const double> xs, double p) {
  if (xs.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("sorted_quantile: p outside [0, 1]");
  }
  const double h = static_cast<double>(xs.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(h);
  if (lo + 1 >= xs.size()) return xs.back();
  return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

inline double mean_of(std::span<const double> xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return xs.empty() ? 0.0 : s / static_cast<double>(xs.size());
}

/// Sample standard deviation (n-1 denominator); 0 for fewer than two values.
inline double sd_of(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

}  // namespace blrm
