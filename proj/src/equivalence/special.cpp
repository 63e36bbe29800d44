// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "moe_sieve/error.hpp"

namespace moe_sieve::special {

namespace {

constexpr double kStirlingCutoff = 15.0;

// lgamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2] for x >= kStirlingCutoff.
double stirling_error(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  return r * (1.0 / 12 -
              r2 * (1.0 / 360 -
                    r2 * (1.0 / 1260 - r2 * (1.0 / 1680 - r2 * (1.0 / 1188 - r2 * 691.0 / 360360)))));
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  constexpr int max_iter = 200000;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_iter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  fail(ErrorKind::internal, "incomplete beta continued fraction did not converge");
}

// I_x(a, b) through the continued fraction; valid for x < (a + 1) / (a + b + 2).
double ibeta_direct(double a, double b, double x, double y) {
  if (x == 0.0) return 0.0;
  const double log_x = x > 0.5 ? std::log1p(-y) : std::log(x);
  const double log_y = y > 0.5 ? std::log1p(-x) : std::log(y);
  const double front = std::exp(a * log_x + b * log_y - log_beta(a, b));
  return front * beta_continued_fraction(a, b, x) / a;
}

}  // namespace

double log_beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::invalid_argument, "log_beta: arguments must be > 0");
  const double big = std::max(a, b);
  const double small = std::min(a, b);
  if (big < kStirlingCutoff) return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double sum = a + b;
  if (small < kStirlingCutoff) {
    // lgamma(big) - lgamma(big + small) without forming either term.
    const double diff = -(big - 0.5) * std::log1p(small / big) - small * std::log(sum) + small +
                        stirling_error(big) - stirling_error(sum);
    return std::lgamma(small) + diff;
  }
  return 0.5 * std::log(2.0 * std::numbers::pi) + (a - 0.5) * std::log(a / sum) +
         (b - 0.5) * std::log(b / sum) - 0.5 * std::log(sum) + stirling_error(a) + stirling_error(b) -
         stirling_error(sum);
}

double ibeta(double a, double b, double x, double y) {
  if (!(a > 0.0) || !(b > 0.0)) fail(ErrorKind::invalid_argument, "ibeta: a and b must be > 0");
  if (!(x >= 0.0 && x <= 1.0) || !(y >= 0.0 && y <= 1.0))
    fail(ErrorKind::invalid_argument, "ibeta: x must lie in [0, 1]");
  if (x == 0.0) return 0.0;
  if (y == 0.0) return 1.0;
  if (x < (a + 1.0) / (a + b + 2.0)) return ibeta_direct(a, b, x, y);
  return 1.0 - ibeta_direct(b, a, y, x);
}

double ibeta(double a, double b, double x) { return ibeta(a, b, x, 1.0 - x); }

double t_sf(double t, double df) {
  if (!std::isfinite(t)) fail(ErrorKind::invalid_argument, "t distribution: t must be finite");
  if (!(df > 0.0) || !std::isfinite(df)) fail(ErrorKind::invalid_argument, "t distribution: df must be > 0");
  if (t == 0.0) return 0.5;
  const double t2 = t * t;
  // x = df / (df + t^2), y = t^2 / (df + t^2), both formed without subtraction.
  double x, y;
  if (t2 < df) {
    const double r = t2 / df;
    x = 1.0 / (1.0 + r);
    y = r / (1.0 + r);
  } else {
    const double r = df / t2;
    x = r / (1.0 + r);
    y = 1.0 / (1.0 + r);
  }
  const double tail = 0.5 * ibeta(0.5 * df, 0.5, x, y);  // P(T > |t|)
  return t > 0.0 ? tail : 1.0 - tail;
}

double t_cdf(double t, double df) {
  if (!std::isfinite(t)) fail(ErrorKind::invalid_argument, "t_cdf: t must be finite");
  return t_sf(-t, df);
}

double t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) fail(ErrorKind::invalid_argument, "t_quantile: p must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -t_quantile(1.0 - p, df);
  double lo = 0.0, hi = 1.0;
  while (t_cdf(hi, df) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorKind::internal, "t_quantile: bracket overflow");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (t_cdf(mid, df) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace moe_sieve::special
