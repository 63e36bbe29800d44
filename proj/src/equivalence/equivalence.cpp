// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/equivalence.hpp"

#include <cmath>
#include <limits>

#include "moe_sieve/error.hpp"
#include "moe_sieve/special.hpp"

namespace moe_sieve::equivalence {

namespace {

struct PairedDiff {
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  int n = 0;
};

PairedDiff paired(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::invalid_argument, "paired test: vectors differ in length");
  if (a.size() < 2) fail(ErrorKind::invalid_argument, "paired test: need at least 2 seeds");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i]) || !std::isfinite(b[i]))
      fail(ErrorKind::invalid_argument, "paired test: non-finite value");
    d[i] = a[i] - b[i];
  }
  PairedDiff p;
  p.n = static_cast<int>(d.size());
  p.mean = mean(d);
  p.sd = sample_std(d);
  p.se = p.sd / std::sqrt(static_cast<double>(p.n));
  return p;
}

}  // namespace

double mean(std::span<const double> v) {
  if (v.empty()) fail(ErrorKind::invalid_argument, "mean of empty vector");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v) {
  if (v.size() < 2) fail(ErrorKind::invalid_argument, "sample std needs at least 2 values");
  // Shifted by the first value so a constant vector yields exactly zero.
  const double shift = v[0];
  double s = 0.0;
  for (double x : v) s += x - shift;
  const double m = s / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - shift - m) * (x - shift - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

DeltaCi paired_delta_ci(std::span<const double> a, std::span<const double> b, double conf) {
  if (!(conf > 0.0 && conf < 1.0)) fail(ErrorKind::invalid_argument, "confidence level must lie in (0, 1)");
  const auto p = paired(a, b);
  const double half = p.sd == 0.0 ? 0.0 : special::t_quantile(0.5 * (1.0 + conf), p.n - 1) * p.se;
  return {p.mean, p.mean - half, p.mean + half};
}

TostResult tost(std::span<const double> a, std::span<const double> b, Pp epsilon, double alpha) {
  if (!(epsilon.value > 0.0)) fail(ErrorKind::invalid_argument, "tost: margin must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::invalid_argument, "tost: alpha must lie in (0, 1)");
  const auto p = paired(a, b);
  const double eps = epsilon.accuracy();
  TostResult r;
  r.epsilon_pp = epsilon.value;
  if (p.sd == 0.0) {
    // Degenerate: the difference is known exactly.
    if (std::abs(p.mean) < eps) {
      r.p_lower = r.p_upper = 0.0;
    } else if (p.mean > 0.0) {
      r.p_lower = 0.0;
      r.p_upper = 1.0;
    } else {
      r.p_lower = 1.0;
      r.p_upper = 0.0;
    }
  } else {
    const double df = p.n - 1;
    r.p_lower = special::t_sf((p.mean + eps) / p.se, df);
    r.p_upper = special::t_cdf((p.mean - eps) / p.se, df);
  }
  r.established = r.p_lower < alpha && r.p_upper < alpha;
  return r;
}

double paired_ttest(std::span<const double> a, std::span<const double> b) {
  const auto p = paired(a, b);
  if (p.sd == 0.0) return p.mean == 0.0 ? 1.0 : 0.0;
  const double t = std::abs(p.mean / p.se);
  return std::min(1.0, 2.0 * special::t_sf(t, p.n - 1));
}

double std_ratio(std::span<const double> a, std::span<const double> b) {
  const double sb = sample_std(b);
  if (sb == 0.0) fail(ErrorKind::domain, "std_ratio: reference std is zero");
  return sample_std(a) / sb;
}

EquivalenceReport compare(std::span<const double> a, std::span<const double> b,
                          std::span<const double> margins_pp, double alpha, double conf) {
  EquivalenceReport r;
  const auto ci = paired_delta_ci(a, b, conf);
  r.n = static_cast<int>(a.size());
  r.mean_a = mean(a);
  r.mean_b = mean(b);
  r.std_a = sample_std(a);
  r.std_b = sample_std(b);
  r.delta = ci.delta;
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  r.conf = conf;
  r.alpha = alpha;
  r.ttest_p = paired_ttest(a, b);
  for (double m : margins_pp) r.tost.push_back(tost(a, b, Pp{m}, alpha));
  r.std_ratio = r.std_b > 0.0 ? r.std_a / r.std_b : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace moe_sieve::equivalence
