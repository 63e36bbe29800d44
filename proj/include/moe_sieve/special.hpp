// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#pragma once

namespace moe_sieve::special {

/// ln B(a, b) for a, b > 0, accurate when one argument is large.
double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b). y = 1 - x is passed separately so
/// callers that know it exactly (e.g. Student's t) keep full precision.
double ibeta(double a, double b, double x, double y);
double ibeta(double a, double b, double x);

/// Student's t cumulative distribution; df > 0, t finite.
double t_cdf(double t, double df);

/// Upper tail P(T > t), computed without cancellation.
double t_sf(double t, double df);

/// Inverse of t_cdf for p in (0, 1).
double t_quantile(double p, double df);

}  // namespace moe_sieve::special
