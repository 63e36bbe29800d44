// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "moe_sieve/error.hpp"

namespace moe_sieve::stats {

namespace {

template <typename T>
double cv_of(std::span<const T> row) {
  if (row.empty()) fail(ErrorKind::invalid_argument, "cv: empty row");
  double sum = 0.0;
  for (T v : row) sum += static_cast<double>(v);
  if (sum <= 0.0) fail(ErrorKind::domain, "cv: zero mean");
  const double n = static_cast<double>(row.size());
  const double mean = sum / n;
  double ss = 0.0;
  for (T v : row) {
    const double d = static_cast<double>(v) - mean;
    ss += d * d;
  }
  return std::sqrt(ss / n) / mean;
}

template <typename T>
double coverage_of(std::span<const T> row, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > row.size())
    fail(ErrorKind::invalid_argument, "coverage_at: k out of range");
  T total{};
  for (T v : row) total += v;
  if (total <= T{}) fail(ErrorKind::domain, "coverage_at: zero-sum row");
  if (k == 0) return 0.0;
  std::vector<T> sorted(row.begin(), row.end());
  std::partial_sort(sorted.begin(), sorted.begin() + k, sorted.end(), std::greater<>());
  T top{};
  for (int i = 0; i < k; ++i) top += sorted[static_cast<std::size_t>(i)];
  return static_cast<double>(top) / static_cast<double>(total);
}

std::int64_t row_sum(std::span<const std::int64_t> row) {
  return std::accumulate(row.begin(), row.end(), std::int64_t{0});
}

}  // namespace

double layer_cv(std::span<const std::int64_t> row) { return cv_of(row); }
double layer_cv(std::span<const double> row) { return cv_of(row); }

double global_cv(const RoutingTrace& trace, GlobalCvMode mode) {
  if (trace.n_tokens() <= 0) fail(ErrorKind::domain, "global_cv: empty trace");
  if (mode == GlobalCvMode::pooled_cells) return cv_of(trace.counts());
  std::vector<std::int64_t> totals(static_cast<std::size_t>(trace.n_routed()), 0);
  for (int l = 0; l < trace.n_layers(); ++l) {
    const auto row = trace.counts_row(l);
    for (std::size_t e = 0; e < row.size(); ++e) totals[e] += row[e];
  }
  return cv_of(std::span<const std::int64_t>(totals));
}

double cold_fraction(std::span<const std::int64_t> row, double threshold) {
  if (row.empty()) fail(ErrorKind::invalid_argument, "cold_fraction: empty row");
  if (!(threshold > 0.0)) fail(ErrorKind::invalid_argument, "cold_fraction: threshold must be > 0");
  const auto total = row_sum(row);
  if (total <= 0) fail(ErrorKind::domain, "cold_fraction: zero-sum row");
  const double cutoff = threshold * static_cast<double>(total) / static_cast<double>(row.size());
  const auto cold = std::count_if(row.begin(), row.end(),
                                  [cutoff](std::int64_t c) { return static_cast<double>(c) < cutoff; });
  return static_cast<double>(cold) / static_cast<double>(row.size());
}

double coverage_at(std::span<const std::int64_t> row, int k) { return coverage_of(row, k); }
double coverage_at(std::span<const double> row, int k) { return coverage_of(row, k); }

double shared_adjusted_coverage(const ModelSpec& spec, double routed_coverage) {
  if (!(routed_coverage >= 0.0 && routed_coverage <= 1.0))
    fail(ErrorKind::invalid_argument, "shared_adjusted_coverage: coverage must lie in [0, 1]");
  return (spec.n_shared + spec.top_k * routed_coverage) / (spec.n_shared + spec.top_k);
}

double normalized_entropy(std::span<const std::int64_t> row) {
  if (row.size() < 2)
    fail(ErrorKind::domain, "normalized_entropy: undefined normalizer for fewer than 2 experts");
  const auto total = row_sum(row);
  if (total <= 0) fail(ErrorKind::domain, "normalized_entropy: zero-sum row");
  double h = 0.0;
  for (auto c : row) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return std::clamp(h / std::log(static_cast<double>(row.size())), 0.0, 1.0);
}

double jaccard(std::span<const int> a, std::span<const int> b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t i = 0, j = 0, common = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) {
      ++common;
      ++i;
      ++j;
    } else if (a[i] < b[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const auto uni = a.size() + b.size() - common;
  return static_cast<double>(common) / static_cast<double>(uni);
}

std::vector<std::vector<double>> cross_dataset_similarity(
    std::span<const SelectionManifest> manifests) {
  const auto n = manifests.size();
  for (const auto& m : manifests) {
    if (!(m.spec == manifests.front().spec))
      fail(ErrorKind::invalid_argument, "cross_dataset_similarity: manifests use different model specs");
  }
  std::vector<std::vector<double>> out(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = manifests[i].per_layer_experts;
      const auto& b = manifests[j].per_layer_experts;
      double sum = 0.0;
      for (std::size_t l = 0; l < a.size(); ++l) sum += jaccard(a[l], b[l]);
      const double mean = a.empty() ? 1.0 : sum / static_cast<double>(a.size());
      out[i][j] = out[j][i] = mean;
    }
  }
  return out;
}

int k_from_fraction(int n_routed, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    fail(ErrorKind::invalid_argument, "fraction must lie in (0, 1]");
  return static_cast<int>(std::floor(fraction * n_routed));
}

std::vector<LayerStats> per_layer_table(const RoutingTrace& trace, int k) {
  if (k < 0 || k > trace.n_routed()) fail(ErrorKind::invalid_argument, "per_layer_table: k out of range");
  std::vector<LayerStats> rows;
  rows.reserve(static_cast<std::size_t>(trace.n_layers()));
  for (int l = 0; l < trace.n_layers(); ++l) {
    const auto row = trace.counts_row(l);
    rows.push_back({l, layer_cv(row), cold_fraction(row), coverage_at(row, k), normalized_entropy(row)});
  }
  return rows;
}

ProfileReport profile(const RoutingTrace& trace, int k) {
  ProfileReport r;
  r.k = k;
  r.per_layer = per_layer_table(trace, k);
  const double n = static_cast<double>(r.per_layer.size());
  for (const auto& s : r.per_layer) {
    r.mean_layer_cv += s.cv;
    r.mean_cold_fraction += s.cold_fraction;
    r.mean_coverage_at_k += s.coverage_at_k;
  }
  r.mean_layer_cv /= n;
  r.mean_cold_fraction /= n;
  r.mean_coverage_at_k /= n;
  r.global_cv = global_cv(trace);
  if (r.global_cv > 0.0)
    r.cv_ratio = r.mean_layer_cv / r.global_cv;
  else
    r.cv_ratio = r.mean_layer_cv > 0.0 ? std::numeric_limits<double>::infinity()
                                       : std::numeric_limits<double>::quiet_NaN();
  r.shared_adjusted_coverage = shared_adjusted_coverage(trace.spec(), r.mean_coverage_at_k);
  return r;
}

}  // namespace moe_sieve::stats
