// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// Routing-skew statistics. Standard deviations here are population
// (divide by n): they describe a fixed set of experts, not a sample.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "moe_sieve/core.hpp"

namespace moe_sieve::stats {

/// Population std / mean of one layer's counts. Throws domain on a zero row.
double layer_cv(std::span<const std::int64_t> row);
double layer_cv(std::span<const double> row);

enum class GlobalCvMode {
  expert_totals,  // CV of per-expert-index totals summed over layers
  pooled_cells,   // CV over all n_layers x n_routed cells as one population
};

double global_cv(const RoutingTrace& trace, GlobalCvMode mode = GlobalCvMode::expert_totals);

/// Fraction of experts whose count is below threshold x the uniform share.
double cold_fraction(std::span<const std::int64_t> row, double threshold = 0.5);

/// Share of the row captured by its k largest entries; 0 <= k <= row size.
double coverage_at(std::span<const std::int64_t> row, int k);
double coverage_at(std::span<const double> row, int k);

/// Per-token coverage when the always-active shared experts are counted
/// alongside the routed experts.
double shared_adjusted_coverage(const ModelSpec& spec, double routed_coverage);

/// Entropy of the routing distribution normalized by ln(n_routed).
double normalized_entropy(std::span<const std::int64_t> row);

/// |a ∩ b| / |a ∪ b| over sorted, duplicate-free index lists; (∅, ∅) -> 1.
double jaccard(std::span<const int> a, std::span<const int> b);

/// Symmetric matrix of mean per-layer Jaccard between manifests.
std::vector<std::vector<double>> cross_dataset_similarity(
    std::span<const SelectionManifest> manifests);

struct LayerStats {
  int layer = 0;
  double cv = 0.0;
  double cold_fraction = 0.0;
  double coverage_at_k = 0.0;
  double norm_entropy = 0.0;
};

std::vector<LayerStats> per_layer_table(const RoutingTrace& trace, int k);

struct ProfileReport {
  std::vector<LayerStats> per_layer;
  int k = 0;
  double global_cv = 0.0;
  double mean_layer_cv = 0.0;
  double cv_ratio = 0.0;
  double mean_cold_fraction = 0.0;
  double mean_coverage_at_k = 0.0;
  double shared_adjusted_coverage = 0.0;
};

ProfileReport profile(const RoutingTrace& trace, int k);

/// floor(fraction * n_routed); the budget rule for top-k selection.
int k_from_fraction(int n_routed, double fraction);

}  // namespace moe_sieve::stats
