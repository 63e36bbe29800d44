// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#pragma once

#include <cstdint>
#include <vector>

#include "moe_sieve/core.hpp"

namespace moe_sieve::selection {

/// Experts of one layer ordered by signal descending, ties by ascending index.
struct RankedLayer {
  int layer = 0;
  std::vector<int> order;
};

RankedLayer rank_experts(const RoutingTrace& trace, int layer, Signal signal);

/// Top-k experts per layer. k must lie in [1, n_routed].
SelectionManifest select_topk_uniform(const RoutingTrace& trace, int k, Signal signal);
/// k = floor(fraction * n_routed); a fraction that floors to 0 is an error.
SelectionManifest select_topk_uniform_fraction(const RoutingTrace& trace, double fraction,
                                               Signal signal);

/// Per-layer expert counts chosen by marginal coverage gain.
std::vector<int> greedy_allocation(const RoutingTrace& trace, int budget, Signal signal);

/// Distributes budget slots one at a time to the layer whose next-ranked
/// expert adds the most coverage (ties to the lower layer). Coverage per layer
/// is concave in k, so the total coverage is maximal among all allocations.
SelectionManifest select_greedy(const RoutingTrace& trace, int budget, Signal signal);

/// Per layer, the fewest top-ranked experts whose coverage reaches tau.
SelectionManifest select_coverage_threshold(const RoutingTrace& trace, double tau,
                                            Signal signal = Signal::counts);

/// k experts per layer drawn uniformly without replacement; one stream per layer.
SelectionManifest select_random(const ModelSpec& spec, int k, std::uint64_t seed);
/// As above, additionally stamping dataset_id and profile digest from the trace.
SelectionManifest select_random(const RoutingTrace& trace, int k, std::uint64_t seed);

struct SignalComparison {
  int k = 0;
  std::vector<double> per_layer_jaccard;
  double mean = 0.0;
};

/// Agreement between count-ranked and mass-ranked top-k sets.
SignalComparison compare_signals(const RoutingTrace& trace, double fraction);

/// Coverage of a manifest's per-layer sets measured on the trace's signal.
std::vector<double> manifest_coverage(const RoutingTrace& trace, const SelectionManifest& m,
                                      Signal signal = Signal::counts);

}  // namespace moe_sieve::selection
