// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moe_sieve/core.hpp"

namespace moe_sieve::stability {

struct StabilityParams {
  double fraction = 0.1;  // share of samples drawn per trial, without replacement
  int trials = 50;
  int k = 0;
  Signal signal = Signal::counts;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0 = hardware concurrency; never changes the result
};

struct StabilityReport {
  std::string dataset_id;
  double fraction = 0.0;
  int trials = 0;
  int k = 0;
  int subsample_size = 0;
  std::vector<double> per_layer_mean_jaccard;
  double mean_jaccard = 0.0;
  double min_jaccard = 0.0;
  std::uint64_t seed = 0;
};

/// Number of samples drawn per trial: ceil(fraction * n).
int subsample_size(std::size_t n_samples, double fraction);

/// Top-k agreement between subsample profiles and the full-data profile.
/// Trial t draws from its own stream derived from (seed, t), so the report
/// does not depend on the order or thread in which trials run.
StabilityReport bootstrap_stability(std::span<const SampleRecord> samples, const ModelSpec& spec,
                                    const StabilityParams& params,
                                    const std::string& dataset_id = {});

}  // namespace moe_sieve::stability
