// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "moe_sieve/core.hpp"
#include "temp_dir.hpp"

namespace moe_sieve::testing {

inline ModelSpec tiny_spec(int layers, int routed, int top_k, int shared = 0) {
  return ModelSpec{"tiny", layers, routed, shared, top_k, 1.0};
}

// Builds a trace from count rows; every row must sum to n_tokens * top_k.
// Mass defaults to counts scaled by mass_scale.
inline RoutingTrace trace_from_rows(const std::vector<std::vector<std::int64_t>>& rows, int top_k,
                                    double mass_scale = 0.5,
                                    const std::vector<std::vector<double>>& mass_rows = {},
                                    int n_shared = 0) {
  const int layers = static_cast<int>(rows.size());
  const int routed = static_cast<int>(rows.front().size());
  std::int64_t row_sum = 0;
  for (auto c : rows.front()) row_sum += c;
  std::vector<std::int64_t> counts;
  std::vector<double> mass;
  for (int l = 0; l < layers; ++l) {
    for (int e = 0; e < routed; ++e) {
      const auto c = rows[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)];
      counts.push_back(c);
      mass.push_back(mass_rows.empty() ? static_cast<double>(c) * mass_scale
                                       : mass_rows[static_cast<std::size_t>(l)][static_cast<std::size_t>(e)]);
    }
  }
  return RoutingTrace(tiny_spec(layers, routed, top_k, n_shared), "fixture", row_sum / top_k,
                      std::move(counts), std::move(mass));
}

}  // namespace moe_sieve::testing
