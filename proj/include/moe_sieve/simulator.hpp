// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// Synthetic routing traces with controllable per-layer skew. Each layer
// ranks its experts by a Zipf-shaped log-affinity, -s_l * ln(rank + 1),
// applied to a layer-specific permutation of expert identities. Tokens add
// Gaussian noise to the affinities and take the top_k experts; mass is the
// softmax weight (over all routed experts) of each selected expert.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "moe_sieve/core.hpp"

namespace moe_sieve::simulator {

struct SkewConfig {
  double base_zipf_exponent = 1.0;  // skew at layer 0
  double depth_amplification = 1.0;  // exponent multiplier reached at peak_layer
  int peak_layer = -1;               // -1: n_layers / 4
  std::uint64_t hot_set_rotation_seed = 0;
  bool rotate_hot_sets = true;  // false: expert e has rank e in every layer
  double gate_noise_sigma = 1.0;
  std::string task_id;       // non-empty: reshuffle part of the hot-set order
  double task_overlap = 0.0;  // share of rank positions kept when task_id is set
  int tokens_per_sample = 64;

  void validate() const;
};

/// Zipf exponent used at a layer under the linear-then-flat depth schedule.
double layer_exponent(const SkewConfig& cfg, int n_layers, int layer);

/// expert_at_rank[r] for one layer: which expert identity holds rank r.
std::vector<int> layer_rank_order(const SkewConfig& cfg, int n_routed, int layer);

/// Generates n_tokens tokens in samples of cfg.tokens_per_sample. Output is
/// a pure function of the arguments; threads only change wall time.
RoutingTrace gen_trace(const ModelSpec& spec, const SkewConfig& cfg, std::int64_t n_tokens,
                       std::uint64_t seed, std::string dataset_id = {}, unsigned threads = 0);

/// One trace per task. Tasks share the family's hot-set order (from
/// cfg.hot_set_rotation_seed) up to an `overlap` share of rank positions.
std::vector<RoutingTrace> gen_task_family(const ModelSpec& spec, const SkewConfig& base_cfg,
                                          std::span<const std::string> tasks, double overlap,
                                          std::int64_t n_tokens, std::uint64_t seed);

struct Preset {
  std::string name;
  ModelSpec spec;
  SkewConfig skew;
};

/// "olmoe-like", "qwen-like", "deepseek-like".
Preset preset(std::string_view name);
std::vector<std::string> preset_names();

/// Declarative config: {"preset": name?, "model": name? | "spec": {...}?,
/// "skew": {partial SkewConfig}?}. Later keys override the preset.
Preset parse_config(std::string_view json_text);
Preset load_config(const std::filesystem::path& path);

}  // namespace moe_sieve::simulator
