// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/core.hpp"

#include <cmath>

#include "moe_sieve/error.hpp"

namespace moe_sieve {

void ModelSpec::validate() const {
  if (n_layers < 1) fail(ErrorKind::schema, "spec: n_layers must be >= 1");
  if (n_routed < 1) fail(ErrorKind::schema, "spec: n_routed must be >= 1");
  if (n_shared < 0) fail(ErrorKind::schema, "spec: n_shared must be >= 0");
  if (top_k < 1) fail(ErrorKind::schema, "spec: top_k must be >= 1");
  if (top_k > n_routed) fail(ErrorKind::schema, "spec: top_k exceeds n_routed");
  if (!std::isfinite(expert_ffn_fraction) || expert_ffn_fraction <= 0.0)
    fail(ErrorKind::schema, "spec: expert_ffn_fraction must be positive");
}

namespace presets {

ModelSpec olmoe() { return {"olmoe", 16, 64, 0, 8, 1.0}; }
ModelSpec qwen() { return {"qwen", 24, 60, 4, 4, 0.25}; }
ModelSpec deepseek() { return {"deepseek", 27, 64, 2, 6, 0.13}; }

ModelSpec by_name(std::string_view name) {
  if (name == "olmoe") return olmoe();
  if (name == "qwen") return qwen();
  if (name == "deepseek") return deepseek();
  fail(ErrorKind::invalid_argument, "unknown model preset '" + std::string(name) + "'");
}

}  // namespace presets

std::string_view to_string(Signal s) {
  return s == Signal::counts ? "counts" : "mass";
}

Signal parse_signal(std::string_view s) {
  if (s == "counts") return Signal::counts;
  if (s == "mass") return Signal::mass;
  fail(ErrorKind::invalid_argument, "unknown signal '" + std::string(s) + "'");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::uniform_topk: return "uniform_topk";
    case Strategy::greedy: return "greedy";
    case Strategy::coverage_threshold: return "coverage_threshold";
    case Strategy::random: return "random";
  }
  return "uniform_topk";
}

Strategy parse_strategy(std::string_view s) {
  if (s == "uniform_topk") return Strategy::uniform_topk;
  if (s == "greedy") return Strategy::greedy;
  if (s == "coverage_threshold") return Strategy::coverage_threshold;
  if (s == "random") return Strategy::random;
  fail(ErrorKind::invalid_argument, "unknown strategy '" + std::string(s) + "'");
}

}  // namespace moe_sieve
