// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/selection.hpp"

#include <algorithm>
#include <numeric>
#include <span>

#include "moe_sieve/error.hpp"
#include "moe_sieve/rng.hpp"
#include "moe_sieve/stats.hpp"

namespace moe_sieve::selection {

namespace {

template <typename T>
std::vector<int> rank_row(std::span<const T> row) {
  std::vector<int> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return row[static_cast<std::size_t>(a)] > row[static_cast<std::size_t>(b)];
  });
  return order;
}

std::vector<int> sorted_prefix(const std::vector<int>& order, int k) {
  std::vector<int> out(order.begin(), order.begin() + k);
  std::sort(out.begin(), out.end());
  return out;
}

SelectionManifest base_manifest(const RoutingTrace& trace, Strategy strategy, Signal signal) {
  SelectionManifest m;
  m.spec = trace.spec();
  m.dataset_id = trace.dataset_id();
  m.strategy = strategy;
  m.signal = signal;
  m.profile_digest = trace.digest();
  return m;
}

void finish(SelectionManifest& m) {
  m.budget_total = 0;
  for (const auto& layer : m.per_layer_experts)
    m.budget_total += static_cast<std::int64_t>(layer.size());
  m.validate();
}

// Row values in ranked order plus the row total, for one signal type.
template <typename T>
struct RankedValues {
  std::vector<T> values;  // descending
  T total{};
};

template <typename T>
RankedValues<T> ranked_values(std::span<const T> row) {
  RankedValues<T> r;
  r.values.assign(row.begin(), row.end());
  std::stable_sort(r.values.begin(), r.values.end(), std::greater<>());
  for (T v : row) r.total += v;
  return r;
}

template <typename T>
using Wide = std::conditional_t<std::is_integral_v<T>, __int128, long double>;

template <typename T>
std::vector<int> greedy_alloc(const std::vector<RankedValues<T>>& layers, int budget) {
  std::vector<int> k(layers.size(), 0);
  for (int step = 0; step < budget; ++step) {
    int best = -1;
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const auto& lv = layers[l];
      const auto kl = static_cast<std::size_t>(k[l]);
      if (kl >= lv.values.size()) continue;
      if (best < 0) {
        best = static_cast<int>(l);
        continue;
      }
      const auto& bv = layers[static_cast<std::size_t>(best)];
      const auto kb = static_cast<std::size_t>(k[static_cast<std::size_t>(best)]);
      // gain_l = v_l / S_l; a zero-sum layer has gain 0. Compare by cross
      // multiplication so integer counts are compared exactly.
      const Wide<T> num_l = lv.total > T{} ? Wide<T>(lv.values[kl]) : Wide<T>(0);
      const Wide<T> den_l = lv.total > T{} ? Wide<T>(lv.total) : Wide<T>(1);
      const Wide<T> num_b = bv.total > T{} ? Wide<T>(bv.values[kb]) : Wide<T>(0);
      const Wide<T> den_b = bv.total > T{} ? Wide<T>(bv.total) : Wide<T>(1);
      if (num_l * den_b > num_b * den_l) best = static_cast<int>(l);
    }
    ++k[static_cast<std::size_t>(best)];
  }
  return k;
}

}  // namespace

RankedLayer rank_experts(const RoutingTrace& trace, int layer, Signal signal) {
  RankedLayer r;
  r.layer = layer;
  r.order = signal == Signal::counts ? rank_row(trace.counts_row(layer))
                                     : rank_row(trace.mass_row(layer));
  return r;
}

SelectionManifest select_topk_uniform(const RoutingTrace& trace, int k, Signal signal) {
  if (k < 1 || k > trace.n_routed())
    fail(ErrorKind::invalid_argument, "uniform top-k: k must lie in [1, " +
                                          std::to_string(trace.n_routed()) + "], got " +
                                          std::to_string(k));
  auto m = base_manifest(trace, Strategy::uniform_topk, signal);
  m.params.k = k;
  for (int l = 0; l < trace.n_layers(); ++l)
    m.per_layer_experts.push_back(sorted_prefix(rank_experts(trace, l, signal).order, k));
  finish(m);
  return m;
}

SelectionManifest select_topk_uniform_fraction(const RoutingTrace& trace, double fraction,
                                               Signal signal) {
  const int k = stats::k_from_fraction(trace.n_routed(), fraction);
  if (k == 0)
    fail(ErrorKind::invalid_argument, "uniform top-k: fraction selects zero experts per layer");
  auto m = select_topk_uniform(trace, k, signal);
  m.params.fraction = fraction;
  return m;
}

std::vector<int> greedy_allocation(const RoutingTrace& trace, int budget, Signal signal) {
  const int max_budget = trace.n_layers() * trace.n_routed();
  if (budget < 1 || budget > max_budget)
    fail(ErrorKind::invalid_argument, "greedy: budget must lie in [1, " + std::to_string(max_budget) +
                                          "], got " + std::to_string(budget));
  if (signal == Signal::counts) {
    std::vector<RankedValues<std::int64_t>> layers;
    for (int l = 0; l < trace.n_layers(); ++l) layers.push_back(ranked_values(trace.counts_row(l)));
    return greedy_alloc(layers, budget);
  }
  std::vector<RankedValues<double>> layers;
  for (int l = 0; l < trace.n_layers(); ++l) layers.push_back(ranked_values(trace.mass_row(l)));
  return greedy_alloc(layers, budget);
}

SelectionManifest select_greedy(const RoutingTrace& trace, int budget, Signal signal) {
  const auto alloc = greedy_allocation(trace, budget, signal);
  auto m = base_manifest(trace, Strategy::greedy, signal);
  m.params.budget = budget;
  for (int l = 0; l < trace.n_layers(); ++l)
    m.per_layer_experts.push_back(
        sorted_prefix(rank_experts(trace, l, signal).order, alloc[static_cast<std::size_t>(l)]));
  finish(m);
  return m;
}

SelectionManifest select_coverage_threshold(const RoutingTrace& trace, double tau, Signal signal) {
  if (!(tau > 0.0 && tau <= 1.0))
    fail(ErrorKind::invalid_argument, "coverage threshold: tau must lie in (0, 1]");
  auto m = base_manifest(trace, Strategy::coverage_threshold, signal);
  m.params.tau = tau;
  for (int l = 0; l < trace.n_layers(); ++l) {
    const auto cov = [&](int k) {
      return signal == Signal::counts ? stats::coverage_at(trace.counts_row(l), k)
                                      : stats::coverage_at(trace.mass_row(l), k);
    };
    cov(0);  // throws on a zero-sum row
    int k = 1;
    while (k < trace.n_routed() && cov(k) < tau) ++k;
    m.per_layer_experts.push_back(sorted_prefix(rank_experts(trace, l, signal).order, k));
  }
  finish(m);
  return m;
}

SelectionManifest select_random(const ModelSpec& spec, int k, std::uint64_t seed) {
  spec.validate();
  if (k < 1 || k > spec.n_routed)
    fail(ErrorKind::invalid_argument, "random: k must lie in [1, " + std::to_string(spec.n_routed) +
                                          "], got " + std::to_string(k));
  SelectionManifest m;
  m.spec = spec;
  m.strategy = Strategy::random;
  m.signal = Signal::counts;
  m.seed = seed;
  m.params.k = k;
  for (int l = 0; l < spec.n_layers; ++l) {
    rng::Rng gen(rng::derive_seed(seed, static_cast<std::uint64_t>(l)));
    auto picked = gen.sample_without_replacement(spec.n_routed, k);
    std::sort(picked.begin(), picked.end());
    m.per_layer_experts.push_back(std::move(picked));
  }
  finish(m);
  return m;
}

SelectionManifest select_random(const RoutingTrace& trace, int k, std::uint64_t seed) {
  auto m = select_random(trace.spec(), k, seed);
  m.dataset_id = trace.dataset_id();
  m.profile_digest = trace.digest();
  return m;
}

SignalComparison compare_signals(const RoutingTrace& trace, double fraction) {
  SignalComparison out;
  out.k = stats::k_from_fraction(trace.n_routed(), fraction);
  if (out.k == 0) fail(ErrorKind::invalid_argument, "compare_signals: fraction selects zero experts");
  double sum = 0.0;
  for (int l = 0; l < trace.n_layers(); ++l) {
    const auto a = sorted_prefix(rank_experts(trace, l, Signal::counts).order, out.k);
    const auto b = sorted_prefix(rank_experts(trace, l, Signal::mass).order, out.k);
    out.per_layer_jaccard.push_back(stats::jaccard(a, b));
    sum += out.per_layer_jaccard.back();
  }
  out.mean = sum / trace.n_layers();
  return out;
}

std::vector<double> manifest_coverage(const RoutingTrace& trace, const SelectionManifest& m,
                                      Signal signal) {
  if (!(m.spec == trace.spec()))
    fail(ErrorKind::invalid_argument, "manifest_coverage: manifest and trace use different specs");
  std::vector<double> out;
  for (int l = 0; l < trace.n_layers(); ++l) {
    const auto& experts = m.per_layer_experts[static_cast<std::size_t>(l)];
    double picked = 0.0, total = 0.0;
    if (signal == Signal::counts) {
      const auto row = trace.counts_row(l);
      std::int64_t p = 0, t = 0;
      for (int e : experts) p += row[static_cast<std::size_t>(e)];
      for (auto c : row) t += c;
      picked = static_cast<double>(p);
      total = static_cast<double>(t);
    } else {
      const auto row = trace.mass_row(l);
      for (int e : experts) picked += row[static_cast<std::size_t>(e)];
      for (auto c : row) total += c;
    }
    if (total <= 0.0) fail(ErrorKind::domain, "manifest_coverage: zero-sum layer " + std::to_string(l));
    out.push_back(picked / total);
  }
  return out;
}

}  // namespace moe_sieve::selection
