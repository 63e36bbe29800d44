// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "moe_sieve/error.hpp"
#include "moe_sieve/rng.hpp"
#include "moe_sieve/selection.hpp"
#include "moe_sieve/stats.hpp"

namespace moe_sieve::stability {

namespace {

std::vector<std::vector<int>> topk_sets(const RoutingTrace& trace, int k, Signal signal) {
  return selection::select_topk_uniform(trace, k, signal).per_layer_experts;
}

}  // namespace

int subsample_size(std::size_t n_samples, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    fail(ErrorKind::invalid_argument, "stability: fraction must lie in (0, 1]");
  const double raw = std::ceil(fraction * static_cast<double>(n_samples) - 1e-9);
  return static_cast<int>(std::clamp(raw, 0.0, static_cast<double>(n_samples)));
}

StabilityReport bootstrap_stability(std::span<const SampleRecord> samples, const ModelSpec& spec,
                                    const StabilityParams& params, const std::string& dataset_id) {
  if (samples.empty()) fail(ErrorKind::invalid_argument, "stability: no samples");
  if (params.trials < 1) fail(ErrorKind::invalid_argument, "stability: trials must be >= 1");
  if (params.k < 1 || params.k > spec.n_routed)
    fail(ErrorKind::invalid_argument, "stability: k must lie in [1, n_routed]");
  const int m = subsample_size(samples.size(), params.fraction);
  if (m < 1) fail(ErrorKind::invalid_argument, "stability: fraction yields an empty subsample");

  const std::vector<SampleRecord> all(samples.begin(), samples.end());
  const auto reference = topk_sets(RoutingTrace::from_samples(spec, dataset_id, all), params.k,
                                   params.signal);

  const auto L = static_cast<std::size_t>(spec.n_layers);
  // jaccard[t * L + l]
  std::vector<double> jaccard(static_cast<std::size_t>(params.trials) * L, 0.0);

  auto run_trial = [&](int t) {
    rng::Rng gen(rng::derive_seed(params.seed, static_cast<std::uint64_t>(t)));
    auto picked = gen.sample_without_replacement(static_cast<int>(samples.size()), m);
    std::sort(picked.begin(), picked.end());
    std::vector<SampleRecord> sub;
    sub.reserve(picked.size());
    for (int i : picked) sub.push_back(samples[static_cast<std::size_t>(i)]);
    const auto sets = topk_sets(RoutingTrace::from_samples(spec, dataset_id, std::move(sub)),
                                params.k, params.signal);
    for (std::size_t l = 0; l < L; ++l)
      jaccard[static_cast<std::size_t>(t) * L + l] = stats::jaccard(sets[l], reference[l]);
  };

  unsigned threads = params.threads ? params.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(params.trials));
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (int t = next++; t < params.trials; t = next++) {
      try {
        run_trial(t);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  StabilityReport r;
  r.dataset_id = dataset_id;
  r.fraction = params.fraction;
  r.trials = params.trials;
  r.k = params.k;
  r.subsample_size = m;
  r.seed = params.seed;
  r.per_layer_mean_jaccard.assign(L, 0.0);
  r.min_jaccard = 1.0;
  // Reduce in trial order so floating sums are independent of scheduling.
  for (int t = 0; t < params.trials; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      const double j = jaccard[static_cast<std::size_t>(t) * L + l];
      r.per_layer_mean_jaccard[l] += j;
      r.min_jaccard = std::min(r.min_jaccard, j);
    }
  }
  double total = 0.0;
  for (auto& v : r.per_layer_mean_jaccard) {
    v /= params.trials;
    total += v;
  }
  r.mean_jaccard = total / static_cast<double>(L);
  return r;
}

}  // namespace moe_sieve::stability
