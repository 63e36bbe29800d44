// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "moe_sieve/error.hpp"
#include "moe_sieve/selection.hpp"
#include "moe_sieve/simulator.hpp"
#include "moe_sieve/stats.hpp"
#include "test_support.hpp"

using namespace moe_sieve;
using namespace moe_sieve::simulator;
using Catch::Matchers::WithinAbs;

namespace {

template <typename F>
ErrorKind kind_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::internal;
}

// E[|A∩B| / |A∪B|] for independent uniform k-subsets of n items (hypergeometric overlap).
double hypergeometric_jaccard(int n, int k) {
  auto log_choose = [](int a, int b) { return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0); };
  double e = 0.0;
  for (int i = std::max(0, 2 * k - n); i <= k; ++i) {
    const double p = std::exp(log_choose(k, i) + log_choose(n - k, k - i) - log_choose(n, k));
    e += p * i / (2.0 * k - i);
  }
  return e;
}

double mean_jaccard(const RoutingTrace& a, const RoutingTrace& b, int k) {
  const auto ma = selection::select_topk_uniform(a, k, Signal::counts);
  const auto mb = selection::select_topk_uniform(b, k, Signal::counts);
  double s = 0;
  for (std::size_t l = 0; l < ma.per_layer_experts.size(); ++l)
    s += stats::jaccard(ma.per_layer_experts[l], mb.per_layer_experts[l]);
  return s / static_cast<double>(ma.per_layer_experts.size());
}

void check_invariants(const RoutingTrace& t) {
  for (int l = 0; l < t.n_layers(); ++l) {
    const auto row = t.counts_row(l);
    CHECK(std::accumulate(row.begin(), row.end(), std::int64_t{0}) == t.n_tokens() * t.spec().top_k);
    for (int e = 0; e < t.n_routed(); ++e) {
      CHECK(t.mass(l, e) >= 0.0);
      CHECK(t.mass(l, e) <= static_cast<double>(t.count(l, e)));
    }
  }
}

}  // namespace

TEST_CASE("generated traces satisfy the trace invariants") {
  for (const auto& name : preset_names()) {
    const auto p = preset(name);
    const auto t = gen_trace(p.spec, p.skew, 1000, 3, name);
    check_invariants(t);
    CHECK(t.n_tokens() == 1000);
    CHECK(t.samples().size() == 16);
    CHECK(t.samples().back().n_tokens == 1000 - 15 * 64);
    CHECK(t.dataset_id() == name);
  }
}

TEST_CASE("generation is deterministic and thread-count independent") {
  const auto p = preset("qwen-like");
  const auto a = gen_trace(p.spec, p.skew, 3000, 42, "x", 1);
  const auto b = gen_trace(p.spec, p.skew, 3000, 42, "x", 3);
  CHECK(serialize_trace(a) == serialize_trace(b));
  CHECK(serialize_samples(a.samples()) == serialize_samples(b.samples()));
  CHECK(a.digest() != gen_trace(p.spec, p.skew, 3000, 43, "x").digest());
}

TEST_CASE("zero skew routes near-uniformly") {
  SkewConfig cfg;
  cfg.base_zipf_exponent = 0.0;
  const auto t = gen_trace(presets::olmoe(), cfg, 50000, 1);
  CHECK(stats::profile(t, 16).mean_layer_cv < 0.15);
}

TEST_CASE("olmoe-like calibration band") {
  const auto p = preset("olmoe-like");
  const auto r = stats::profile(gen_trace(p.spec, p.skew, 20000, 8), 16);
  CHECK(r.mean_layer_cv >= 0.6);
  CHECK(r.mean_layer_cv <= 1.1);
  CHECK(r.cv_ratio > 2.0);
}

TEST_CASE("rotated hot sets give global CV below mean layer CV") {
  for (const auto& name : preset_names()) {
    const auto p = preset(name);
    const auto r = stats::profile(gen_trace(p.spec, p.skew, 4000, 5), 4);
    CHECK(r.global_cv < r.mean_layer_cv);
  }
  SkewConfig aligned;
  aligned.rotate_hot_sets = false;
  const auto r = stats::profile(gen_trace(presets::olmoe(), aligned, 4000, 5), 4);
  CHECK(r.cv_ratio < 2.0);
}

TEST_CASE("mean layer CV grows with the base exponent") {
  const ModelSpec spec{"four", 4, 64, 0, 8, 1.0};
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    double prev = -1.0;
    bool mono = true;
    for (double s : {0.0, 0.3, 0.8}) {
      SkewConfig cfg;
      cfg.base_zipf_exponent = s;
      const double cv = stats::profile(gen_trace(spec, cfg, 20000, seed), 16).mean_layer_cv;
      mono = mono && cv >= prev;
      prev = cv;
    }
    ok += mono ? 1 : 0;
  }
  CHECK(ok == 10);
}

TEST_CASE("depth schedule") {
  SkewConfig cfg;
  cfg.base_zipf_exponent = 0.5;
  cfg.depth_amplification = 2.0;
  CHECK(layer_exponent(cfg, 16, 0) == 0.5);
  CHECK(layer_exponent(cfg, 16, 2) == 0.75);
  CHECK(layer_exponent(cfg, 16, 4) == 1.0);
  CHECK(layer_exponent(cfg, 16, 15) == 1.0);
  cfg.peak_layer = 8;
  CHECK(layer_exponent(cfg, 16, 4) == 0.75);
}

TEST_CASE("rank orders") {
  SkewConfig cfg;
  const auto o = layer_rank_order(cfg, 10, 3);
  auto sorted = o;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> ident(10);
  std::iota(ident.begin(), ident.end(), 0);
  CHECK(sorted == ident);
  CHECK(o != layer_rank_order(cfg, 10, 4));
  cfg.rotate_hot_sets = false;
  CHECK(layer_rank_order(cfg, 10, 3) == ident);

  SkewConfig task = SkewConfig{};
  task.task_id = "sql";
  task.task_overlap = 1.0;
  CHECK(layer_rank_order(task, 64, 2) == layer_rank_order(SkewConfig{}, 64, 2));
  task.task_overlap = 0.75;
  const auto moved = layer_rank_order(task, 64, 2);
  const auto base = layer_rank_order(SkewConfig{}, 64, 2);
  int same = 0;
  for (std::size_t i = 0; i < 64; ++i) same += moved[i] == base[i] ? 1 : 0;
  CHECK(same >= 48);
}

TEST_CASE("task family with full overlap and no noise shares hot sets") {
  SkewConfig cfg;
  cfg.gate_noise_sigma = 0.0;
  const std::vector<std::string> tasks{"a", "b", "c"};
  const auto fam = gen_task_family(presets::olmoe(), cfg, tasks, 1.0, 256, 4);
  REQUIRE(fam.size() == 3);
  CHECK(fam[1].dataset_id() == "b");
  CHECK(mean_jaccard(fam[0], fam[1], 16) == 1.0);
  CHECK(mean_jaccard(fam[0], fam[2], 16) == 1.0);
}

TEST_CASE("unrelated hot sets match the hypergeometric baseline") {
  const double expected = hypergeometric_jaccard(64, 16);
  CHECK_THAT(expected, WithinAbs(0.1475, 0.01));
  SkewConfig cfg;
  cfg.base_zipf_exponent = 2.0;
  cfg.gate_noise_sigma = 0.5;
  double sum = 0;
  int pairs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    cfg.hot_set_rotation_seed = seed;
    const std::vector<std::string> tasks{"x", "y"};
    const auto fam = gen_task_family(presets::olmoe(), cfg, tasks, 0.0, 256, seed);
    sum += mean_jaccard(fam[0], fam[1], 16);
    ++pairs;
  }
  // 20 seeds x 16 layers of independent draws: standard error of the mean is about 0.01.
  CHECK_THAT(sum / pairs, WithinAbs(expected, 0.04));
}

TEST_CASE("within-family similarity exceeds cross-family similarity") {
  int wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    SkewConfig fam_a;
    fam_a.hot_set_rotation_seed = 1000 + seed;
    SkewConfig fam_b;
    fam_b.hot_set_rotation_seed = 2000 + seed;
    const std::vector<std::string> tasks{"t1", "t2"};
    const auto a = gen_task_family(presets::olmoe(), fam_a, tasks, 0.8, 1024, seed);
    const auto b = gen_task_family(presets::olmoe(), fam_b, tasks, 0.8, 1024, seed + 100);
    if (mean_jaccard(a[0], a[1], 16) > mean_jaccard(a[0], b[0], 16)) ++wins;
  }
  CHECK(wins == 20);
}

TEST_CASE("configuration validation and parsing") {
  SkewConfig bad;
  bad.depth_amplification = 0.5;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::invalid_argument);
  bad = {};
  bad.gate_noise_sigma = -1.0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { gen_trace(presets::olmoe(), {}, 0, 1); }) == ErrorKind::invalid_argument);
  CHECK(kind_of([] { preset("mixtral-like"); }) == ErrorKind::invalid_argument);

  const auto p = parse_config(R"({"preset": "olmoe-like", "skew": {"gate_noise_sigma": 0.25, "task_id": "code"}})");
  CHECK(p.spec == presets::olmoe());
  CHECK(p.skew.gate_noise_sigma == 0.25);
  CHECK(p.skew.task_id == "code");
  CHECK(p.skew.base_zipf_exponent == preset("olmoe-like").skew.base_zipf_exponent);

  const auto q = parse_config(R"({"spec": {"name": "m", "n_layers": 2, "n_routed": 8, "n_shared": 1, "top_k": 2,
    "expert_ffn_fraction": 0.5}})");
  CHECK(q.spec.n_routed == 8);
  CHECK(kind_of([] { parse_config(R"({"skew": {"bogus": 1}})"); }) == ErrorKind::schema);
  CHECK(kind_of([] { parse_config("[1]"); }) == ErrorKind::schema);
}
