// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

#include "../core/json_util.hpp"
#include "moe_sieve/error.hpp"
#include "moe_sieve/rng.hpp"

namespace moe_sieve::simulator {

namespace {

constexpr std::uint64_t kTaskSalt = 0x7461736b5f696400ULL;

int effective_peak(const SkewConfig& cfg, int n_layers) {
  return cfg.peak_layer >= 0 ? cfg.peak_layer : n_layers / 4;
}

struct LayerModel {
  std::vector<double> affinity;  // by expert identity
};

SampleRecord simulate_sample(const ModelSpec& spec, const SkewConfig& cfg,
                             const std::vector<LayerModel>& layers, std::int64_t n_tokens,
                             std::uint64_t stream_seed, std::string sample_id) {
  const auto E = static_cast<std::size_t>(spec.n_routed);
  const auto L = static_cast<std::size_t>(spec.n_layers);
  const auto K = static_cast<std::size_t>(spec.top_k);
  std::vector<std::int64_t> counts(L * E, 0);
  std::vector<double> mass(L * E, 0.0);
  std::vector<double> logits(E);
  std::vector<double> weight(E);
  std::vector<int> order(E);
  rng::Rng gen(stream_seed);

  for (std::int64_t t = 0; t < n_tokens; ++t) {
    for (std::size_t l = 0; l < L; ++l) {
      const auto& aff = layers[l].affinity;
      double top = -std::numeric_limits<double>::infinity();
      for (std::size_t e = 0; e < E; ++e) {
        logits[e] = aff[e] + (cfg.gate_noise_sigma > 0.0 ? cfg.gate_noise_sigma * gen.normal() : 0.0);
        top = std::max(top, logits[e]);
      }
      double z = 0.0;
      for (std::size_t e = 0; e < E; ++e) {
        weight[e] = std::exp(logits[e] - top);
        z += weight[e];
      }
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(K), order.end(),
                        [&](int a, int b) {
                          const double la = logits[static_cast<std::size_t>(a)];
                          const double lb = logits[static_cast<std::size_t>(b)];
                          return la > lb || (la == lb && a < b);
                        });
      for (std::size_t i = 0; i < K; ++i) {
        const auto e = static_cast<std::size_t>(order[i]);
        counts[l * E + e] += 1;
        mass[l * E + e] += std::min(1.0, weight[e] / z);
      }
    }
  }

  SampleRecord rec;
  rec.sample_id = std::move(sample_id);
  rec.n_tokens = n_tokens;
  for (std::size_t l = 0; l < L; ++l)
    for (std::size_t e = 0; e < E; ++e)
      if (counts[l * E + e] > 0)
        rec.entries.push_back({static_cast<int>(l), static_cast<int>(e), counts[l * E + e], mass[l * E + e]});
  return rec;
}

}  // namespace

void SkewConfig::validate() const {
  if (!std::isfinite(base_zipf_exponent) || base_zipf_exponent < 0.0)
    fail(ErrorKind::invalid_argument, "skew: base_zipf_exponent must be finite and >= 0");
  if (!std::isfinite(depth_amplification) || depth_amplification < 1.0)
    fail(ErrorKind::invalid_argument, "skew: depth_amplification must be >= 1");
  if (peak_layer < -1) fail(ErrorKind::invalid_argument, "skew: peak_layer must be >= -1");
  if (!std::isfinite(gate_noise_sigma) || gate_noise_sigma < 0.0)
    fail(ErrorKind::invalid_argument, "skew: gate_noise_sigma must be finite and >= 0");
  if (!(task_overlap >= 0.0 && task_overlap <= 1.0))
    fail(ErrorKind::invalid_argument, "skew: task_overlap must lie in [0, 1]");
  if (tokens_per_sample < 1) fail(ErrorKind::invalid_argument, "skew: tokens_per_sample must be >= 1");
}

double layer_exponent(const SkewConfig& cfg, int n_layers, int layer) {
  const int peak = effective_peak(cfg, n_layers);
  const double progress = peak <= 0 ? 1.0 : std::min(1.0, static_cast<double>(layer) / peak);
  return cfg.base_zipf_exponent * (1.0 + (cfg.depth_amplification - 1.0) * progress);
}

std::vector<int> layer_rank_order(const SkewConfig& cfg, int n_routed, int layer) {
  std::vector<int> order(static_cast<std::size_t>(n_routed));
  std::iota(order.begin(), order.end(), 0);
  if (cfg.rotate_hot_sets) {
    rng::Rng gen(rng::derive_seed(cfg.hot_set_rotation_seed, static_cast<std::uint64_t>(layer)));
    order = gen.permutation(n_routed);
  }
  if (!cfg.task_id.empty()) {
    const int moved = static_cast<int>(std::lround((1.0 - cfg.task_overlap) * n_routed));
    rng::Rng gen(rng::derive_seed(
        cfg.hot_set_rotation_seed ^ kTaskSalt ^ rng::hash_string(cfg.task_id),
        static_cast<std::uint64_t>(layer)));
    auto positions = gen.sample_without_replacement(n_routed, moved);
    std::sort(positions.begin(), positions.end());
    const auto shuffle = gen.permutation(moved);
    std::vector<int> moved_ids;
    for (int p : positions) moved_ids.push_back(order[static_cast<std::size_t>(p)]);
    for (int i = 0; i < moved; ++i)
      order[static_cast<std::size_t>(positions[static_cast<std::size_t>(i)])] =
          moved_ids[static_cast<std::size_t>(shuffle[static_cast<std::size_t>(i)])];
  }
  return order;
}

RoutingTrace gen_trace(const ModelSpec& spec, const SkewConfig& cfg, std::int64_t n_tokens,
                       std::uint64_t seed, std::string dataset_id, unsigned threads) {
  spec.validate();
  cfg.validate();
  if (n_tokens < 1) fail(ErrorKind::invalid_argument, "simulate: n_tokens must be >= 1");

  std::vector<LayerModel> layers(static_cast<std::size_t>(spec.n_layers));
  for (int l = 0; l < spec.n_layers; ++l) {
    const double s = layer_exponent(cfg, spec.n_layers, l);
    const auto order = layer_rank_order(cfg, spec.n_routed, l);
    auto& aff = layers[static_cast<std::size_t>(l)].affinity;
    aff.assign(static_cast<std::size_t>(spec.n_routed), 0.0);
    for (std::size_t r = 0; r < order.size(); ++r)
      aff[static_cast<std::size_t>(order[r])] = -s * std::log(static_cast<double>(r + 1));
  }

  const std::int64_t per = cfg.tokens_per_sample;
  const auto n_samples = static_cast<std::size_t>((n_tokens + per - 1) / per);
  std::vector<SampleRecord> samples(n_samples);

  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < n_samples; i = next++) {
      try {
        const std::int64_t begin = static_cast<std::int64_t>(i) * per;
        const std::int64_t size = std::min(per, n_tokens - begin);
        samples[i] = simulate_sample(spec, cfg, layers, size, rng::derive_seed(seed, i),
                                     "s" + std::to_string(i));
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  unsigned n_threads = threads ? threads : std::max(1u, std::thread::hardware_concurrency());
  n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, n_samples));
  {
    std::vector<std::jthread> pool;
    for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
    worker();
  }
  if (error) std::rethrow_exception(error);

  return RoutingTrace::from_samples(spec, std::move(dataset_id), std::move(samples));
}

std::vector<RoutingTrace> gen_task_family(const ModelSpec& spec, const SkewConfig& base_cfg,
                                          std::span<const std::string> tasks, double overlap,
                                          std::int64_t n_tokens, std::uint64_t seed) {
  if (tasks.empty()) fail(ErrorKind::invalid_argument, "task family: no tasks");
  if (!(overlap >= 0.0 && overlap <= 1.0))
    fail(ErrorKind::invalid_argument, "task family: overlap must lie in [0, 1]");
  std::vector<RoutingTrace> out;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i].empty()) fail(ErrorKind::invalid_argument, "task family: empty task id");
    SkewConfig cfg = base_cfg;
    cfg.task_id = tasks[i];
    cfg.task_overlap = overlap;
    out.push_back(gen_trace(spec, cfg, n_tokens, rng::derive_seed(seed, i), tasks[i]));
  }
  return out;
}

std::vector<std::string> preset_names() { return {"olmoe-like", "qwen-like", "deepseek-like"}; }

Preset preset(std::string_view name) {
  Preset p;
  p.name = std::string(name);
  if (name == "olmoe-like") {
    p.spec = presets::olmoe();
    p.skew.base_zipf_exponent = 0.25;
    p.skew.depth_amplification = 2.0;
    p.skew.gate_noise_sigma = 1.0;
  } else if (name == "qwen-like") {
    p.spec = presets::qwen();
    p.skew.base_zipf_exponent = 0.10;
    p.skew.depth_amplification = 2.0;
    p.skew.gate_noise_sigma = 1.0;
  } else if (name == "deepseek-like") {
    p.spec = presets::deepseek();
    p.skew.base_zipf_exponent = 0.14;
    p.skew.depth_amplification = 2.0;
    p.skew.gate_noise_sigma = 1.0;
  } else {
    fail(ErrorKind::invalid_argument, "unknown simulator preset '" + std::string(name) + "'");
  }
  return p;
}

Preset parse_config(std::string_view text) {
  using detail::json;
  const json j = detail::parse_json(text, "simulator config");
  if (!j.is_object()) fail(ErrorKind::schema, "simulator config: expected a JSON object");
  detail::reject_unknown_keys(j, {"preset", "model", "spec", "skew"}, "simulator config");

  Preset p;
  p.name = "custom";
  if (auto it = j.find("preset"); it != j.end()) {
    try {
      p = preset(detail::as_string(*it, "simulator config.preset"));
    } catch (const Error& e) {
      fail(ErrorKind::schema, std::string("simulator config: ") + e.what());
    }
  }
  if (j.contains("model") && j.contains("spec"))
    fail(ErrorKind::schema, "simulator config: give either 'model' or 'spec', not both");
  if (auto it = j.find("model"); it != j.end()) {
    try {
      p.spec = presets::by_name(detail::as_string(*it, "simulator config.model"));
    } catch (const Error& e) {
      fail(ErrorKind::schema, std::string("simulator config: ") + e.what());
    }
  }
  if (auto it = j.find("spec"); it != j.end()) p.spec = detail::spec_from_json(*it, "simulator config.spec");
  if (!j.contains("preset") && !j.contains("model") && !j.contains("spec"))
    fail(ErrorKind::schema, "simulator config: one of 'preset', 'model' or 'spec' is required");

  if (auto it = j.find("skew"); it != j.end()) {
    const std::string w = "simulator config.skew";
    if (!it->is_object()) fail(ErrorKind::schema, w + ": expected an object");
    detail::reject_unknown_keys(*it,
                                {"base_zipf_exponent", "depth_amplification", "peak_layer",
                                 "hot_set_rotation_seed", "rotate_hot_sets", "gate_noise_sigma",
                                 "task_id", "task_overlap", "tokens_per_sample"},
                                w);
    auto& s = p.skew;
    const json& o = *it;
    if (o.contains("base_zipf_exponent")) s.base_zipf_exponent = detail::as_number(o["base_zipf_exponent"], w);
    if (o.contains("depth_amplification")) s.depth_amplification = detail::as_number(o["depth_amplification"], w);
    if (o.contains("peak_layer")) s.peak_layer = detail::as_int32(o["peak_layer"], w);
    if (o.contains("hot_set_rotation_seed")) {
      const auto& v = o["hot_set_rotation_seed"];
      if (!v.is_number_unsigned()) fail(ErrorKind::schema, w + ".hot_set_rotation_seed: expected an unsigned integer");
      s.hot_set_rotation_seed = v.get<std::uint64_t>();
    }
    if (o.contains("rotate_hot_sets")) {
      if (!o["rotate_hot_sets"].is_boolean()) fail(ErrorKind::schema, w + ".rotate_hot_sets: expected a boolean");
      s.rotate_hot_sets = o["rotate_hot_sets"].get<bool>();
    }
    if (o.contains("gate_noise_sigma")) s.gate_noise_sigma = detail::as_number(o["gate_noise_sigma"], w);
    if (o.contains("task_id")) s.task_id = detail::as_string(o["task_id"], w);
    if (o.contains("task_overlap")) s.task_overlap = detail::as_number(o["task_overlap"], w);
    if (o.contains("tokens_per_sample")) s.tokens_per_sample = detail::as_int32(o["tokens_per_sample"], w);
  }
  try {
    p.skew.validate();
  } catch (const Error& e) {
    fail(ErrorKind::schema, std::string("simulator config: ") + e.what());
  }
  return p;
}

Preset load_config(const std::filesystem::path& path) { return parse_config(read_file(path)); }

}  // namespace moe_sieve::simulator
