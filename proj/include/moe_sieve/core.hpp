// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// Domain types shared by every module: model architecture, routing traces,
// selection manifests, and adapter cost estimation.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moe_sieve {

/// Architecture of one MoE model. Experts are layer-local and 0-indexed.
struct ModelSpec {
  std::string name;
  int n_layers = 1;
  int n_routed = 1;
  int n_shared = 0;
  int top_k = 1;
  double expert_ffn_fraction = 1.0;

  /// Throws Error(schema) when the invariants do not hold.
  void validate() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

namespace presets {
ModelSpec olmoe();     // OLMoE-1B-7B: 16 layers, 64 routed, top-8
ModelSpec qwen();      // Qwen1.5-MoE-A2.7B: 24 layers, 60 routed + 4 shared, top-4
ModelSpec deepseek();  // DeepSeek-MoE-16B: 27 layers, 64 routed + 2 shared, top-6
/// Looks up "olmoe", "qwen" or "deepseek"; throws invalid_argument otherwise.
ModelSpec by_name(std::string_view name);
}  // namespace presets

enum class Signal { counts, mass };

std::string_view to_string(Signal s);
Signal parse_signal(std::string_view s);

struct SampleEntry {
  int layer = 0;
  int expert = 0;
  std::int64_t count = 0;
  double mass = 0.0;

  friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

/// Routing events of one calibration sample, stored sparsely.
struct SampleRecord {
  std::string sample_id;
  std::int64_t n_tokens = 0;
  std::vector<SampleEntry> entries;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

/// Per-layer x per-expert activation counts and routing mass for one
/// (model, dataset) pair. Immutable once constructed; the constructor
/// enforces every invariant.
class RoutingTrace {
 public:
  /// counts and mass are row-major [n_layers x n_routed].
  RoutingTrace(ModelSpec spec, std::string dataset_id, std::int64_t n_tokens,
               std::vector<std::int64_t> counts, std::vector<double> mass,
               std::optional<std::vector<SampleRecord>> samples = std::nullopt,
               std::string metadata_json = {});

  /// Sums the given samples into a trace; each sample must be valid for spec.
  static RoutingTrace from_samples(ModelSpec spec, std::string dataset_id,
                                   std::vector<SampleRecord> samples);

  const ModelSpec& spec() const noexcept { return spec_; }
  const std::string& dataset_id() const noexcept { return dataset_id_; }
  std::int64_t n_tokens() const noexcept { return n_tokens_; }
  int n_layers() const noexcept { return spec_.n_layers; }
  int n_routed() const noexcept { return spec_.n_routed; }

  std::span<const std::int64_t> counts_row(int layer) const;
  std::span<const double> mass_row(int layer) const;
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  std::span<const double> mass() const noexcept { return mass_; }

  std::int64_t count(int layer, int expert) const {
    return counts_[index(layer, expert)];
  }
  double mass(int layer, int expert) const { return mass_[index(layer, expert)]; }

  bool has_samples() const noexcept { return samples_.has_value(); }
  /// Empty span when no samples are attached.
  std::span<const SampleRecord> samples() const noexcept;

  /// Free-form capture metadata as a JSON object text; empty when absent.
  /// Carried through save/load, excluded from the digest.
  const std::string& metadata_json() const noexcept { return metadata_json_; }

  /// "sha256:<hex>" over the canonical serialization of spec, counts and mass.
  std::string digest() const;

 private:
  std::size_t index(int layer, int expert) const {
    return static_cast<std::size_t>(layer) * static_cast<std::size_t>(spec_.n_routed) +
           static_cast<std::size_t>(expert);
  }

  ModelSpec spec_;
  std::string dataset_id_;
  std::int64_t n_tokens_;
  std::vector<std::int64_t> counts_;
  std::vector<double> mass_;
  std::optional<std::vector<SampleRecord>> samples_;
  std::string metadata_json_;
};

/// Reads a trace file and, when given, the line-delimited samples sidecar.
RoutingTrace load_trace(const std::filesystem::path& path,
                        const std::optional<std::filesystem::path>& samples_path = std::nullopt);
/// Parses trace JSON text (same schema as load_trace).
RoutingTrace parse_trace(std::string_view json_text,
                         std::optional<std::string_view> samples_text = std::nullopt);

void save_trace(const RoutingTrace& trace, const std::filesystem::path& path,
                const std::optional<std::filesystem::path>& samples_path = std::nullopt);
std::string serialize_trace(const RoutingTrace& trace);
std::string serialize_samples(std::span<const SampleRecord> samples);

enum class Strategy { uniform_topk, greedy, coverage_threshold, random };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

/// Parameters a strategy was run with; unset fields do not apply.
struct StrategyParams {
  std::optional<int> k;
  std::optional<double> fraction;
  std::optional<int> budget;
  std::optional<double> tau;

  friend bool operator==(const StrategyParams&, const StrategyParams&) = default;
};

struct SelectionManifest {
  static constexpr std::string_view kVersion = "moe-sieve-manifest/1";

  ModelSpec spec;
  std::string dataset_id;
  Strategy strategy = Strategy::uniform_topk;
  Signal signal = Signal::counts;
  std::vector<std::vector<int>> per_layer_experts;
  std::int64_t budget_total = 0;
  std::optional<std::uint64_t> seed;
  std::string profile_digest;
  StrategyParams params;

  /// Throws Error(schema) on out-of-range or duplicate indices, unsorted
  /// layers, a layer count mismatch, or a wrong budget_total.
  void validate() const;

  friend bool operator==(const SelectionManifest&, const SelectionManifest&) = default;
};

SelectionManifest load_manifest(const std::filesystem::path& path);
SelectionManifest parse_manifest(std::string_view json_text);
void save_manifest(const SelectionManifest& manifest, const std::filesystem::path& path);
std::string serialize_manifest(const SelectionManifest& manifest);

struct AdapterCostInput {
  double always_on_params = 0.0;    // attention + router + shared-expert adapters
  double expert_params_full = 0.0;  // adapters on every routed expert
  double selected_fraction = 1.0;
};

struct AdapterCost {
  double trainable_params = 0.0;
  double reduction_vs_full = 0.0;
};

AdapterCost estimate_adapter_cost(const AdapterCostInput& input);

/// Writes text to a sibling temp file and renames it over path.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

}  // namespace moe_sieve
