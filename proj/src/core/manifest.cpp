// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <algorithm>
#include <cmath>

#include "json_util.hpp"
#include "moe_sieve/core.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve {

using detail::json;

void SelectionManifest::validate() const {
  spec.validate();
  if (per_layer_experts.size() != static_cast<std::size_t>(spec.n_layers))
    fail(ErrorKind::schema, "manifest: expected " + std::to_string(spec.n_layers) +
                                " layer lists, got " + std::to_string(per_layer_experts.size()));
  std::int64_t total = 0;
  for (std::size_t l = 0; l < per_layer_experts.size(); ++l) {
    const auto& experts = per_layer_experts[l];
    const std::string where = "manifest: layer " + std::to_string(l);
    for (std::size_t i = 0; i < experts.size(); ++i) {
      if (experts[i] < 0 || experts[i] >= spec.n_routed)
        fail(ErrorKind::schema, where + ": expert index " + std::to_string(experts[i]) +
                                    " out of range [0, " + std::to_string(spec.n_routed) + ")");
      if (i > 0 && experts[i] == experts[i - 1])
        fail(ErrorKind::schema, where + ": duplicate expert index " + std::to_string(experts[i]));
      if (i > 0 && experts[i] < experts[i - 1])
        fail(ErrorKind::schema, where + ": expert indices not sorted ascending");
    }
    total += static_cast<std::int64_t>(experts.size());
  }
  if (total != budget_total)
    fail(ErrorKind::schema, "manifest: budget_total " + std::to_string(budget_total) +
                                " != sum of layer sizes " + std::to_string(total));
}

std::string serialize_manifest(const SelectionManifest& m) {
  m.validate();
  json params = json::object();
  if (m.params.k) params["k"] = *m.params.k;
  if (m.params.fraction) params["fraction"] = *m.params.fraction;
  if (m.params.budget) params["budget"] = *m.params.budget;
  if (m.params.tau) params["tau"] = *m.params.tau;

  json j{{"version", SelectionManifest::kVersion},
         {"spec", detail::spec_to_json(m.spec)},
         {"dataset_id", m.dataset_id},
         {"strategy", to_string(m.strategy)},
         {"signal", to_string(m.signal)},
         {"per_layer_experts", m.per_layer_experts},
         {"budget_total", m.budget_total},
         {"seed", m.seed ? json(*m.seed) : json(nullptr)},
         {"profile_digest", m.profile_digest},
         {"params", std::move(params)}};
  return j.dump(2) + "\n";
}

SelectionManifest parse_manifest(std::string_view text) {
  const json j = detail::parse_json(text, "manifest");
  if (!j.is_object()) fail(ErrorKind::schema, "manifest: expected a JSON object");
  detail::reject_unknown_keys(j,
                              {"version", "spec", "dataset_id", "strategy", "signal",
                               "per_layer_experts", "budget_total", "seed", "profile_digest", "params"},
                              "manifest");
  const auto version = detail::as_string(detail::require(j, "version", "manifest"), "manifest.version");
  if (version != SelectionManifest::kVersion)
    fail(ErrorKind::schema, "manifest: unsupported version '" + version + "'");

  SelectionManifest m;
  m.spec = detail::spec_from_json(detail::require(j, "spec", "manifest"), "manifest.spec");
  m.dataset_id = detail::as_string(detail::require(j, "dataset_id", "manifest"), "manifest.dataset_id");
  try {
    m.strategy = parse_strategy(detail::as_string(detail::require(j, "strategy", "manifest"), "manifest.strategy"));
    m.signal = parse_signal(detail::as_string(detail::require(j, "signal", "manifest"), "manifest.signal"));
  } catch (const Error& e) {
    fail(ErrorKind::schema, std::string("manifest: ") + e.what());
  }

  const auto& layers = detail::require(j, "per_layer_experts", "manifest");
  if (!layers.is_array()) fail(ErrorKind::schema, "manifest.per_layer_experts: expected an array");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string where = "manifest.per_layer_experts[" + std::to_string(l) + "]";
    if (!layers[l].is_array()) fail(ErrorKind::schema, where + ": expected an array");
    std::vector<int> experts;
    for (std::size_t i = 0; i < layers[l].size(); ++i)
      experts.push_back(detail::as_int32(layers[l][i], where + "[" + std::to_string(i) + "]"));
    m.per_layer_experts.push_back(std::move(experts));
  }
  m.budget_total = detail::as_int(detail::require(j, "budget_total", "manifest"), "manifest.budget_total");

  const auto& seed = detail::require(j, "seed", "manifest");
  if (!seed.is_null()) {
    if (!seed.is_number_integer() || (seed.is_number_integer() && !seed.is_number_unsigned() &&
                                      seed.get<std::int64_t>() < 0))
      fail(ErrorKind::schema, "manifest.seed: expected a non-negative integer or null");
    m.seed = seed.get<std::uint64_t>();
  }
  m.profile_digest =
      detail::as_string(detail::require(j, "profile_digest", "manifest"), "manifest.profile_digest");

  const auto& params = detail::require(j, "params", "manifest");
  if (!params.is_object()) fail(ErrorKind::schema, "manifest.params: expected an object");
  detail::reject_unknown_keys(params, {"k", "fraction", "budget", "tau"}, "manifest.params");
  if (auto it = params.find("k"); it != params.end()) m.params.k = detail::as_int32(*it, "manifest.params.k");
  if (auto it = params.find("fraction"); it != params.end())
    m.params.fraction = detail::as_number(*it, "manifest.params.fraction");
  if (auto it = params.find("budget"); it != params.end())
    m.params.budget = detail::as_int32(*it, "manifest.params.budget");
  if (auto it = params.find("tau"); it != params.end()) m.params.tau = detail::as_number(*it, "manifest.params.tau");

  m.validate();
  return m;
}

SelectionManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path));
}

void save_manifest(const SelectionManifest& m, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_manifest(m));
}

}  // namespace moe_sieve
