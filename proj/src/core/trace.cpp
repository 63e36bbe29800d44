// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json_util.hpp"
#include "moe_sieve/core.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve {

using detail::json;

namespace {

std::string cell(int layer, int expert) {
  return "layer " + std::to_string(layer) + " expert " + std::to_string(expert);
}

void validate_samples(const ModelSpec& spec, std::int64_t n_tokens,
                      std::span<const std::int64_t> counts, std::span<const double> mass,
                      std::span<const SampleRecord> samples) {
  const auto cells = counts.size();
  std::vector<std::int64_t> count_sum(cells, 0);
  std::vector<double> mass_sum(cells, 0.0);
  std::int64_t token_sum = 0;
  std::set<std::string> ids;
  std::vector<std::int64_t> row(static_cast<std::size_t>(spec.n_layers));

  for (std::size_t s = 0; s < samples.size(); ++s) {
    const auto& rec = samples[s];
    const std::string where = "sample " + std::to_string(s) + " ('" + rec.sample_id + "')";
    if (!ids.insert(rec.sample_id).second) fail(ErrorKind::schema, where + ": duplicate sample_id");
    if (rec.n_tokens < 1) fail(ErrorKind::schema, where + ": n_tokens must be >= 1");
    token_sum += rec.n_tokens;
    std::fill(row.begin(), row.end(), 0);
    std::set<std::pair<int, int>> seen;
    for (const auto& e : rec.entries) {
      if (e.layer < 0 || e.layer >= spec.n_layers || e.expert < 0 || e.expert >= spec.n_routed)
        fail(ErrorKind::schema, where + ": index out of range at " + cell(e.layer, e.expert));
      if (!seen.insert({e.layer, e.expert}).second)
        fail(ErrorKind::schema, where + ": duplicate entry at " + cell(e.layer, e.expert));
      if (e.count < 1) fail(ErrorKind::schema, where + ": count < 1 at " + cell(e.layer, e.expert));
      if (!std::isfinite(e.mass) || e.mass < 0.0)
        fail(ErrorKind::schema, where + ": invalid mass at " + cell(e.layer, e.expert));
      if (e.mass > static_cast<double>(e.count))
        fail(ErrorKind::schema, where + ": mass exceeds count at " + cell(e.layer, e.expert));
      const auto idx = static_cast<std::size_t>(e.layer) * static_cast<std::size_t>(spec.n_routed) +
                       static_cast<std::size_t>(e.expert);
      count_sum[idx] += e.count;
      mass_sum[idx] += e.mass;
      row[static_cast<std::size_t>(e.layer)] += e.count;
    }
    for (int l = 0; l < spec.n_layers; ++l) {
      if (row[static_cast<std::size_t>(l)] != rec.n_tokens * spec.top_k)
        fail(ErrorKind::schema, where + ": layer " + std::to_string(l) + " count sum " +
                                    std::to_string(row[static_cast<std::size_t>(l)]) +
                                    " != n_tokens * top_k = " +
                                    std::to_string(rec.n_tokens * spec.top_k));
    }
  }
  if (token_sum != n_tokens)
    fail(ErrorKind::schema, "samples: token total " + std::to_string(token_sum) +
                                " != trace n_tokens " + std::to_string(n_tokens));
  for (std::size_t i = 0; i < cells; ++i) {
    const int l = static_cast<int>(i / static_cast<std::size_t>(spec.n_routed));
    const int e = static_cast<int>(i % static_cast<std::size_t>(spec.n_routed));
    if (count_sum[i] != counts[i])
      fail(ErrorKind::schema, "samples: count total differs from trace at " + cell(l, e));
    if (std::abs(mass_sum[i] - mass[i]) > 1e-9 * std::max(1.0, std::abs(mass[i])))
      fail(ErrorKind::schema, "samples: mass total differs from trace at " + cell(l, e));
  }
}

std::string hex(const unsigned char* data, unsigned len) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::internal, "sha256 digest failed");
  return hex(md, len);
}

json matrix_json(std::span<const std::int64_t> v, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r)
    out.push_back(std::vector<std::int64_t>(v.begin() + r * cols, v.begin() + (r + 1) * cols));
  return out;
}

json matrix_json(std::span<const double> v, int rows, int cols) {
  json out = json::array();
  for (int r = 0; r < rows; ++r)
    out.push_back(std::vector<double>(v.begin() + r * cols, v.begin() + (r + 1) * cols));
  return out;
}

SampleRecord sample_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::schema, where + ": expected an object");
  detail::reject_unknown_keys(j, {"sample_id", "n_tokens", "entries"}, where);
  SampleRecord rec;
  rec.sample_id = detail::as_string(detail::require(j, "sample_id", where), where + ".sample_id");
  rec.n_tokens = detail::as_int(detail::require(j, "n_tokens", where), where + ".n_tokens");
  const auto& entries = detail::require(j, "entries", where);
  if (!entries.is_array()) fail(ErrorKind::schema, where + ".entries: expected an array");
  rec.entries.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const std::string ew = where + ".entries[" + std::to_string(i) + "]";
    if (!e.is_array() || e.size() != 4)
      fail(ErrorKind::schema, ew + ": expected [layer, expert, count, mass]");
    rec.entries.push_back({detail::as_int32(e[0], ew + "[0]"), detail::as_int32(e[1], ew + "[1]"),
                           detail::as_int(e[2], ew + "[2]"), detail::as_number(e[3], ew + "[3]")});
  }
  return rec;
}

}  // namespace

RoutingTrace::RoutingTrace(ModelSpec spec, std::string dataset_id, std::int64_t n_tokens,
                           std::vector<std::int64_t> counts, std::vector<double> mass,
                           std::optional<std::vector<SampleRecord>> samples,
                           std::string metadata_json)
    : spec_(std::move(spec)),
      dataset_id_(std::move(dataset_id)),
      n_tokens_(n_tokens),
      counts_(std::move(counts)),
      mass_(std::move(mass)),
      samples_(std::move(samples)),
      metadata_json_(std::move(metadata_json)) {
  spec_.validate();
  if (n_tokens_ < 0) fail(ErrorKind::schema, "trace: n_tokens must be >= 0");
  const auto cells = static_cast<std::size_t>(spec_.n_layers) * static_cast<std::size_t>(spec_.n_routed);
  if (counts_.size() != cells) fail(ErrorKind::schema, "trace: counts shape does not match spec");
  if (mass_.size() != cells) fail(ErrorKind::schema, "trace: mass shape does not match spec");
  const std::int64_t expected_row = n_tokens_ * spec_.top_k;
  for (int l = 0; l < spec_.n_layers; ++l) {
    std::int64_t row = 0;
    for (int e = 0; e < spec_.n_routed; ++e) {
      const auto c = counts_[index(l, e)];
      const auto m = mass_[index(l, e)];
      if (c < 0) fail(ErrorKind::schema, "trace: negative count at " + cell(l, e));
      if (!std::isfinite(m) || m < 0.0)
        fail(ErrorKind::schema, "trace: mass must be finite and >= 0 at " + cell(l, e));
      if (m > static_cast<double>(c))
        fail(ErrorKind::schema, "trace: mass exceeds count at " + cell(l, e));
      row += c;
    }
    if (row != expected_row)
      fail(ErrorKind::schema, "trace: layer " + std::to_string(l) + " count sum " +
                                  std::to_string(row) + " != n_tokens * top_k = " +
                                  std::to_string(expected_row));
  }
  if (samples_) validate_samples(spec_, n_tokens_, counts_, mass_, *samples_);
}

RoutingTrace RoutingTrace::from_samples(ModelSpec spec, std::string dataset_id,
                                        std::vector<SampleRecord> samples) {
  spec.validate();
  const auto cells = static_cast<std::size_t>(spec.n_layers) * static_cast<std::size_t>(spec.n_routed);
  std::vector<std::int64_t> counts(cells, 0);
  std::vector<double> mass(cells, 0.0);
  std::int64_t n_tokens = 0;
  for (const auto& rec : samples) {
    n_tokens += rec.n_tokens;
    for (const auto& e : rec.entries) {
      if (e.layer < 0 || e.layer >= spec.n_layers || e.expert < 0 || e.expert >= spec.n_routed)
        fail(ErrorKind::schema, "sample '" + rec.sample_id + "': index out of range at " +
                                    cell(e.layer, e.expert));
      const auto idx = static_cast<std::size_t>(e.layer) * static_cast<std::size_t>(spec.n_routed) +
                       static_cast<std::size_t>(e.expert);
      counts[idx] += e.count;
      mass[idx] += e.mass;
    }
  }
  return RoutingTrace(std::move(spec), std::move(dataset_id), n_tokens, std::move(counts),
                      std::move(mass), std::move(samples));
}

std::span<const std::int64_t> RoutingTrace::counts_row(int layer) const {
  if (layer < 0 || layer >= spec_.n_layers)
    fail(ErrorKind::invalid_argument, "layer " + std::to_string(layer) + " out of range");
  return std::span<const std::int64_t>(counts_).subspan(index(layer, 0),
                                                        static_cast<std::size_t>(spec_.n_routed));
}

std::span<const double> RoutingTrace::mass_row(int layer) const {
  if (layer < 0 || layer >= spec_.n_layers)
    fail(ErrorKind::invalid_argument, "layer " + std::to_string(layer) + " out of range");
  return std::span<const double>(mass_).subspan(index(layer, 0),
                                                static_cast<std::size_t>(spec_.n_routed));
}

std::span<const SampleRecord> RoutingTrace::samples() const noexcept {
  if (!samples_) return {};
  return *samples_;
}

std::string RoutingTrace::digest() const {
  const json canonical{{"spec", detail::spec_to_json(spec_)},
                       {"counts", matrix_json(counts_, spec_.n_layers, spec_.n_routed)},
                       {"mass", matrix_json(mass_, spec_.n_layers, spec_.n_routed)}};
  return "sha256:" + sha256_hex(canonical.dump());
}

RoutingTrace parse_trace(std::string_view json_text, std::optional<std::string_view> samples_text) {
  const json j = detail::parse_json(json_text, "trace");
  if (!j.is_object()) fail(ErrorKind::schema, "trace: expected a JSON object");
  detail::reject_unknown_keys(j, {"spec", "dataset_id", "n_tokens", "counts", "mass", "metadata"},
                              "trace");
  ModelSpec spec = detail::spec_from_json(detail::require(j, "spec", "trace"), "trace.spec");
  std::string dataset_id = detail::as_string(detail::require(j, "dataset_id", "trace"), "trace.dataset_id");
  const std::int64_t n_tokens = detail::as_int(detail::require(j, "n_tokens", "trace"), "trace.n_tokens");

  const auto& cj = detail::require(j, "counts", "trace");
  const auto& mj = detail::require(j, "mass", "trace");
  if (!cj.is_array() || cj.size() != static_cast<std::size_t>(spec.n_layers))
    fail(ErrorKind::schema, "trace.counts: expected " + std::to_string(spec.n_layers) + " rows");
  if (!mj.is_array() || mj.size() != static_cast<std::size_t>(spec.n_layers))
    fail(ErrorKind::schema, "trace.mass: expected " + std::to_string(spec.n_layers) + " rows");
  std::vector<std::int64_t> counts;
  std::vector<double> mass;
  counts.reserve(static_cast<std::size_t>(spec.n_layers * spec.n_routed));
  mass.reserve(counts.capacity());
  for (int l = 0; l < spec.n_layers; ++l) {
    const auto& crow = cj[static_cast<std::size_t>(l)];
    const auto& mrow = mj[static_cast<std::size_t>(l)];
    if (!crow.is_array() || crow.size() != static_cast<std::size_t>(spec.n_routed))
      fail(ErrorKind::schema, "trace.counts[" + std::to_string(l) + "]: expected " +
                                  std::to_string(spec.n_routed) + " entries");
    if (!mrow.is_array() || mrow.size() != static_cast<std::size_t>(spec.n_routed))
      fail(ErrorKind::schema, "trace.mass[" + std::to_string(l) + "]: expected " +
                                  std::to_string(spec.n_routed) + " entries");
    for (int e = 0; e < spec.n_routed; ++e) {
      const std::string at = "[" + std::to_string(l) + "][" + std::to_string(e) + "]";
      counts.push_back(detail::as_int(crow[static_cast<std::size_t>(e)], "trace.counts" + at));
      mass.push_back(detail::as_number(mrow[static_cast<std::size_t>(e)], "trace.mass" + at));
    }
  }

  std::string metadata;
  if (auto it = j.find("metadata"); it != j.end()) {
    if (!it->is_object()) fail(ErrorKind::schema, "trace.metadata: expected an object");
    metadata = it->dump();
  }

  std::optional<std::vector<SampleRecord>> samples;
  if (samples_text) {
    samples.emplace();
    std::istringstream lines{std::string(*samples_text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(lines, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const std::string where = "samples line " + std::to_string(lineno);
      samples->push_back(sample_from_json(detail::parse_json(line, where), where));
    }
  }
  return RoutingTrace(std::move(spec), std::move(dataset_id), n_tokens, std::move(counts),
                      std::move(mass), std::move(samples), std::move(metadata));
}

RoutingTrace load_trace(const std::filesystem::path& path,
                        const std::optional<std::filesystem::path>& samples_path) {
  const std::string text = read_file(path);
  if (!samples_path) return parse_trace(text);
  const std::string samples = read_file(*samples_path);
  return parse_trace(text, samples);
}

std::string serialize_trace(const RoutingTrace& trace) {
  json j{{"spec", detail::spec_to_json(trace.spec())},
         {"dataset_id", trace.dataset_id()},
         {"n_tokens", trace.n_tokens()},
         {"counts", matrix_json(trace.counts(), trace.n_layers(), trace.n_routed())},
         {"mass", matrix_json(trace.mass(), trace.n_layers(), trace.n_routed())}};
  if (!trace.metadata_json().empty()) j["metadata"] = json::parse(trace.metadata_json());
  return j.dump() + "\n";
}

std::string serialize_samples(std::span<const SampleRecord> samples) {
  std::string out;
  for (const auto& rec : samples) {
    json entries = json::array();
    for (const auto& e : rec.entries) entries.push_back(json::array({e.layer, e.expert, e.count, e.mass}));
    const json line{{"sample_id", rec.sample_id}, {"n_tokens", rec.n_tokens}, {"entries", std::move(entries)}};
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_trace(const RoutingTrace& trace, const std::filesystem::path& path,
                const std::optional<std::filesystem::path>& samples_path) {
  if (samples_path) {
    if (!trace.has_samples()) fail(ErrorKind::invalid_argument, "trace has no samples to save");
    write_file_atomic(*samples_path, serialize_samples(trace.samples()));
  }
  write_file_atomic(path, serialize_trace(trace));
}

}  // namespace moe_sieve
