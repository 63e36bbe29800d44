// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// CSV / Markdown / JSON rendering of every report. Output is byte-stable:
// numbers use fixed precision and rows keep input order.

#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "moe_sieve/core.hpp"
#include "moe_sieve/equivalence.hpp"
#include "moe_sieve/selection.hpp"
#include "moe_sieve/stability.hpp"
#include "moe_sieve/stats.hpp"

namespace moe_sieve::report {

enum class Format { csv, markdown, json };

Format parse_format(std::string_view s);  // "csv", "md"/"markdown", "json"

/// Minimal table model shared by the CSV and Markdown writers.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::string to_csv(const Table& t);
std::string to_markdown(const Table& t);

/// Fixed-point number with the given decimals; "nan"/"inf" for non-finite.
std::string fixed(double v, int decimals);
/// Compact p-value: "<.001" below 0.001, else three decimals without the leading zero.
std::string p_value(double p);

/// Per-layer CV, cold fraction, coverage at k and entropy.
std::string layer_table(const RoutingTrace& trace, const stats::ProfileReport& r, Format f);

struct ImbalanceRow {
  std::string model;
  std::string dataset;
  stats::ProfileReport profile;
};

/// One row per (model, dataset), followed by a per-model mean row whenever a
/// model has more than one dataset.
std::string imbalance_table(const std::vector<ImbalanceRow>& rows, Format f);

/// Per-layer k and coverage of a manifest, plus the budget total.
std::string manifest_summary(const SelectionManifest& m, const std::vector<double>& coverage, Format f);

std::string signal_comparison(const selection::SignalComparison& c, Format f);

std::string similarity_matrix(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& matrix, Format f);

std::string stability_table(const std::vector<stability::StabilityReport>& reports, Format f);

struct EquivalenceRow {
  std::string model;
  std::string task;
  std::string treatment;
  std::string reference;
  equivalence::EquivalenceReport report;
};

/// Means, paired delta and CI, equivalence at the headline margin
/// (2 pp when tested, else the first margin).
std::string equivalence_table(const std::vector<EquivalenceRow>& rows, Format f);
/// Per-margin TOST p-values and verdicts plus the paired t-test p.
std::string tost_table(const std::vector<EquivalenceRow>& rows, Format f);
/// Seed standard deviations and their ratio.
std::string variance_table(const std::vector<EquivalenceRow>& rows, Format f);
/// Markdown: the three tables above; CSV: one wide row per cell; JSON: all fields.
std::string equivalence_full(const std::vector<EquivalenceRow>& rows, Format f);

std::string adapter_cost(const AdapterCostInput& in, const AdapterCost& cost, Format f);

}  // namespace moe_sieve::report
