// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// Paired seed-level comparison of two fine-tuning conditions. Values are in
// accuracy units (0.01 == 1 percentage point); only formatting scales to pp.
// Standard deviations are sample std (n - 1).

#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace moe_sieve::equivalence {

/// An equivalence margin in percentage points.
struct Pp {
  double value = 0.0;
  constexpr double accuracy() const { return value / 100.0; }
};

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);

struct DeltaCi {
  double delta = 0.0;
  double low = 0.0;
  double high = 0.0;
};

/// mean(a - b) with a Student-t confidence interval of level conf.
DeltaCi paired_delta_ci(std::span<const double> a, std::span<const double> b, double conf = 0.95);

struct TostResult {
  double epsilon_pp = 0.0;
  double p_lower = 1.0;  // H0: mu_d <= -epsilon
  double p_upper = 1.0;  // H0: mu_d >= +epsilon
  bool established = false;

  double p() const { return p_lower > p_upper ? p_lower : p_upper; }
};

/// Two one-sided paired t-tests of H0: |mu_d| >= epsilon.
TostResult tost(std::span<const double> a, std::span<const double> b, Pp epsilon, double alpha = 0.05);

/// Two-sided paired t-test p-value.
double paired_ttest(std::span<const double> a, std::span<const double> b);

/// sample_std(a) / sample_std(b); throws domain when std(b) == 0.
double std_ratio(std::span<const double> a, std::span<const double> b);

struct EquivalenceReport {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double std_a = 0.0;
  double std_b = 0.0;
  double delta = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double conf = 0.95;
  double ttest_p = 1.0;
  double alpha = 0.05;
  std::vector<TostResult> tost;
  double std_ratio = 0.0;  // NaN when std_b == 0
  int n = 0;
};

EquivalenceReport compare(std::span<const double> a, std::span<const double> b,
                          std::span<const double> margins_pp, double alpha = 0.05, double conf = 0.95);

/// Per-seed accuracies of every condition for one (model, task) cell,
/// aligned by seed.
struct SeedResultTable {
  std::string model;
  std::string task;
  std::vector<long long> seeds;  // ascending
  std::map<std::string, std::vector<double>> conditions;

  const std::vector<double>& condition(std::string_view name) const;
};

/// Parses "model,task,condition,seed,accuracy" CSV into one table per
/// (model, task), in order of first appearance.
std::vector<SeedResultTable> parse_seed_csv(std::string_view text);
std::vector<SeedResultTable> load_seed_csv(const std::filesystem::path& path);

}  // namespace moe_sieve::equivalence
