// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/report.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "../core/json_util.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve::report {

using detail::json;

namespace {

std::string pct(double fraction, int decimals) { return fixed(100.0 * fraction, decimals); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string render(const Table& t, Format f) {
  return f == Format::csv ? to_csv(t) : to_markdown(t);
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

const equivalence::TostResult* headline(const equivalence::EquivalenceReport& r) {
  for (const auto& t : r.tost)
    if (t.epsilon_pp == 2.0) return &t;
  return r.tost.empty() ? nullptr : &r.tost.front();
}

std::string margin_label(double pp) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", pp);
  return buf;
}

std::string mean_std(double mean, double sd) {
  // ".396 ± .026"
  auto strip = [](std::string s) {
    if (s.rfind("0.", 0) == 0) s.erase(0, 1);
    return s;
  };
  return strip(fixed(mean, 3)) + " ± " + strip(fixed(sd, 3));
}

json tost_json(const equivalence::TostResult& t) {
  return {{"epsilon_pp", t.epsilon_pp},
          {"p_lower", num(t.p_lower)},
          {"p_upper", num(t.p_upper)},
          {"p", num(t.p())},
          {"established", t.established}};
}

json equivalence_json(const EquivalenceRow& row) {
  const auto& r = row.report;
  json tost = json::array();
  for (const auto& t : r.tost) tost.push_back(tost_json(t));
  return {{"model", row.model},
          {"task", row.task},
          {"treatment", row.treatment},
          {"reference", row.reference},
          {"n", r.n},
          {"mean_treatment", num(r.mean_a)},
          {"mean_reference", num(r.mean_b)},
          {"std_treatment", num(r.std_a)},
          {"std_reference", num(r.std_b)},
          {"delta_pp", num(100.0 * r.delta)},
          {"ci_low_pp", num(100.0 * r.ci_low)},
          {"ci_high_pp", num(100.0 * r.ci_high)},
          {"conf", r.conf},
          {"alpha", r.alpha},
          {"ttest_p", num(r.ttest_p)},
          {"tost", std::move(tost)},
          {"std_ratio", num(r.std_ratio)}};
}

}  // namespace

Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "md" || s == "markdown") return Format::markdown;
  if (s == "json") return Format::json;
  fail(ErrorKind::invalid_argument, "unknown format '" + std::string(s) + "'");
}

std::string fixed(double v, int decimals) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  // Avoid "-0.000".
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

std::string p_value(double p) {
  if (std::isnan(p)) return "nan";
  if (p < 0.001) return "<.001";
  std::string s = fixed(p, 3);
  if (s.rfind("0.", 0) == 0) s.erase(0, 1);
  return s;
}

std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += csv_field(cells[i]);
    }
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

std::string to_markdown(const Table& t) {
  std::string out;
  auto line = [&out](const std::vector<std::string>& cells) {
    out += '|';
    for (const auto& c : cells) out += ' ' + c + " |";
    out += '\n';
  };
  line(t.header);
  out += '|';
  for (std::size_t i = 0; i < t.header.size(); ++i) out += i == 0 ? "---|" : "---:|";
  out += '\n';
  for (const auto& r : t.rows) line(r);
  return out;
}

std::string layer_table(const RoutingTrace& trace, const stats::ProfileReport& r, Format f) {
  if (f == Format::json) {
    json layers = json::array();
    for (const auto& s : r.per_layer)
      layers.push_back({{"layer", s.layer},
                        {"cv", num(s.cv)},
                        {"cold_fraction", num(s.cold_fraction)},
                        {"coverage_at_k", num(s.coverage_at_k)},
                        {"norm_entropy", num(s.norm_entropy)}});
    return dump({{"model", trace.spec().name},
                 {"dataset_id", trace.dataset_id()},
                 {"k", r.k},
                 {"per_layer", std::move(layers)},
                 {"global_cv", num(r.global_cv)},
                 {"mean_layer_cv", num(r.mean_layer_cv)},
                 {"cv_ratio", num(r.cv_ratio)},
                 {"mean_cold_fraction", num(r.mean_cold_fraction)},
                 {"mean_coverage_at_k", num(r.mean_coverage_at_k)},
                 {"shared_adjusted_coverage", num(r.shared_adjusted_coverage)}});
  }
  Table t;
  t.header = {"Layer", "CV", "Cold%", "Top-" + std::to_string(r.k) + " Cov%", "Norm. Entropy"};
  for (const auto& s : r.per_layer)
    t.rows.push_back({std::to_string(s.layer), fixed(s.cv, 2), pct(s.cold_fraction, 0),
                      pct(s.coverage_at_k, 0), fixed(s.norm_entropy, 3)});
  return render(t, f);
}

std::string imbalance_table(const std::vector<ImbalanceRow>& rows, Format f) {
  if (f == Format::json) {
    json out = json::array();
    for (const auto& r : rows)
      out.push_back({{"model", r.model},
                     {"dataset", r.dataset},
                     {"k", r.profile.k},
                     {"global_cv", num(r.profile.global_cv)},
                     {"mean_layer_cv", num(r.profile.mean_layer_cv)},
                     {"cv_ratio", num(r.profile.cv_ratio)},
                     {"mean_cold_fraction", num(r.profile.mean_cold_fraction)},
                     {"mean_coverage_at_k", num(r.profile.mean_coverage_at_k)},
                     {"shared_adjusted_coverage", num(r.profile.shared_adjusted_coverage)}});
    return dump(out);
  }
  Table t;
  t.header = {"Model", "Dataset", "Global CV", "Layer CV", "Ratio", "Cold%", "Cov@k%", "Shared-adj. Cov%"};
  auto add = [&t](const std::string& model, const std::string& dataset, double g, double lcv,
                  double ratio, double cold, double cov, double shared) {
    t.rows.push_back({model, dataset, fixed(g, 3), fixed(lcv, 3), fixed(ratio, 1) + "x", pct(cold, 1),
                      pct(cov, 1), pct(shared, 1)});
  };
  std::vector<std::string> order;
  std::map<std::string, std::vector<const ImbalanceRow*>> by_model;
  for (const auto& r : rows) {
    add(r.model, r.dataset, r.profile.global_cv, r.profile.mean_layer_cv, r.profile.cv_ratio,
        r.profile.mean_cold_fraction, r.profile.mean_coverage_at_k, r.profile.shared_adjusted_coverage);
    if (!by_model.count(r.model)) order.push_back(r.model);
    by_model[r.model].push_back(&r);
  }
  for (const auto& model : order) {
    const auto& group = by_model[model];
    if (group.size() < 2) continue;
    double g = 0, lcv = 0, cold = 0, cov = 0, shared = 0;
    for (const auto* r : group) {
      g += r->profile.global_cv;
      lcv += r->profile.mean_layer_cv;
      cold += r->profile.mean_cold_fraction;
      cov += r->profile.mean_coverage_at_k;
      shared += r->profile.shared_adjusted_coverage;
    }
    const double n = static_cast<double>(group.size());
    g /= n;
    lcv /= n;
    add(model, "mean", g, lcv, g > 0 ? lcv / g : std::nan(""), cold / n, cov / n, shared / n);
  }
  return render(t, f);
}

std::string manifest_summary(const SelectionManifest& m, const std::vector<double>& coverage, Format f) {
  const bool has_cov = coverage.size() == m.per_layer_experts.size();
  double mean_cov = 0.0;
  if (has_cov) {
    for (double c : coverage) mean_cov += c;
    mean_cov /= static_cast<double>(coverage.size());
  }
  if (f == Format::json) {
    json layers = json::array();
    for (std::size_t l = 0; l < m.per_layer_experts.size(); ++l) {
      json row{{"layer", l}, {"k", m.per_layer_experts[l].size()}};
      if (has_cov) row["coverage"] = num(coverage[l]);
      layers.push_back(std::move(row));
    }
    json out{{"dataset_id", m.dataset_id},
             {"strategy", to_string(m.strategy)},
             {"signal", to_string(m.signal)},
             {"budget_total", m.budget_total},
             {"per_layer", std::move(layers)}};
    if (has_cov) out["mean_coverage"] = num(mean_cov);
    return dump(out);
  }
  Table t;
  t.header = {"Layer", "k"};
  if (has_cov) t.header.push_back("Cov%");
  for (std::size_t l = 0; l < m.per_layer_experts.size(); ++l) {
    std::vector<std::string> row{std::to_string(l), std::to_string(m.per_layer_experts[l].size())};
    if (has_cov) row.push_back(pct(coverage[l], 1));
    t.rows.push_back(std::move(row));
  }
  const auto n_layers = static_cast<double>(m.per_layer_experts.size());
  std::vector<std::string> total{"total", std::to_string(m.budget_total)};
  if (has_cov) total.push_back(pct(mean_cov, 1));
  t.rows.push_back(std::move(total));
  std::vector<std::string> mean{"mean", fixed(static_cast<double>(m.budget_total) / n_layers, 2)};
  if (has_cov) mean.push_back(pct(mean_cov, 1));
  t.rows.push_back(std::move(mean));
  return render(t, f);
}

std::string signal_comparison(const selection::SignalComparison& c, Format f) {
  if (f == Format::json) {
    json per_layer = json::array();
    for (double j : c.per_layer_jaccard) per_layer.push_back(num(j));
    return dump({{"k", c.k}, {"per_layer_jaccard", std::move(per_layer)}, {"mean_jaccard", num(c.mean)}});
  }
  Table t;
  t.header = {"Layer", "Jaccard(counts, mass)"};
  for (std::size_t l = 0; l < c.per_layer_jaccard.size(); ++l)
    t.rows.push_back({std::to_string(l), fixed(c.per_layer_jaccard[l], 3)});
  t.rows.push_back({"mean", fixed(c.mean, 3)});
  return render(t, f);
}

std::string similarity_matrix(const std::vector<std::string>& names,
                              const std::vector<std::vector<double>>& matrix, Format f) {
  if (f == Format::json) {
    json m = json::array();
    for (const auto& row : matrix) {
      json r = json::array();
      for (double v : row) r.push_back(num(v));
      m.push_back(std::move(r));
    }
    return dump({{"datasets", names}, {"jaccard", std::move(m)}});
  }
  Table t;
  t.header.push_back("Dataset");
  for (const auto& n : names) t.header.push_back(n);
  for (std::size_t i = 0; i < matrix.size(); ++i) {
    std::vector<std::string> row{names[i]};
    for (double v : matrix[i]) row.push_back(fixed(v, 2));
    t.rows.push_back(std::move(row));
  }
  return render(t, f);
}

std::string stability_table(const std::vector<stability::StabilityReport>& reports, Format f) {
  if (f == Format::json) {
    json out = json::array();
    for (const auto& r : reports) {
      json per_layer = json::array();
      for (double j : r.per_layer_mean_jaccard) per_layer.push_back(num(j));
      out.push_back({{"dataset_id", r.dataset_id},
                     {"fraction", r.fraction},
                     {"trials", r.trials},
                     {"k", r.k},
                     {"subsample_size", r.subsample_size},
                     {"seed", r.seed},
                     {"per_layer_mean_jaccard", std::move(per_layer)},
                     {"mean_jaccard", num(r.mean_jaccard)},
                     {"min_jaccard", num(r.min_jaccard)}});
    }
    return dump(out);
  }
  Table t;
  t.header = {"Dataset", "Fraction", "Samples", "Trials", "k", "Mean J", "Min J"};
  for (const auto& r : reports)
    t.rows.push_back({r.dataset_id, fixed(r.fraction, 3), std::to_string(r.subsample_size),
                      std::to_string(r.trials), std::to_string(r.k), fixed(r.mean_jaccard, 3),
                      fixed(r.min_jaccard, 3)});
  return render(t, f);
}

std::string equivalence_table(const std::vector<EquivalenceRow>& rows, Format f) {
  if (f == Format::json) {
    json out = json::array();
    for (const auto& r : rows) out.push_back(equivalence_json(r));
    return dump(out);
  }
  const auto* first = rows.empty() ? nullptr : headline(rows.front().report);
  const std::string eqv = first ? "Eqv@" + margin_label(first->epsilon_pp) + "pp" : "Eqv";
  const std::string conf = rows.empty() ? "95" : margin_label(100.0 * rows.front().report.conf);
  Table t;
  t.header = {"Model", "Task", "Reference", "Treatment", "Delta (pp)", conf + "% CI (pp)", eqv};
  for (const auto& row : rows) {
    const auto& r = row.report;
    const auto* h = headline(r);
    t.rows.push_back({row.model, row.task, mean_std(r.mean_b, r.std_b), mean_std(r.mean_a, r.std_a),
                      (100.0 * r.delta >= 0.005 ? "+" : "") + fixed(100.0 * r.delta, 2),
                      "[" + fixed(100.0 * r.ci_low, 2) + ", " + fixed(100.0 * r.ci_high, 2) + "]",
                      h ? (h->established ? "✓" : "✗") : ""});
  }
  return render(t, f);
}

std::string tost_table(const std::vector<EquivalenceRow>& rows, Format f) {
  if (f == Format::json) return equivalence_table(rows, f);
  Table t;
  t.header = {"Model", "Task", "Delta (pp)"};
  if (!rows.empty())
    for (const auto& m : rows.front().report.tost) t.header.push_back("eps=" + margin_label(m.epsilon_pp) + "pp");
  t.header.push_back("t-test p");
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::vector<std::string> cells{row.model, row.task,
                                   (100.0 * r.delta >= 0.005 ? "+" : "") + fixed(100.0 * r.delta, 2)};
    for (const auto& m : r.tost) {
      if (f == Format::csv)
        cells.push_back(fixed(m.p(), 4) + (m.established ? " yes" : " no"));
      else
        cells.push_back(p_value(m.p()) + (m.established ? " ✓" : ""));
    }
    cells.push_back(f == Format::csv ? fixed(r.ttest_p, 4) : p_value(r.ttest_p));
    t.rows.push_back(std::move(cells));
  }
  return render(t, f);
}

std::string variance_table(const std::vector<EquivalenceRow>& rows, Format f) {
  if (f == Format::json) return equivalence_table(rows, f);
  Table t;
  t.header = {"Model", "Task", "Std (reference)", "Std (treatment)", "Ratio"};
  for (const auto& row : rows) {
    const auto& r = row.report;
    t.rows.push_back({row.model, row.task, fixed(r.std_b, 3), fixed(r.std_a, 3),
                      std::isfinite(r.std_ratio) ? fixed(r.std_ratio, 2) + "x" : "n/a"});
  }
  return render(t, f);
}

std::string equivalence_full(const std::vector<EquivalenceRow>& rows, Format f) {
  if (f == Format::json) return equivalence_table(rows, f);
  if (f == Format::markdown)
    return equivalence_table(rows, f) + "\n" + tost_table(rows, f) + "\n" + variance_table(rows, f);
  Table t;
  t.header = {"model", "task", "treatment", "reference", "n", "mean_treatment", "std_treatment",
              "mean_reference", "std_reference", "delta_pp", "ci_low_pp", "ci_high_pp", "ttest_p",
              "std_ratio"};
  if (!rows.empty())
    for (const auto& m : rows.front().report.tost) {
      const auto e = margin_label(m.epsilon_pp);
      for (const char* suffix : {"p_lower", "p_upper", "p", "established"})
        t.header.push_back("eps" + e + "_" + suffix);
    }
  for (const auto& row : rows) {
    const auto& r = row.report;
    std::vector<std::string> cells{row.model, row.task, row.treatment, row.reference, std::to_string(r.n),
                                   fixed(r.mean_a, 6), fixed(r.std_a, 6), fixed(r.mean_b, 6),
                                   fixed(r.std_b, 6), fixed(100.0 * r.delta, 4), fixed(100.0 * r.ci_low, 4),
                                   fixed(100.0 * r.ci_high, 4), fixed(r.ttest_p, 6), fixed(r.std_ratio, 4)};
    for (const auto& m : r.tost) {
      cells.push_back(fixed(m.p_lower, 6));
      cells.push_back(fixed(m.p_upper, 6));
      cells.push_back(fixed(m.p(), 6));
      cells.push_back(m.established ? "true" : "false");
    }
    t.rows.push_back(std::move(cells));
  }
  return to_csv(t);
}

std::string adapter_cost(const AdapterCostInput& in, const AdapterCost& cost, Format f) {
  const double full = in.always_on_params + in.expert_params_full;
  if (f == Format::json)
    return dump({{"always_on_params", in.always_on_params},
                 {"expert_params_full", in.expert_params_full},
                 {"selected_fraction", in.selected_fraction},
                 {"full_params", full},
                 {"trainable_params", cost.trainable_params},
                 {"reduction_vs_full", cost.reduction_vs_full}});
  Table t;
  t.header = {"Full params", "Selected params", "Reduction"};
  t.rows.push_back({fixed(full, 0), fixed(cost.trainable_params, 0), pct(cost.reduction_vs_full, 1) + "%"});
  return render(t, f);
}

}  // namespace moe_sieve::report
