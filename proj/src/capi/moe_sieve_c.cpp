// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include "moe_sieve/moe_sieve.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <optional>
#include <string>

#include "moe_sieve/core.hpp"
#include "moe_sieve/equivalence.hpp"
#include "moe_sieve/error.hpp"
#include "moe_sieve/report.hpp"
#include "moe_sieve/selection.hpp"
#include "moe_sieve/simulator.hpp"
#include "moe_sieve/special.hpp"
#include "moe_sieve/stability.hpp"
#include "moe_sieve/stats.hpp"

struct ms_trace {
  moe_sieve::RoutingTrace value;
};

struct ms_manifest {
  moe_sieve::SelectionManifest value;
};

struct ms_seed_table {
  std::vector<moe_sieve::equivalence::SeedResultTable> value;
};

namespace {

using namespace moe_sieve;

thread_local std::string g_last_error;

ms_status to_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return MS_ERR_INVALID_ARGUMENT;
    case ErrorKind::schema: return MS_ERR_SCHEMA;
    case ErrorKind::io: return MS_ERR_IO;
    case ErrorKind::domain: return MS_ERR_DOMAIN;
    case ErrorKind::internal: return MS_ERR_INTERNAL;
  }
  return MS_ERR_INTERNAL;
}

template <typename F>
ms_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return MS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MS_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return MS_ERR_INTERNAL;
  }
}

template <typename T>
T& deref(T* p, const char* what) {
  if (!p) fail(ErrorKind::invalid_argument, std::string(what) + " is NULL");
  return *p;
}

char* dup(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void give_string(char** out, const std::string& s) { deref(out, "out") = dup(s); }

std::string str(const char* s, const char* what) {
  if (!s) fail(ErrorKind::invalid_argument, std::string(what) + " is NULL");
  return s;
}

Signal to_signal(ms_signal s) {
  if (s == MS_SIGNAL_COUNTS) return Signal::counts;
  if (s == MS_SIGNAL_MASS) return Signal::mass;
  fail(ErrorKind::invalid_argument, "unknown signal");
}

report::Format to_format(ms_format f) {
  switch (f) {
    case MS_FORMAT_CSV: return report::Format::csv;
    case MS_FORMAT_MARKDOWN: return report::Format::markdown;
    case MS_FORMAT_JSON: return report::Format::json;
  }
  fail(ErrorKind::invalid_argument, "unknown format");
}

void give_manifest(ms_manifest** out, SelectionManifest m) {
  deref(out, "out") = new ms_manifest{std::move(m)};
}

void give_trace(ms_trace** out, RoutingTrace t) { deref(out, "out") = new ms_trace{std::move(t)}; }

stability::StabilityParams stability_params(const ms_stability_params& p) {
  stability::StabilityParams sp;
  sp.fraction = p.fraction;
  sp.trials = p.trials;
  sp.k = p.k;
  sp.signal = to_signal(p.signal);
  sp.seed = p.seed;
  return sp;
}

stability::StabilityReport run_stability(const ms_trace* trace, const ms_stability_params* params) {
  const auto& t = deref(trace, "trace").value;
  if (!t.has_samples())
    fail(ErrorKind::invalid_argument, "stability needs a trace loaded with its samples file");
  return stability::bootstrap_stability(t.samples(), t.spec(), stability_params(deref(params, "params")),
                                        t.dataset_id());
}

}  // namespace

extern "C" {

const char* ms_version(void) { return "1.0.0"; }

const char* ms_last_error(void) { return g_last_error.c_str(); }

const char* ms_status_name(ms_status status) {
  switch (status) {
    case MS_OK: return "ok";
    case MS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MS_ERR_SCHEMA: return "schema error";
    case MS_ERR_IO: return "i/o error";
    case MS_ERR_DOMAIN: return "domain error";
    case MS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void ms_string_free(char* s) { std::free(s); }

ms_status ms_write_text_atomic(const char* path, const char* text) {
  return guard([&] { write_file_atomic(str(path, "path"), str(text, "text")); });
}

ms_status ms_trace_load(const char* path, const char* samples_path, ms_trace** out) {
  return guard([&] {
    std::optional<std::filesystem::path> sp;
    if (samples_path) sp = samples_path;
    give_trace(out, load_trace(str(path, "path"), sp));
  });
}

ms_status ms_trace_save(const ms_trace* trace, const char* path, const char* samples_path) {
  return guard([&] {
    std::optional<std::filesystem::path> sp;
    if (samples_path) sp = samples_path;
    save_trace(deref(trace, "trace").value, str(path, "path"), sp);
  });
}

void ms_trace_free(ms_trace* trace) { delete trace; }

ms_status ms_trace_shape(const ms_trace* trace, ms_model_shape* out) {
  return guard([&] {
    const auto& s = deref(trace, "trace").value.spec();
    deref(out, "out") = {s.n_layers, s.n_routed, s.n_shared, s.top_k, s.expert_ffn_fraction};
  });
}

ms_status ms_trace_model_name(const ms_trace* trace, char** out) {
  return guard([&] { give_string(out, deref(trace, "trace").value.spec().name); });
}

ms_status ms_trace_dataset_id(const ms_trace* trace, char** out) {
  return guard([&] { give_string(out, deref(trace, "trace").value.dataset_id()); });
}

ms_status ms_trace_n_tokens(const ms_trace* trace, int64_t* out) {
  return guard([&] { deref(out, "out") = deref(trace, "trace").value.n_tokens(); });
}

ms_status ms_trace_sample_count(const ms_trace* trace, size_t* out) {
  return guard([&] { deref(out, "out") = deref(trace, "trace").value.samples().size(); });
}

ms_status ms_trace_counts_row(const ms_trace* trace, int layer, int64_t* out, size_t capacity) {
  return guard([&] {
    const auto row = deref(trace, "trace").value.counts_row(layer);
    if (!out || capacity < row.size()) fail(ErrorKind::invalid_argument, "output buffer too small");
    std::copy(row.begin(), row.end(), out);
  });
}

ms_status ms_trace_mass_row(const ms_trace* trace, int layer, double* out, size_t capacity) {
  return guard([&] {
    const auto row = deref(trace, "trace").value.mass_row(layer);
    if (!out || capacity < row.size()) fail(ErrorKind::invalid_argument, "output buffer too small");
    std::copy(row.begin(), row.end(), out);
  });
}

ms_status ms_trace_digest(const ms_trace* trace, char** out) {
  return guard([&] { give_string(out, deref(trace, "trace").value.digest()); });
}

ms_status ms_simulate_preset(const char* preset, int64_t n_tokens, uint64_t seed, const char* dataset_id,
                             const char* task_id, ms_trace** out) {
  return guard([&] {
    auto p = simulator::preset(str(preset, "preset"));
    if (task_id) p.skew.task_id = task_id;
    std::string id = dataset_id ? dataset_id : p.name;
    give_trace(out, simulator::gen_trace(p.spec, p.skew, n_tokens, seed, std::move(id)));
  });
}

ms_status ms_simulate_config(const char* config_path, int64_t n_tokens, uint64_t seed, const char* dataset_id,
                             ms_trace** out) {
  return guard([&] {
    auto p = simulator::load_config(str(config_path, "config_path"));
    std::string id = dataset_id ? dataset_id : p.name;
    give_trace(out, simulator::gen_trace(p.spec, p.skew, n_tokens, seed, std::move(id)));
  });
}

ms_status ms_select_uniform(const ms_trace* trace, int k, ms_signal signal, ms_manifest** out) {
  return guard([&] {
    give_manifest(out, selection::select_topk_uniform(deref(trace, "trace").value, k, to_signal(signal)));
  });
}

ms_status ms_select_uniform_fraction(const ms_trace* trace, double fraction, ms_signal signal,
                                     ms_manifest** out) {
  return guard([&] {
    give_manifest(out, selection::select_topk_uniform_fraction(deref(trace, "trace").value, fraction,
                                                               to_signal(signal)));
  });
}

ms_status ms_select_greedy(const ms_trace* trace, int budget, ms_signal signal, ms_manifest** out) {
  return guard([&] {
    give_manifest(out, selection::select_greedy(deref(trace, "trace").value, budget, to_signal(signal)));
  });
}

ms_status ms_select_coverage_threshold(const ms_trace* trace, double tau, ms_signal signal, ms_manifest** out) {
  return guard([&] {
    give_manifest(out, selection::select_coverage_threshold(deref(trace, "trace").value, tau, to_signal(signal)));
  });
}

ms_status ms_select_random(const ms_trace* trace, int k, uint64_t seed, ms_manifest** out) {
  return guard([&] { give_manifest(out, selection::select_random(deref(trace, "trace").value, k, seed)); });
}

ms_status ms_rank_experts(const ms_trace* trace, int layer, ms_signal signal, int* out, size_t capacity) {
  return guard([&] {
    const auto r = selection::rank_experts(deref(trace, "trace").value, layer, to_signal(signal));
    if (!out || capacity < r.order.size()) fail(ErrorKind::invalid_argument, "output buffer too small");
    std::copy(r.order.begin(), r.order.end(), out);
  });
}

ms_status ms_manifest_load(const char* path, ms_manifest** out) {
  return guard([&] { give_manifest(out, load_manifest(str(path, "path"))); });
}

ms_status ms_manifest_save(const ms_manifest* manifest, const char* path) {
  return guard([&] { save_manifest(deref(manifest, "manifest").value, str(path, "path")); });
}

ms_status ms_manifest_to_json(const ms_manifest* manifest, char** out) {
  return guard([&] { give_string(out, serialize_manifest(deref(manifest, "manifest").value)); });
}

void ms_manifest_free(ms_manifest* manifest) { delete manifest; }

ms_status ms_manifest_budget_total(const ms_manifest* manifest, int64_t* out) {
  return guard([&] { deref(out, "out") = deref(manifest, "manifest").value.budget_total; });
}

ms_status ms_manifest_n_layers(const ms_manifest* manifest, int* out) {
  return guard([&] {
    deref(out, "out") = static_cast<int>(deref(manifest, "manifest").value.per_layer_experts.size());
  });
}

ms_status ms_manifest_layer(const ms_manifest* manifest, int layer, int* out, size_t capacity, size_t* count) {
  return guard([&] {
    const auto& layers = deref(manifest, "manifest").value.per_layer_experts;
    if (layer < 0 || static_cast<std::size_t>(layer) >= layers.size())
      fail(ErrorKind::invalid_argument, "layer out of range");
    const auto& experts = layers[static_cast<std::size_t>(layer)];
    deref(count, "count") = experts.size();
    if (experts.empty()) return;
    if (!out || capacity < experts.size()) fail(ErrorKind::invalid_argument, "output buffer too small");
    std::copy(experts.begin(), experts.end(), out);
  });
}

ms_status ms_manifest_summary(const ms_manifest* manifest, const ms_trace* trace, ms_format format, char** out) {
  return guard([&] {
    const auto& m = deref(manifest, "manifest").value;
    std::vector<double> coverage;
    if (trace) coverage = selection::manifest_coverage(trace->value, m, m.signal);
    give_string(out, report::manifest_summary(m, coverage, to_format(format)));
  });
}

ms_status ms_layer_cv(const int64_t* row, size_t n, double* out) {
  return guard([&] {
    if (!row && n) fail(ErrorKind::invalid_argument, "row is NULL");
    deref(out, "out") = stats::layer_cv(std::span<const std::int64_t>(row, n));
  });
}

ms_status ms_coverage_at(const int64_t* row, size_t n, int k, double* out) {
  return guard([&] {
    if (!row && n) fail(ErrorKind::invalid_argument, "row is NULL");
    deref(out, "out") = stats::coverage_at(std::span<const std::int64_t>(row, n), k);
  });
}

ms_status ms_shared_adjusted_coverage(int n_shared, int top_k, double routed_coverage, double* out) {
  return guard([&] {
    ModelSpec spec{"", 1, top_k, n_shared, top_k, 1.0};
    spec.validate();
    deref(out, "out") = stats::shared_adjusted_coverage(spec, routed_coverage);
  });
}

ms_status ms_global_cv(const ms_trace* trace, double* out) {
  return guard([&] { deref(out, "out") = stats::global_cv(deref(trace, "trace").value); });
}

ms_status ms_report_layers(const ms_trace* trace, int k, ms_format format, char** out) {
  return guard([&] {
    const auto& t = deref(trace, "trace").value;
    give_string(out, report::layer_table(t, stats::profile(t, k), to_format(format)));
  });
}

ms_status ms_report_imbalance(const ms_trace* const* traces, size_t n, double fraction, ms_format format,
                              char** out) {
  return guard([&] {
    if (!traces || n == 0) fail(ErrorKind::invalid_argument, "no traces given");
    std::vector<report::ImbalanceRow> rows;
    for (size_t i = 0; i < n; ++i) {
      const auto& t = deref(traces[i], "trace").value;
      const int k = stats::k_from_fraction(t.n_routed(), fraction);
      rows.push_back({t.spec().name, t.dataset_id(), stats::profile(t, k)});
    }
    give_string(out, report::imbalance_table(rows, to_format(format)));
  });
}

ms_status ms_report_signal_agreement(const ms_trace* trace, double fraction, ms_format format, char** out) {
  return guard([&] {
    give_string(out, report::signal_comparison(selection::compare_signals(deref(trace, "trace").value, fraction),
                                               to_format(format)));
  });
}

ms_status ms_report_similarity(const ms_manifest* const* manifests, const char* const* names, size_t n,
                               ms_format format, char** out) {
  return guard([&] {
    if (!manifests || n == 0) fail(ErrorKind::invalid_argument, "no manifests given");
    std::vector<SelectionManifest> ms;
    std::vector<std::string> labels;
    for (size_t i = 0; i < n; ++i) {
      ms.push_back(deref(manifests[i], "manifest").value);
      labels.push_back(names && names[i] ? names[i] : ms.back().dataset_id);
    }
    give_string(out, report::similarity_matrix(labels, stats::cross_dataset_similarity(ms), to_format(format)));
  });
}

ms_status ms_stability(const ms_trace* trace, const ms_stability_params* params, double* mean_jaccard,
                       double* min_jaccard) {
  return guard([&] {
    const auto r = run_stability(trace, params);
    deref(mean_jaccard, "mean_jaccard") = r.mean_jaccard;
    deref(min_jaccard, "min_jaccard") = r.min_jaccard;
  });
}

ms_status ms_report_stability(const ms_trace* trace, const ms_stability_params* params, ms_format format,
                              char** out) {
  return guard([&] { give_string(out, report::stability_table({run_stability(trace, params)}, to_format(format))); });
}

ms_status ms_seed_table_load(const char* csv_path, ms_seed_table** out) {
  return guard([&] { deref(out, "out") = new ms_seed_table{equivalence::load_seed_csv(str(csv_path, "csv_path"))}; });
}

ms_status ms_seed_table_parse(const char* csv_text, ms_seed_table** out) {
  return guard([&] { deref(out, "out") = new ms_seed_table{equivalence::parse_seed_csv(str(csv_text, "csv_text"))}; });
}

void ms_seed_table_free(ms_seed_table* table) { delete table; }

ms_status ms_report_equivalence(const ms_seed_table* table, const char* treatment, const char* reference,
                                const double* margins_pp, size_t n_margins, double alpha, double conf,
                                ms_equiv_layout layout, ms_format format, char** out) {
  return guard([&] {
    const auto& tables = deref(table, "table").value;
    const std::string a = str(treatment, "treatment");
    const std::string b = str(reference, "reference");
    if (!margins_pp && n_margins) fail(ErrorKind::invalid_argument, "margins_pp is NULL");
    const std::span<const double> margins(margins_pp, n_margins);
    std::vector<report::EquivalenceRow> rows;
    for (const auto& t : tables)
      rows.push_back({t.model, t.task, a, b,
                      equivalence::compare(t.condition(a), t.condition(b), margins, alpha, conf)});
    const auto f = to_format(format);
    switch (layout) {
      case MS_EQUIV_FULL: give_string(out, report::equivalence_full(rows, f)); return;
      case MS_EQUIV_SUMMARY: give_string(out, report::equivalence_table(rows, f)); return;
      case MS_EQUIV_TOST: give_string(out, report::tost_table(rows, f)); return;
      case MS_EQUIV_VARIANCE: give_string(out, report::variance_table(rows, f)); return;
    }
    fail(ErrorKind::invalid_argument, "unknown layout");
  });
}

ms_status ms_t_cdf(double t, double df, double* out) {
  return guard([&] { deref(out, "out") = special::t_cdf(t, df); });
}

ms_status ms_adapter_cost(double always_on_params, double expert_params_full, double selected_fraction,
                          double* trainable_params, double* reduction_vs_full) {
  return guard([&] {
    const auto c = estimate_adapter_cost({always_on_params, expert_params_full, selected_fraction});
    deref(trainable_params, "trainable_params") = c.trainable_params;
    deref(reduction_vs_full, "reduction_vs_full") = c.reduction_vs_full;
  });
}

ms_status ms_report_adapter_cost(double always_on_params, double expert_params_full, double selected_fraction,
                                 ms_format format, char** out) {
  return guard([&] {
    const AdapterCostInput in{always_on_params, expert_params_full, selected_fraction};
    give_string(out, report::adapter_cost(in, estimate_adapter_cost(in), to_format(format)));
  });
}

}  // extern "C"
