/* SPDX-License-Identifier: Apache-2.0
 * Copyright (c) 2026 The moe-sieve Authors.
 *
 * C interface of libmoe_sieve. Objects are opaque handles released with the
 * matching *_free function. Every fallible call returns an ms_status; on
 * failure ms_last_error() describes the problem for the calling thread.
 * Strings returned through char** are owned by the caller and released with
 * ms_string_free().
 */

#ifndef MOE_SIEVE_H
#define MOE_SIEVE_H

#include <stddef.h>
#include <stdint.h>

#if defined(MOE_SIEVE_BUILDING_LIBRARY)
#define MS_API __attribute__((visibility("default")))
#else
#define MS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ms_status {
  MS_OK = 0,
  MS_ERR_INVALID_ARGUMENT = 1, /* parameters outside an operation's domain */
  MS_ERR_SCHEMA = 2,           /* input data violates format or invariants */
  MS_ERR_IO = 3,               /* file could not be read or written */
  MS_ERR_DOMAIN = 4,           /* statistic undefined for the data */
  MS_ERR_INTERNAL = 5
} ms_status;

typedef enum ms_signal { MS_SIGNAL_COUNTS = 0, MS_SIGNAL_MASS = 1 } ms_signal;

typedef enum ms_format { MS_FORMAT_CSV = 0, MS_FORMAT_MARKDOWN = 1, MS_FORMAT_JSON = 2 } ms_format;

typedef struct ms_trace ms_trace;
typedef struct ms_manifest ms_manifest;
typedef struct ms_seed_table ms_seed_table;

typedef struct ms_model_shape {
  int n_layers;
  int n_routed;
  int n_shared;
  int top_k;
  double expert_ffn_fraction;
} ms_model_shape;

MS_API const char* ms_version(void);
MS_API const char* ms_last_error(void);
MS_API const char* ms_status_name(ms_status status);
MS_API void ms_string_free(char* s);

/* Writes text to path through a temp file and rename. */
MS_API ms_status ms_write_text_atomic(const char* path, const char* text);

/* ---- traces ---------------------------------------------------------- */

/* samples_path may be NULL. */
MS_API ms_status ms_trace_load(const char* path, const char* samples_path, ms_trace** out);
/* samples_path may be NULL; otherwise the trace must carry samples. */
MS_API ms_status ms_trace_save(const ms_trace* trace, const char* path, const char* samples_path);
MS_API void ms_trace_free(ms_trace* trace);

MS_API ms_status ms_trace_shape(const ms_trace* trace, ms_model_shape* out);
MS_API ms_status ms_trace_model_name(const ms_trace* trace, char** out);
MS_API ms_status ms_trace_dataset_id(const ms_trace* trace, char** out);
MS_API ms_status ms_trace_n_tokens(const ms_trace* trace, int64_t* out);
MS_API ms_status ms_trace_sample_count(const ms_trace* trace, size_t* out);
/* Copies one layer's row into out (capacity n_routed). */
MS_API ms_status ms_trace_counts_row(const ms_trace* trace, int layer, int64_t* out, size_t capacity);
MS_API ms_status ms_trace_mass_row(const ms_trace* trace, int layer, double* out, size_t capacity);
MS_API ms_status ms_trace_digest(const ms_trace* trace, char** out);

/* Synthetic traces. preset: "olmoe-like", "qwen-like", "deepseek-like".
 * dataset_id and task_id may be NULL. */
MS_API ms_status ms_simulate_preset(const char* preset, int64_t n_tokens, uint64_t seed,
                                    const char* dataset_id, const char* task_id, ms_trace** out);
/* config_path: declarative simulator config (JSON). */
MS_API ms_status ms_simulate_config(const char* config_path, int64_t n_tokens, uint64_t seed,
                                    const char* dataset_id, ms_trace** out);

/* ---- selection ------------------------------------------------------- */

MS_API ms_status ms_select_uniform(const ms_trace* trace, int k, ms_signal signal, ms_manifest** out);
MS_API ms_status ms_select_uniform_fraction(const ms_trace* trace, double fraction, ms_signal signal,
                                            ms_manifest** out);
MS_API ms_status ms_select_greedy(const ms_trace* trace, int budget, ms_signal signal, ms_manifest** out);
MS_API ms_status ms_select_coverage_threshold(const ms_trace* trace, double tau, ms_signal signal,
                                              ms_manifest** out);
MS_API ms_status ms_select_random(const ms_trace* trace, int k, uint64_t seed, ms_manifest** out);

/* Ranked expert order of one layer; out has capacity n_routed. */
MS_API ms_status ms_rank_experts(const ms_trace* trace, int layer, ms_signal signal, int* out,
                                 size_t capacity);

MS_API ms_status ms_manifest_load(const char* path, ms_manifest** out);
MS_API ms_status ms_manifest_save(const ms_manifest* manifest, const char* path);
MS_API ms_status ms_manifest_to_json(const ms_manifest* manifest, char** out);
MS_API void ms_manifest_free(ms_manifest* manifest);
MS_API ms_status ms_manifest_budget_total(const ms_manifest* manifest, int64_t* out);
MS_API ms_status ms_manifest_n_layers(const ms_manifest* manifest, int* out);
/* Writes the layer's sorted expert indices into out; *count receives the set
 * size. Fails with MS_ERR_INVALID_ARGUMENT when capacity is too small. */
MS_API ms_status ms_manifest_layer(const ms_manifest* manifest, int layer, int* out, size_t capacity,
                                   size_t* count);
/* Per-layer k and coverage on the trace (trace may be NULL: k only). */
MS_API ms_status ms_manifest_summary(const ms_manifest* manifest, const ms_trace* trace, ms_format format,
                                     char** out);

/* ---- statistics and reports ------------------------------------------ */

MS_API ms_status ms_layer_cv(const int64_t* row, size_t n, double* out);
MS_API ms_status ms_coverage_at(const int64_t* row, size_t n, int k, double* out);
MS_API ms_status ms_shared_adjusted_coverage(int n_shared, int top_k, double routed_coverage, double* out);
MS_API ms_status ms_global_cv(const ms_trace* trace, double* out);

/* Per-layer CV, cold fraction, coverage at k, entropy. */
MS_API ms_status ms_report_layers(const ms_trace* trace, int k, ms_format format, char** out);
/* One imbalance row per trace at k = floor(fraction * n_routed). */
MS_API ms_status ms_report_imbalance(const ms_trace* const* traces, size_t n, double fraction,
                                     ms_format format, char** out);
MS_API ms_status ms_report_signal_agreement(const ms_trace* trace, double fraction, ms_format format,
                                            char** out);
/* names may be NULL (dataset ids are used). */
MS_API ms_status ms_report_similarity(const ms_manifest* const* manifests, const char* const* names,
                                      size_t n, ms_format format, char** out);

typedef struct ms_stability_params {
  double fraction; /* share of samples per trial, (0, 1] */
  int trials;
  int k;
  ms_signal signal;
  uint64_t seed;
} ms_stability_params;

MS_API ms_status ms_stability(const ms_trace* trace, const ms_stability_params* params, double* mean_jaccard,
                              double* min_jaccard);
MS_API ms_status ms_report_stability(const ms_trace* trace, const ms_stability_params* params,
                                     ms_format format, char** out);

/* ---- seed-level equivalence ------------------------------------------ */

MS_API ms_status ms_seed_table_load(const char* csv_path, ms_seed_table** out);
MS_API ms_status ms_seed_table_parse(const char* csv_text, ms_seed_table** out);
MS_API void ms_seed_table_free(ms_seed_table* table);

typedef enum ms_equiv_layout {
  MS_EQUIV_FULL = 0,      /* all of the below */
  MS_EQUIV_SUMMARY = 1,   /* means, paired delta, CI, headline verdict */
  MS_EQUIV_TOST = 2,      /* per-margin TOST p-values and t-test p */
  MS_EQUIV_VARIANCE = 3   /* seed std and ratio */
} ms_equiv_layout;

/* Compares condition `treatment` against `reference` in every (model, task)
 * cell. margins_pp: equivalence margins in percentage points. */
MS_API ms_status ms_report_equivalence(const ms_seed_table* table, const char* treatment,
                                       const char* reference, const double* margins_pp, size_t n_margins,
                                       double alpha, double conf, ms_equiv_layout layout, ms_format format,
                                       char** out);

MS_API ms_status ms_t_cdf(double t, double df, double* out);

/* ---- adapter cost ----------------------------------------------------- */

MS_API ms_status ms_adapter_cost(double always_on_params, double expert_params_full, double selected_fraction,
                                 double* trainable_params, double* reduction_vs_full);
MS_API ms_status ms_report_adapter_cost(double always_on_params, double expert_params_full,
                                        double selected_fraction, ms_format format, char** out);

#ifdef __cplusplus
}
#endif

#endif /* MOE_SIEVE_H */
