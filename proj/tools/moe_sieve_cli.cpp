// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.
//
// moe-sieve: command-line front end over the C API.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "moe_sieve/moe_sieve.h"

namespace fs = std::filesystem;

namespace {

enum Exit : int { kOk = 0, kInternal = 1, kConfig = 2, kInput = 3 };

struct Failure {
  int code;
  std::string message;
};

// Input-side failures (bad files, schema violations, data the statistic
// cannot handle) exit 3; parameter errors exit 2.
void check(ms_status st, bool writing = false) {
  if (st == MS_OK) return;
  int code = kInternal;
  switch (st) {
    case MS_ERR_INVALID_ARGUMENT: code = kConfig; break;
    case MS_ERR_SCHEMA:
    case MS_ERR_DOMAIN: code = kInput; break;
    case MS_ERR_IO: code = writing ? kInternal : kInput; break;
    default: code = kInternal; break;
  }
  throw Failure{code, ms_last_error()};
}

[[noreturn]] void config_error(const std::string& msg) { throw Failure{kConfig, msg}; }

class Text {
 public:
  Text() = default;
  Text(const Text&) = delete;
  Text& operator=(const Text&) = delete;
  ~Text() { ms_string_free(p_); }
  char** put() { return &p_; }
  std::string str() const { return p_ ? p_ : ""; }

 private:
  char* p_ = nullptr;
};

template <typename T, void (*Free)(T*)>
class Handle {
 public:
  Handle() = default;
  Handle(Handle&& o) noexcept : p_(o.p_) { o.p_ = nullptr; }
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p_); }
  T** put() { return &p_; }
  T* get() const { return p_; }

 private:
  T* p_ = nullptr;
};

using Trace = Handle<ms_trace, ms_trace_free>;
using Manifest = Handle<ms_manifest, ms_manifest_free>;
using SeedTable = Handle<ms_seed_table, ms_seed_table_free>;

struct Globals {
  std::string format = "md";
  std::string out_dir;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;

  ms_format fmt() const {
    if (format == "csv") return MS_FORMAT_CSV;
    if (format == "json") return MS_FORMAT_JSON;
    return MS_FORMAT_MARKDOWN;
  }
  std::string ext() const {
    if (format == "csv") return ".csv";
    if (format == "json") return ".json";
    return ".md";
  }
  bool has_seed() const { return seed_opt->count() > 0; }
  std::uint64_t require_seed(const char* what) const {
    if (!has_seed()) config_error(std::string(what) + " requires --seed");
    return seed;
  }
  fs::path out_path(const std::string& name) const { return fs::path(out_dir.empty() ? "." : out_dir) / name; }
};

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kInternal, "cannot create directory " + dir.string() + ": " + ec.message()};
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  check(ms_write_text_atomic(path.c_str(), text.c_str()), true);
}

// Reports go to stdout, or to <out>/<name><ext> when --out is given.
void emit(const Globals& g, const std::string& name, const std::string& text) {
  if (g.out_dir.empty()) {
    std::cout << text;
    return;
  }
  const fs::path path = g.out_path(name + g.ext());
  write_text(path, text);
  std::cout << "wrote " << path.string() << "\n";
}

ms_signal parse_signal(const std::string& s) { return s == "mass" ? MS_SIGNAL_MASS : MS_SIGNAL_COUNTS; }

Trace load_trace(const std::string& path, const std::string& samples = {}) {
  Trace t;
  check(ms_trace_load(path.c_str(), samples.empty() ? nullptr : samples.c_str(), t.put()));
  return t;
}

Manifest load_manifest(const std::string& path) {
  Manifest m;
  check(ms_manifest_load(path.c_str(), m.put()));
  return m;
}

SeedTable load_seed_table(const std::string& path) {
  SeedTable t;
  check(ms_seed_table_load(path.c_str(), t.put()));
  return t;
}

int routed_experts(const Trace& t) {
  ms_model_shape shape{};
  check(ms_trace_shape(t.get(), &shape));
  return shape.n_routed;
}

// Exactly one of the given options may be set.
void exclusive(const std::vector<CLI::Option*>& opts, const std::string& what) {
  int set = 0;
  for (auto* o : opts) set += o->count() > 0 ? 1 : 0;
  if (set != 1) config_error(what);
}

const std::set<std::string> kStrategies{"uniform", "greedy", "threshold", "random"};

struct SelectArgs {
  std::string trace;
  std::string strategy = "uniform";
  std::string signal = "counts";
  double fraction = 0;
  int k = 0;
  int budget = 0;
  double tau = 0;
  std::string manifest_name = "manifest.json";
  CLI::Option* fraction_opt = nullptr;
  CLI::Option* k_opt = nullptr;
  CLI::Option* budget_opt = nullptr;
  CLI::Option* tau_opt = nullptr;
};

Manifest run_select(const Globals& g, const SelectArgs& a, const Trace& t) {
  const ms_signal sig = parse_signal(a.signal);
  const bool fraction = a.fraction_opt->count() > 0;
  const bool k = a.k_opt->count() > 0;
  const bool budget = a.budget_opt->count() > 0;
  const bool tau = a.tau_opt->count() > 0;
  Manifest m;
  if (a.strategy == "uniform") {
    if (budget || tau) config_error("uniform takes --k or --fraction");
    exclusive({a.fraction_opt, a.k_opt}, "uniform needs exactly one of --k, --fraction");
    if (k)
      check(ms_select_uniform(t.get(), a.k, sig, m.put()));
    else
      check(ms_select_uniform_fraction(t.get(), a.fraction, sig, m.put()));
  } else if (a.strategy == "greedy") {
    if (k || tau || fraction) config_error("greedy takes --budget only");
    if (!budget) config_error("greedy needs --budget");
    check(ms_select_greedy(t.get(), a.budget, sig, m.put()));
  } else if (a.strategy == "threshold") {
    if (k || budget || fraction) config_error("threshold takes --tau only");
    if (!tau) config_error("threshold needs --tau");
    check(ms_select_coverage_threshold(t.get(), a.tau, sig, m.put()));
  } else {
    if (budget || tau) config_error("random takes --k or --fraction");
    exclusive({a.fraction_opt, a.k_opt}, "random needs exactly one of --k, --fraction");
    const std::uint64_t seed = g.require_seed("random selection");
    int kk = a.k;
    if (fraction) {
      if (!(a.fraction > 0.0 && a.fraction <= 1.0)) config_error("--fraction must be in (0, 1]");
      kk = static_cast<int>(a.fraction * routed_experts(t) + 1e-9);
    }
    check(ms_select_random(t.get(), kk, seed, m.put()));
  }
  return m;
}

std::string summary(const Globals& g, const Manifest& m, const Trace& t) {
  Text s;
  check(ms_manifest_summary(m.get(), t.get(), g.fmt(), s.put()));
  return s.str();
}

std::vector<double> parse_number_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error(std::string("invalid ") + what + " value '" + item + "'");
    }
  }
  return out;
}

ms_equiv_layout parse_layout(const std::string& s) {
  if (s == "summary") return MS_EQUIV_SUMMARY;
  if (s == "tost") return MS_EQUIV_TOST;
  if (s == "variance") return MS_EQUIV_VARIANCE;
  return MS_EQUIV_FULL;
}

struct EquivArgs {
  std::string csv;
  std::string treatment = "moe-sieve";
  std::string reference = "full-lora";
  std::string margins = "1,2,3";
  double alpha = 0.05;
  double conf = 0.95;
};

void add_equiv_options(CLI::App* cmd, EquivArgs& a, bool csv_required) {
  auto* o = cmd->add_option("--csv", a.csv, "Seed-result CSV (model,task,condition,seed,accuracy)");
  if (csv_required) o->required();
  cmd->add_option("--treatment", a.treatment, "Treatment condition name")->capture_default_str();
  cmd->add_option("--reference", a.reference, "Reference condition name")->capture_default_str();
  cmd->add_option("--margins", a.margins, "Comma-separated equivalence margins in pp")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "TOST / t-test significance level")->capture_default_str();
  cmd->add_option("--conf", a.conf, "Confidence level of the paired CI")->capture_default_str();
}

std::string equiv_report(const Globals& g, const EquivArgs& a, ms_equiv_layout layout) {
  if (a.csv.empty()) config_error("--csv is required");
  const auto margins = parse_number_list(a.margins, "margin");
  auto table = load_seed_table(a.csv);
  Text s;
  check(ms_report_equivalence(table.get(), a.treatment.c_str(), a.reference.c_str(), margins.data(),
                              margins.size(), a.alpha, a.conf, layout, g.fmt(), s.put()));
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moe-sieve: routing-guided expert selection toolkit"};
  app.set_version_flag("--version", std::string(ms_version()));
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--format", g.format, "Report format")
      ->check(CLI::IsMember({"csv", "md", "markdown", "json"}))
      ->capture_default_str();
  app.add_option("--out", g.out_dir, "Output directory");
  g.seed_opt = app.add_option("--seed", g.seed, "Random seed (required by simulate, random selection, stability)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic routing trace and its samples file");
  std::string sim_preset, sim_config, sim_dataset, sim_task, sim_name = "trace";
  std::int64_t sim_tokens = 20000;
  auto* sim_preset_opt =
      sim->add_option("--preset", sim_preset, "Simulator preset (olmoe-like, qwen-like, deepseek-like)");
  auto* sim_config_opt = sim->add_option("--config", sim_config, "Simulator config JSON");
  sim->add_option("--tokens", sim_tokens, "Number of routed tokens")->capture_default_str();
  sim->add_option("--dataset", sim_dataset, "Dataset id recorded in the trace");
  sim->add_option("--task", sim_task, "Task id perturbing the hot set (preset mode)");
  sim->add_option("--name", sim_name, "Output file stem")->capture_default_str();

  // stats
  auto* st = app.add_subcommand("stats", "Per-layer imbalance statistics for a trace");
  std::string st_trace;
  double st_fraction = 0.25;
  int st_k = 0;
  st->add_option("--trace", st_trace, "Trace JSON")->required();
  auto* st_fraction_opt = st->add_option("--fraction", st_fraction, "Coverage fraction k/E")->capture_default_str();
  auto* st_k_opt = st->add_option("--k", st_k, "Coverage k (overrides --fraction)");
  st_fraction_opt->excludes(st_k_opt);

  // select
  auto* sel = app.add_subcommand("select", "Select experts per layer and write a manifest");
  SelectArgs sa;
  sel->add_option("--trace", sa.trace, "Trace JSON")->required();
  sel->add_option("--strategy", sa.strategy, "Selection strategy")
      ->check(CLI::IsMember(kStrategies))
      ->capture_default_str();
  sel->add_option("--signal", sa.signal, "Ranking signal")
      ->check(CLI::IsMember({"counts", "mass"}))
      ->capture_default_str();
  sa.fraction_opt = sel->add_option("--fraction", sa.fraction, "Per-layer fraction of routed experts");
  sa.k_opt = sel->add_option("--k", sa.k, "Experts per layer");
  sa.budget_opt = sel->add_option("--budget", sa.budget, "Total expert-layer slots (greedy)");
  sa.tau_opt = sel->add_option("--tau", sa.tau, "Per-layer coverage target (threshold)");
  sel->add_option("--manifest", sa.manifest_name, "Manifest file name inside --out")->capture_default_str();

  // compare
  auto* cmp = app.add_subcommand("compare", "Compare count vs mass rankings, or manifests across datasets");
  std::string cmp_trace;
  double cmp_fraction = 0.25;
  std::vector<std::string> cmp_manifests;
  auto* cmp_trace_opt = cmp->add_option("--trace", cmp_trace, "Trace JSON (signal agreement)");
  cmp->add_option("--fraction", cmp_fraction, "Top-k fraction for signal agreement")->capture_default_str();
  auto* cmp_manifest_opt =
      cmp->add_option("--manifest", cmp_manifests, "Manifests to compare pairwise (repeatable)");
  cmp_trace_opt->excludes(cmp_manifest_opt);

  // stability
  auto* stab = app.add_subcommand("stability", "Bootstrap stability of the top-k selection");
  std::string stab_trace, stab_samples, stab_signal = "counts";
  double stab_fraction = 0.1, stab_k_fraction = 0.25;
  int stab_trials = 50, stab_k = 0;
  stab->add_option("--trace", stab_trace, "Trace JSON")->required();
  stab->add_option("--samples", stab_samples, "Samples JSONL (default: <trace stem>.samples.jsonl)");
  stab->add_option("--fraction", stab_fraction, "Share of samples per trial")->capture_default_str();
  stab->add_option("--trials", stab_trials, "Number of trials")->capture_default_str();
  auto* stab_k_opt = stab->add_option("--k", stab_k, "Experts per layer");
  auto* stab_kf_opt =
      stab->add_option("--k-fraction", stab_k_fraction, "Experts per layer as a share of E")->capture_default_str();
  stab_k_opt->excludes(stab_kf_opt);
  stab->add_option("--signal", stab_signal, "Ranking signal")
      ->check(CLI::IsMember({"counts", "mass"}))
      ->capture_default_str();

  // equiv
  auto* eq = app.add_subcommand("equiv", "Paired-seed equivalence analysis");
  EquivArgs ea;
  std::string eq_layout = "full";
  add_equiv_options(eq, ea, true);
  eq->add_option("--layout", eq_layout, "Table layout")
      ->check(CLI::IsMember({"full", "summary", "tost", "variance"}))
      ->capture_default_str();

  // sweep
  auto* sw = app.add_subcommand("sweep", "Write one manifest per k plus an index");
  std::string sw_trace, sw_ks, sw_strategy = "uniform", sw_signal = "counts";
  sw->add_option("--trace", sw_trace, "Trace JSON")->required();
  sw->add_option("--ks", sw_ks, "Comma-separated k values")->required();
  sw->add_option("--strategy", sw_strategy, "uniform or random")
      ->check(CLI::IsMember({"uniform", "random"}))
      ->capture_default_str();
  sw->add_option("--signal", sw_signal, "Ranking signal")
      ->check(CLI::IsMember({"counts", "mass"}))
      ->capture_default_str();

  // report
  auto* rep = app.add_subcommand("report", "Render a report table");
  std::string rep_table;
  std::vector<std::string> rep_traces, rep_manifests, rep_names;
  double rep_fraction = 0.25;
  int rep_k = 0;
  double cost_always_on = 0, cost_expert = 0, cost_fraction = 0.25;
  EquivArgs ra;
  rep->add_option("--table", rep_table, "Table to render")
      ->required()
      ->check(CLI::IsMember({"imbalance", "layers", "equivalence", "tost", "variance", "cost", "similarity"}));
  rep->add_option("--trace", rep_traces, "Trace JSON (repeatable for imbalance)");
  rep->add_option("--manifest", rep_manifests, "Manifest JSON (repeatable, similarity)");
  rep->add_option("--name", rep_names, "Row labels for --manifest, same order");
  rep->add_option("--fraction", rep_fraction, "Top-k fraction (imbalance, layers)")->capture_default_str();
  rep->add_option("--k", rep_k, "Coverage k for the layers table (overrides --fraction)");
  add_equiv_options(rep, ra, false);
  rep->add_option("--always-on-params", cost_always_on, "Always-on adapter parameters (cost)");
  rep->add_option("--expert-params", cost_expert, "Adapter parameters over all routed experts (cost)");
  rep->add_option("--selected-fraction", cost_fraction, "Selected expert fraction (cost)")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return e.get_exit_code() == 0 ? kOk : (rc == 0 ? kOk : kConfig);
  }

  try {
    if (g.format == "markdown") g.format = "md";

    if (*sim) {
      const std::uint64_t seed = g.require_seed("simulate");
      if ((sim_preset_opt->count() > 0) == (sim_config_opt->count() > 0))
        config_error("simulate needs exactly one of --preset, --config");
      Trace t;
      const char* dataset = sim_dataset.empty() ? nullptr : sim_dataset.c_str();
      if (!sim_preset.empty()) {
        check(ms_simulate_preset(sim_preset.c_str(), sim_tokens, seed, dataset,
                                 sim_task.empty() ? nullptr : sim_task.c_str(), t.put()));
      } else {
        if (!sim_task.empty()) config_error("--task applies to --preset; set skew.task_id in the config");
        check(ms_simulate_config(sim_config.c_str(), sim_tokens, seed, dataset, t.put()));
      }
      const fs::path trace_path = g.out_path(sim_name + ".json");
      const fs::path samples_path = g.out_path(sim_name + ".samples.jsonl");
      ensure_dir(trace_path.parent_path());
      check(ms_trace_save(t.get(), trace_path.c_str(), samples_path.c_str()), true);
      Text digest;
      check(ms_trace_digest(t.get(), digest.put()));
      std::cout << "trace   " << trace_path.string() << "\nsamples " << samples_path.string() << "\ndigest  "
                << digest.str() << "\n";
    } else if (*st) {
      auto t = load_trace(st_trace);
      int k = st_k;
      if (st_k_opt->count() == 0) {
        if (!(st_fraction > 0.0 && st_fraction <= 1.0)) config_error("--fraction must be in (0, 1]");
        k = static_cast<int>(st_fraction * routed_experts(t) + 1e-9);
      }
      Text s;
      check(ms_report_layers(t.get(), k, g.fmt(), s.put()));
      emit(g, "stats", s.str());
    } else if (*sel) {
      auto t = load_trace(sa.trace);
      auto m = run_select(g, sa, t);
      const fs::path path = g.out_path(sa.manifest_name);
      ensure_dir(path.parent_path());
      check(ms_manifest_save(m.get(), path.c_str()), true);
      std::cout << summary(g, m, t);
      std::cerr << "manifest " << path.string() << "\n";
    } else if (*cmp) {
      Text s;
      if (cmp_trace_opt->count() > 0) {
        auto t = load_trace(cmp_trace);
        check(ms_report_signal_agreement(t.get(), cmp_fraction, g.fmt(), s.put()));
        emit(g, "signal_agreement", s.str());
      } else {
        if (cmp_manifests.size() < 2) config_error("compare needs --trace or at least two --manifest");
        std::vector<Manifest> ms;
        std::vector<const ms_manifest*> raw;
        for (const auto& p : cmp_manifests) ms.push_back(load_manifest(p));
        for (const auto& m : ms) raw.push_back(m.get());
        check(ms_report_similarity(raw.data(), nullptr, raw.size(), g.fmt(), s.put()));
        emit(g, "similarity", s.str());
      }
    } else if (*stab) {
      ms_stability_params p{};
      p.seed = g.require_seed("stability");
      if (stab_samples.empty()) stab_samples = fs::path(stab_trace).replace_extension(".samples.jsonl").string();
      auto t = load_trace(stab_trace, stab_samples);
      p.fraction = stab_fraction;
      p.trials = stab_trials;
      p.signal = parse_signal(stab_signal);
      if (stab_k_opt->count() > 0) {
        p.k = stab_k;
      } else {
        if (!(stab_k_fraction > 0.0 && stab_k_fraction <= 1.0)) config_error("--k-fraction must be in (0, 1]");
        p.k = static_cast<int>(stab_k_fraction * routed_experts(t) + 1e-9);
      }
      Text s;
      check(ms_report_stability(t.get(), &p, g.fmt(), s.put()));
      emit(g, "stability", s.str());
    } else if (*eq) {
      emit(g, "equivalence", equiv_report(g, ea, parse_layout(eq_layout)));
    } else if (*sw) {
      std::vector<int> ks;
      std::set<int> seen;
      for (double v : parse_number_list(sw_ks, "k")) {
        const int k = static_cast<int>(v);
        if (static_cast<double>(k) != v || k <= 0) config_error("k values must be positive integers");
        if (!seen.insert(k).second) config_error("duplicate k value " + std::to_string(k));
        ks.push_back(k);
      }
      if (ks.empty()) config_error("--ks must list at least one k");
      std::uint64_t seed = 0;
      if (sw_strategy == "random") seed = g.require_seed("random sweep");
      auto t = load_trace(sw_trace);
      const fs::path dir = g.out_path("");
      ensure_dir(dir);
      std::string index = "{\n  \"strategy\": \"" + sw_strategy + "\",\n  \"manifests\": {\n";
      for (std::size_t i = 0; i < ks.size(); ++i) {
        Manifest m;
        if (sw_strategy == "uniform")
          check(ms_select_uniform(t.get(), ks[i], parse_signal(sw_signal), m.put()));
        else
          check(ms_select_random(t.get(), ks[i], seed, m.put()));
        const std::string name = "manifest_k" + std::to_string(ks[i]) + ".json";
        check(ms_manifest_save(m.get(), (dir / name).c_str()), true);
        index += "    \"" + std::to_string(ks[i]) + "\": \"" + name + "\"" + (i + 1 < ks.size() ? ",\n" : "\n");
      }
      index += "  }\n}\n";
      write_text(dir / "sweep_index.json", index);
      std::cout << "wrote " << ks.size() << " manifests and " << (dir / "sweep_index.json").string() << "\n";
    } else if (*rep) {
      Text s;
      if (rep_table == "imbalance") {
        if (rep_traces.empty()) config_error("imbalance needs at least one --trace");
        std::vector<Trace> ts;
        std::vector<const ms_trace*> raw;
        for (const auto& p : rep_traces) ts.push_back(load_trace(p));
        for (const auto& t : ts) raw.push_back(t.get());
        check(ms_report_imbalance(raw.data(), raw.size(), rep_fraction, g.fmt(), s.put()));
      } else if (rep_table == "layers") {
        if (rep_traces.size() != 1) config_error("layers needs exactly one --trace");
        auto t = load_trace(rep_traces.front());
        int k = rep_k;
        if (k == 0) {
          if (!(rep_fraction > 0.0 && rep_fraction <= 1.0)) config_error("--fraction must be in (0, 1]");
          k = static_cast<int>(rep_fraction * routed_experts(t) + 1e-9);
        }
        check(ms_report_layers(t.get(), k, g.fmt(), s.put()));
      } else if (rep_table == "equivalence" || rep_table == "tost" || rep_table == "variance") {
        const ms_equiv_layout layout = rep_table == "equivalence" ? MS_EQUIV_SUMMARY
                                       : rep_table == "tost"      ? MS_EQUIV_TOST
                                                                  : MS_EQUIV_VARIANCE;
        emit(g, rep_table, equiv_report(g, ra, layout));
        return kOk;
      } else if (rep_table == "cost") {
        check(ms_report_adapter_cost(cost_always_on, cost_expert, cost_fraction, g.fmt(), s.put()));
      } else {
        if (rep_manifests.size() < 2) config_error("similarity needs at least two --manifest");
        if (!rep_names.empty() && rep_names.size() != rep_manifests.size())
          config_error("--name count must match --manifest count");
        std::vector<Manifest> ms;
        std::vector<const ms_manifest*> raw;
        std::vector<const char*> names;
        for (const auto& p : rep_manifests) ms.push_back(load_manifest(p));
        for (const auto& m : ms) raw.push_back(m.get());
        for (const auto& n : rep_names) names.push_back(n.c_str());
        check(ms_report_similarity(raw.data(), names.empty() ? nullptr : names.data(), raw.size(), g.fmt(),
                                   s.put()));
      }
      emit(g, rep_table, s.str());
    }
  } catch (const Failure& f) {
    std::cerr << "moe-sieve: " << f.message << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "moe-sieve: " << e.what() << "\n";
    return kInternal;
  }
  return kOk;
}
