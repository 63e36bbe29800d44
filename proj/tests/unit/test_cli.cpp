// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "temp_dir.hpp"

using moe_sieve::testing::TempDir;
using Catch::Matchers::ContainsSubstring;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; stdout is captured.
Run cli(const std::string& args) {
  const std::string cmd = std::string(MOE_SIEVE_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

// One shared 16-layer trace for the whole binary.
const std::filesystem::path& trace_dir() {
  static TempDir dir;
  static bool made = false;
  if (!made) {
    const auto r = cli("--seed 5 --out " + q(dir.path()) + " simulate --preset olmoe-like --tokens 2048");
    REQUIRE(r.code == 0);
    made = true;
  }
  return dir.path();
}

std::string trace_arg() { return q(trace_dir() / "trace.json"); }

}  // namespace

TEST_CASE("simulate writes a trace, samples and digest") {
  TempDir dir;
  const auto r = cli("--seed 9 --out " + q(dir.path()) + " simulate --preset qwen-like --tokens 640 --name q");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("sha256:"));
  CHECK(std::filesystem::exists(dir / "q.json"));
  CHECK(std::filesystem::exists(dir / "q.samples.jsonl"));
  const auto again = cli("--seed 9 --out " + q(dir.path()) + " simulate --preset qwen-like --tokens 640 --name q2");
  CHECK(slurp(dir / "q.json") == slurp(dir / "q2.json"));
  CHECK(cli("simulate --preset qwen-like").code == 2);
}

TEST_CASE("select with uniform fraction gives sixteen experts per layer") {
  TempDir out;
  const auto r = cli("--format json --out " + q(out.path()) + " select --trace " + trace_arg() +
                     " --strategy uniform --fraction 0.25");
  REQUIRE(r.code == 0);
  const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
  for (const auto& layer : m["per_layer_experts"]) CHECK(layer.size() == 16);
  CHECK(m["budget_total"] == 256);
}

TEST_CASE("greedy select honours the budget") {
  TempDir out;
  const auto r = cli("--format csv --out " + q(out.path()) + " select --trace " + trace_arg() +
                     " --strategy greedy --budget 256 --signal mass");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("total,256,"));
  CHECK(nlohmann::json::parse(slurp(out / "manifest.json"))["budget_total"] == 256);
}

TEST_CASE("random select is reproducible with a seed and requires one") {
  TempDir a;
  TempDir b;
  REQUIRE(cli("--seed 3 --out " + q(a.path()) + " select --trace " + trace_arg() + " --strategy random --k 8")
              .code == 0);
  REQUIRE(cli("--seed 3 --out " + q(b.path()) + " select --trace " + trace_arg() + " --strategy random --k 8")
              .code == 0);
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));
  CHECK(cli("select --trace " + trace_arg() + " --strategy random --k 8").code == 2);
}

TEST_CASE("select argument validation") {
  TempDir out;
  const auto base = "--out " + q(out.path()) + " select --trace " + trace_arg();
  CHECK(cli(base + " --strategy greedy").code == 2);
  CHECK(cli(base + " --strategy uniform --k 8 --fraction 0.25").code == 2);
  CHECK(cli(base + " --strategy threshold --tau 1.5").code == 2);
  CHECK(cli(base + " --bogus").code == 2);
  CHECK(cli("select --trace " + q(out / "missing.json") + " --k 4").code == 3);
  std::ofstream(out / "bad.json") << "{not json";
  CHECK(cli("select --trace " + q(out / "bad.json") + " --k 4").code == 3);
}

TEST_CASE("sweep writes one manifest per k plus an index") {
  TempDir out;
  const auto r = cli("--out " + q(out.path()) + " sweep --trace " + trace_arg() + " --ks 8,16,24,32");
  REQUIRE(r.code == 0);
  for (int k : {8, 16, 24, 32}) {
    const auto m = nlohmann::json::parse(slurp(out / ("manifest_k" + std::to_string(k) + ".json")));
    CHECK(m["budget_total"] == 16 * k);
  }
  const auto index = nlohmann::json::parse(slurp(out / "sweep_index.json"));
  CHECK(index.dump().find("manifest_k24.json") != std::string::npos);
  CHECK(cli("--out " + q(out.path()) + " sweep --trace " + trace_arg() + " --ks 8,8").code == 2);
  CHECK(cli("--out " + q(out.path()) + " sweep --trace " + trace_arg() + " --ks ''").code == 2);
  CHECK(cli("--out " + q(out.path()) + " sweep --trace " + trace_arg() + " --ks 0,4").code == 2);
}

TEST_CASE("stats and reports are byte-identical across runs") {
  const auto a = cli("--format csv stats --trace " + trace_arg() + " --fraction 0.25");
  const auto b = cli("--format csv stats --trace " + trace_arg() + " --fraction 0.25");
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK_THAT(a.out, ContainsSubstring("Layer,CV,Cold%,Top-16 Cov%"));

  const auto r1 = cli("report --table imbalance --trace " + trace_arg() + " --trace " + trace_arg());
  const auto r2 = cli("report --table imbalance --trace " + trace_arg() + " --trace " + trace_arg());
  REQUIRE(r1.code == 0);
  CHECK(r1.out == r2.out);
  CHECK_THAT(r1.out, ContainsSubstring("| olmoe | mean |"));
}

TEST_CASE("stability is seeded and deterministic") {
  const auto args = " stability --trace " + trace_arg() + " --fraction 0.25 --trials 5 --k 16";
  const auto a = cli("--seed 4 --format csv" + args);
  const auto b = cli("--seed 4 --format csv" + args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(cli("--format csv" + args).code == 2);
}

TEST_CASE("equivalence analysis from a seed CSV") {
  const std::string csv = q(MOE_SIEVE_TEST_DATA "/reference_seed_tables.csv");
  const auto r = cli("equiv --csv " + csv + " --layout summary");
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, ContainsSubstring("| OLMoE | Spider | .396 ± .026 | .399 ± .015 | +0.30 | [-2.04, 2.64] | ✗ |"));
  const auto t = cli("report --table tost --csv " + csv);
  REQUIRE(t.code == 0);
  CHECK_THAT(t.out, ContainsSubstring("| Qwen | Spider | -0.93 | .434 | .016 ✓ | <.001 ✓ | .055 |"));
  CHECK(cli("equiv --csv " + csv + " --margins 1,x").code == 2);
  CHECK(cli("equiv --csv " + csv + " --reference nope").code == 2);
  TempDir dir;
  std::ofstream(dir / "s.csv") << "model,task\n";
  CHECK(cli("equiv --csv " + q(dir / "s.csv")).code == 3);
}

TEST_CASE("compare and cost reports") {
  const auto agree = cli("--format csv compare --trace " + trace_arg());
  REQUIRE(agree.code == 0);
  CHECK_THAT(agree.out, ContainsSubstring("mean,"));

  TempDir out;
  REQUIRE(cli("--out " + q(out.path()) + " select --trace " + trace_arg() + " --k 16 --manifest a.json").code == 0);
  REQUIRE(cli("--out " + q(out.path()) + " select --trace " + trace_arg() + " --k 16 --signal mass --manifest b.json")
              .code == 0);
  const auto sim = cli("--format csv compare --manifest " + q(out / "a.json") + " --manifest " + q(out / "b.json"));
  REQUIRE(sim.code == 0);
  CHECK_THAT(sim.out, ContainsSubstring("olmoe-like,1.00,"));

  const auto cost = cli("--format csv report --table cost --always-on-params 9.5e6 --expert-params 302e6");
  REQUIRE(cost.code == 0);
  CHECK_THAT(cost.out, ContainsSubstring("72.7%"));
}

TEST_CASE("help lists every subcommand and flag") {
  const auto top = cli("--help");
  CHECK(top.code == 0);
  for (const char* s : {"simulate", "stats", "select", "compare", "stability", "equiv", "sweep", "report", "--format",
                        "--out", "--seed"})
    CHECK_THAT(top.out, ContainsSubstring(s));
  const auto sel = cli("select --help");
  for (const char* f : {"--trace", "--strategy", "--signal", "--fraction", "--k", "--budget", "--tau", "--manifest"})
    CHECK_THAT(sel.out, ContainsSubstring(f));
  const auto sw = cli("sweep --help");
  CHECK_THAT(sw.out, ContainsSubstring("--ks"));
  CHECK(cli("frobnicate").code == 2);
}
