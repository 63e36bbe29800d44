// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <catch_amalgamated.hpp>

#include <fstream>

#include "moe_sieve/core.hpp"
#include "moe_sieve/error.hpp"
#include "moe_sieve/rng.hpp"
#include "test_support.hpp"

using namespace moe_sieve;
using moe_sieve::testing::TempDir;
using moe_sieve::testing::trace_from_rows;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected moe_sieve::Error");
  return ErrorKind::internal;
}

std::string error_text(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kTwoLayer = R"({
  "spec": {"name": "toy", "n_layers": 2, "n_routed": 4, "n_shared": 0, "top_k": 2, "expert_ffn_fraction": 1.0},
  "dataset_id": "toy-set",
  "n_tokens": 5,
  "counts": [[4, 3, 2, 1], [5, 5, 0, 0]],
  "mass": [[2.0, 1.5, 1.0, 0.5], [2.5, 2.5, 0.0, 0.0]]
})";

}  // namespace

TEST_CASE("model presets carry the published architecture shapes") {
  const auto o = presets::olmoe();
  CHECK(o == ModelSpec{"olmoe", 16, 64, 0, 8, 1.0});
  const auto q = presets::qwen();
  CHECK(q == ModelSpec{"qwen", 24, 60, 4, 4, 0.25});
  const auto d = presets::deepseek();
  CHECK(d == ModelSpec{"deepseek", 27, 64, 2, 6, 0.13});
  CHECK(presets::by_name("qwen") == q);
  CHECK(kind_of([] { presets::by_name("mixtral"); }) == ErrorKind::invalid_argument);
}

TEST_CASE("model spec validation") {
  CHECK_NOTHROW(ModelSpec{"m", 1, 4, 0, 4, 1.0}.validate());
  CHECK(kind_of([] { ModelSpec{"m", 1, 4, 0, 5, 1.0}.validate(); }) == ErrorKind::schema);
  CHECK(kind_of([] { ModelSpec{"m", 0, 4, 0, 1, 1.0}.validate(); }) == ErrorKind::schema);
  CHECK(kind_of([] { ModelSpec{"m", 1, 4, -1, 1, 1.0}.validate(); }) == ErrorKind::schema);
  CHECK(kind_of([] { ModelSpec{"m", 1, 4, 0, 1, 0.0}.validate(); }) == ErrorKind::schema);
}

TEST_CASE("enum names round-trip") {
  for (auto s : {Signal::counts, Signal::mass}) CHECK(parse_signal(to_string(s)) == s);
  for (auto s : {Strategy::uniform_topk, Strategy::greedy, Strategy::coverage_threshold, Strategy::random})
    CHECK(parse_strategy(to_string(s)) == s);
  CHECK(kind_of([] { parse_signal("weight"); }) == ErrorKind::invalid_argument);
}

TEST_CASE("valid two-layer trace parses with forced row sums") {
  const auto t = parse_trace(kTwoLayer);
  CHECK(t.n_layers() == 2);
  CHECK(t.n_tokens() == 5);
  for (int l = 0; l < 2; ++l) {
    std::int64_t s = 0;
    for (auto c : t.counts_row(l)) s += c;
    CHECK(s == t.n_tokens() * t.spec().top_k);
  }
  CHECK(t.count(1, 1) == 5);
  CHECK(t.mass(0, 3) == 0.5);
  CHECK_FALSE(t.has_samples());
}

TEST_CASE("mass above count is rejected with its location") {
  std::string text = kTwoLayer;
  text.replace(text.find("0.5]"), 3, "1.5");
  const auto msg = error_text([&] { parse_trace(text); });
  CHECK_THAT(msg, ContainsSubstring("mass exceeds count"));
  CHECK_THAT(msg, ContainsSubstring("layer 0 expert 3"));
}

TEST_CASE("trace schema violations are located errors") {
  SECTION("row sum") {
    std::string text = kTwoLayer;
    text.replace(text.find("[5, 5, 0, 0]"), 12, "[5, 4, 0, 0]");
    CHECK_THAT(error_text([&] { parse_trace(text); }), ContainsSubstring("layer 1 count sum 9"));
  }
  SECTION("negative count") {
    const auto t = R"({"spec": {"name": "x", "n_layers": 1, "n_routed": 2, "n_shared": 0, "top_k": 1,
      "expert_ffn_fraction": 1.0}, "dataset_id": "d", "n_tokens": 1, "counts": [[2, -1]], "mass": [[0, 0]]})";
    CHECK(kind_of([&] { parse_trace(t); }) == ErrorKind::schema);
  }
  SECTION("wrong row length") {
    std::string text = kTwoLayer;
    text.replace(text.find("[4, 3, 2, 1]"), 12, "[4, 3, 3]");
    CHECK_THAT(error_text([&] { parse_trace(text); }), ContainsSubstring("trace.counts[0]"));
  }
  SECTION("unknown key") {
    std::string text = kTwoLayer;
    text.insert(text.find("\"dataset_id\""), "\"extra\": 1, ");
    CHECK(kind_of([&] { parse_trace(text); }) == ErrorKind::schema);
  }
  SECTION("malformed syntax") { CHECK(kind_of([] { parse_trace("{\"spec\": "); }) == ErrorKind::schema); }
  SECTION("fractional count") {
    std::string text = kTwoLayer;
    text.replace(text.find("[4, 3, 2, 1]"), 12, "[4, 3, 2.5, 0.5]");
    CHECK(kind_of([&] { parse_trace(text); }) == ErrorKind::schema);
  }
}

TEST_CASE("trace save and load round-trip with samples") {
  std::vector<SampleRecord> samples{
      {"a", 2, {{0, 0, 2, 1.2}, {0, 1, 2, 0.7}, {1, 2, 4, 3.0}}},
      {"b", 1, {{0, 1, 1, 0.25}, {0, 3, 1, 1.0}, {1, 0, 2, 0.5}}},
  };
  const auto t = RoutingTrace::from_samples(moe_sieve::testing::tiny_spec(2, 4, 2), "ds", samples);
  CHECK(t.n_tokens() == 3);
  CHECK(t.count(0, 1) == 3);
  CHECK_THAT(t.mass(0, 1), WithinAbs(0.95, 1e-15));

  TempDir dir;
  save_trace(t, dir / "t.json", dir / "t.jsonl");
  const auto back = load_trace(dir / "t.json", dir / "t.jsonl");
  CHECK(back.spec() == t.spec());
  CHECK(back.dataset_id() == "ds");
  CHECK(std::equal(back.counts().begin(), back.counts().end(), t.counts().begin()));
  CHECK(std::equal(back.mass().begin(), back.mass().end(), t.mass().begin()));
  REQUIRE(back.samples().size() == 2);
  CHECK(back.samples()[0] == samples[0]);
  CHECK(back.samples()[1] == samples[1]);
  CHECK(serialize_trace(back) == serialize_trace(t));
  CHECK(back.digest() == t.digest());
}

TEST_CASE("sample records are checked against the trace") {
  const auto spec = moe_sieve::testing::tiny_spec(1, 2, 1);
  SECTION("duplicate id") {
    std::vector<SampleRecord> s{{"a", 1, {{0, 0, 1, 0.5}}}, {"a", 1, {{0, 1, 1, 0.5}}}};
    CHECK_THAT(error_text([&] { RoutingTrace::from_samples(spec, "d", s); }), ContainsSubstring("duplicate"));
  }
  SECTION("count below one") {
    std::vector<SampleRecord> s{{"a", 1, {{0, 0, 1, 0.5}, {0, 1, 0, 0.0}}}};
    CHECK(kind_of([&] { RoutingTrace::from_samples(spec, "d", s); }) == ErrorKind::schema);
  }
  SECTION("per-cell mismatch against an explicit trace") {
    const auto text = R"({"spec": {"name": "x", "n_layers": 1, "n_routed": 2, "n_shared": 0, "top_k": 1,
      "expert_ffn_fraction": 1.0}, "dataset_id": "d", "n_tokens": 2, "counts": [[1, 1]], "mass": [[0.5, 0.5]]})";
    const std::string samples = R"({"sample_id": "a", "n_tokens": 2, "entries": [[0, 0, 2, 1.0]]})";
    CHECK_THAT(error_text([&] { parse_trace(text, samples); }), ContainsSubstring("count total differs"));
  }
}

TEST_CASE("digest is a pure function of spec, counts and mass") {
  const auto a = parse_trace(kTwoLayer);
  std::string renamed = kTwoLayer;
  renamed.replace(renamed.find("toy-set"), 7, "other");
  const auto b = parse_trace(renamed);
  CHECK(a.digest() == b.digest());
  CHECK(a.digest().rfind("sha256:", 0) == 0);
  CHECK(a.digest().size() == 7 + 64);
  std::string changed = kTwoLayer;
  changed.replace(changed.find("0.5]"), 3, "0.4");
  CHECK(parse_trace(changed).digest() != a.digest());
}

namespace {

SelectionManifest sample_manifest() {
  SelectionManifest m;
  m.spec = moe_sieve::testing::tiny_spec(2, 4, 2);
  m.dataset_id = "toy";
  m.strategy = Strategy::uniform_topk;
  m.signal = Signal::counts;
  m.per_layer_experts = {{0, 2}, {1, 3}};
  m.budget_total = 4;
  m.profile_digest = "sha256:abc";
  m.params.k = 2;
  return m;
}

}  // namespace

TEST_CASE("manifest round-trip preserves every field") {
  TempDir dir;
  auto m = sample_manifest();
  save_manifest(m, dir / "m.json");
  CHECK(load_manifest(dir / "m.json") == m);

  m.strategy = Strategy::random;
  m.seed = 18446744073709551615ULL;
  m.params = {};
  m.params.fraction = 0.5;
  save_manifest(m, dir / "m2.json");
  CHECK(load_manifest(dir / "m2.json") == m);
  CHECK_THAT(read_file(dir / "m2.json"), ContainsSubstring("moe-sieve-manifest/1"));
}

TEST_CASE("manifest validation rejects malformed expert sets") {
  auto m = sample_manifest();
  m.per_layer_experts[0] = {2, 2};
  CHECK_THAT(error_text([&] { m.validate(); }), ContainsSubstring("duplicate"));

  auto text = serialize_manifest(sample_manifest());
  const auto at = text.find("3\n");
  REQUIRE(at != std::string::npos);
  text.replace(at, 1, "4");
  CHECK_THAT(error_text([&] { parse_manifest(text); }), ContainsSubstring("expert index 4"));

  m = sample_manifest();
  m.budget_total = 5;
  CHECK(kind_of([&] { m.validate(); }) == ErrorKind::schema);

  m = sample_manifest();
  m.per_layer_experts[1] = {3, 1};
  CHECK(kind_of([&] { m.validate(); }) == ErrorKind::schema);

  CHECK(kind_of([] { parse_manifest(R"({"version": "moe-sieve-manifest/2"})"); }) == ErrorKind::schema);
}

TEST_CASE("adapter cost estimation") {
  SECTION("published total parameter counts") {
    // 311.5M full and 85.0M at a quarter of the experts: always-on 9.5M, experts 302M.
    const auto c = estimate_adapter_cost({9.5e6, 302.0e6, 0.25});
    CHECK_THAT(c.trainable_params, WithinAbs(85.0e6, 1.0));
    CHECK_THAT(c.reduction_vs_full, WithinAbs(0.727, 0.0005));
  }
  SECTION("pure expert pool") {
    const auto c = estimate_adapter_cost({0.0, 1000.0, 0.25});
    CHECK_THAT(c.reduction_vs_full, WithinAbs(0.75, 1e-15));
  }
  SECTION("no expert parameters") {
    const auto c = estimate_adapter_cost({100.0, 0.0, 0.3});
    CHECK(c.trainable_params == 100.0);
    CHECK(c.reduction_vs_full == 0.0);
  }
  SECTION("full selection") { CHECK(estimate_adapter_cost({3.0, 7.0, 1.0}).reduction_vs_full == 0.0); }
  SECTION("errors") {
    CHECK(kind_of([] { estimate_adapter_cost({0.0, 0.0, 0.5}); }) == ErrorKind::domain);
    CHECK(kind_of([] { estimate_adapter_cost({1.0, 1.0, 1.5}); }) == ErrorKind::invalid_argument);
  }
  SECTION("monotone in the selected fraction") {
    double prev = -1.0;
    for (int i = 0; i <= 100; ++i) {
      const double t = estimate_adapter_cost({12.0, 345.0, i / 100.0}).trainable_params;
      CHECK(t >= prev);
      prev = t;
    }
  }
}

TEST_CASE("atomic write replaces file content") {
  TempDir dir;
  write_file_atomic(dir / "x.txt", "one");
  write_file_atomic(dir / "x.txt", "two");
  CHECK(read_file(dir / "x.txt") == "two");
  CHECK(kind_of([&] { read_file(dir / "missing"); }) == ErrorKind::io);
  CHECK(kind_of([&] { write_file_atomic(dir / "no" / "such" / "x", "a"); }) == ErrorKind::io);
}

TEST_CASE("rng streams are platform-stable") {
  // splitmix64 reference values for seed 0 (first outputs of the canonical generator).
  CHECK(rng::splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(rng::hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(rng::hash_string("a") == 0xaf63dc4c8601ec8cULL);
  rng::Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

  rng::Rng g(7);
  for (int i = 0; i < 200; ++i) {
    auto s = g.sample_without_replacement(10, 4);
    std::sort(s.begin(), s.end());
    CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
    CHECK(s.front() >= 0);
    CHECK(s.back() < 10);
  }
}
