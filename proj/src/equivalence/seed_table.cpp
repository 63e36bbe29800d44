// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "moe_sieve/core.hpp"
#include "moe_sieve/equivalence.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve::equivalence {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

const std::vector<double>& SeedResultTable::condition(std::string_view name) const {
  auto it = conditions.find(std::string(name));
  if (it == conditions.end())
    fail(ErrorKind::invalid_argument, model + "/" + task + ": no condition '" + std::string(name) + "'");
  return it->second;
}

std::vector<SeedResultTable> parse_seed_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  bool header = false;

  struct Cell {
    std::string model, task;
    std::map<std::string, std::map<long long, double>> by_condition;
  };
  std::vector<Cell> cells;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    const std::string where = "seed csv line " + std::to_string(lineno);
    if (!header) {
      const std::vector<std::string> expected{"model", "task", "condition", "seed", "accuracy"};
      if (fields != expected)
        fail(ErrorKind::schema, where + ": expected header model,task,condition,seed,accuracy");
      header = true;
      continue;
    }
    if (fields.size() != 5) fail(ErrorKind::schema, where + ": expected 5 columns");
    long long seed = 0;
    {
      const auto& s = fields[3];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(ErrorKind::schema, where + ": seed is not an integer");
    }
    double acc = 0.0;
    {
      const auto& s = fields[4];
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), acc);
      if (ec != std::errc{} || ptr != s.data() + s.size())
        fail(ErrorKind::schema, where + ": accuracy is not a number");
    }
    if (!(acc >= 0.0 && acc <= 1.0)) fail(ErrorKind::schema, where + ": accuracy outside [0, 1]");
    if (fields[0].empty() || fields[1].empty() || fields[2].empty())
      fail(ErrorKind::schema, where + ": empty model, task or condition");

    auto it = std::find_if(cells.begin(), cells.end(), [&](const Cell& c) {
      return c.model == fields[0] && c.task == fields[1];
    });
    if (it == cells.end()) {
      cells.push_back({fields[0], fields[1], {}});
      it = std::prev(cells.end());
    }
    if (!it->by_condition[fields[2]].emplace(seed, acc).second)
      fail(ErrorKind::schema, where + ": duplicate seed " + std::to_string(seed) + " for " +
                                  fields[0] + "/" + fields[1] + "/" + fields[2]);
  }
  if (!header) fail(ErrorKind::schema, "seed csv: missing header");

  std::vector<SeedResultTable> out;
  for (auto& c : cells) {
    SeedResultTable t;
    t.model = c.model;
    t.task = c.task;
    const auto& first = c.by_condition.begin()->second;
    for (const auto& [seed, _] : first) t.seeds.push_back(seed);
    if (t.seeds.size() < 2)
      fail(ErrorKind::schema, "seed csv: " + c.model + "/" + c.task + " has fewer than 2 seeds");
    for (auto& [name, values] : c.by_condition) {
      std::vector<double> v;
      for (long long s : t.seeds) {
        auto f = values.find(s);
        if (f == values.end() || values.size() != t.seeds.size())
          fail(ErrorKind::schema, "seed csv: " + c.model + "/" + c.task + " condition '" + name +
                                      "' is not aligned with the other conditions' seeds");
        v.push_back(f->second);
      }
      t.conditions.emplace(name, std::move(v));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SeedResultTable> load_seed_csv(const std::filesystem::path& path) {
  return parse_seed_csv(read_file(path));
}

}  // namespace moe_sieve::equivalence
