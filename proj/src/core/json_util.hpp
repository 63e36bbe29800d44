// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#pragma once

#include <json.hpp>
#include <string>

#include "moe_sieve/core.hpp"
#include "moe_sieve/error.hpp"

namespace moe_sieve::detail {

using json = nlohmann::json;

inline json parse_json(std::string_view text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::schema, what + ": malformed JSON: " + e.what());
  }
}

inline const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(ErrorKind::schema, where + ": missing field '" + key + "'");
  return *it;
}

inline std::int64_t as_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) fail(ErrorKind::schema, where + ": expected an integer");
  if (v.is_number_unsigned() && v.get<std::uint64_t>() > static_cast<std::uint64_t>(INT64_MAX))
    fail(ErrorKind::schema, where + ": integer out of range");
  return v.get<std::int64_t>();
}

inline int as_int32(const json& v, const std::string& where) {
  const auto x = as_int(v, where);
  if (x < INT32_MIN || x > INT32_MAX) fail(ErrorKind::schema, where + ": integer out of range");
  return static_cast<int>(x);
}

inline double as_number(const json& v, const std::string& where) {
  if (!v.is_number()) fail(ErrorKind::schema, where + ": expected a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& where) {
  if (!v.is_string()) fail(ErrorKind::schema, where + ": expected a string");
  return v.get<std::string>();
}

inline void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                                const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) fail(ErrorKind::schema, where + ": unknown field '" + it.key() + "'");
  }
}

inline json spec_to_json(const ModelSpec& s) {
  return json{{"name", s.name},
              {"n_layers", s.n_layers},
              {"n_routed", s.n_routed},
              {"n_shared", s.n_shared},
              {"top_k", s.top_k},
              {"expert_ffn_fraction", s.expert_ffn_fraction}};
}

inline ModelSpec spec_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) fail(ErrorKind::schema, where + ": expected an object");
  reject_unknown_keys(j, {"name", "n_layers", "n_routed", "n_shared", "top_k", "expert_ffn_fraction"},
                      where);
  ModelSpec s;
  s.name = as_string(require(j, "name", where), where + ".name");
  s.n_layers = as_int32(require(j, "n_layers", where), where + ".n_layers");
  s.n_routed = as_int32(require(j, "n_routed", where), where + ".n_routed");
  s.n_shared = as_int32(require(j, "n_shared", where), where + ".n_shared");
  s.top_k = as_int32(require(j, "top_k", where), where + ".top_k");
  s.expert_ffn_fraction =
      as_number(require(j, "expert_ffn_fraction", where), where + ".expert_ffn_fraction");
  s.validate();
  return s;
}

}  // namespace moe_sieve::detail
