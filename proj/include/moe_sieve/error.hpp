// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 The moe-sieve Authors.

#pragma once

#include <stdexcept>
#include <string>

namespace moe_sieve {

enum class ErrorKind {
  invalid_argument,  // caller passed parameters outside an operation's domain
  schema,            // input data violates a format or invariant
  io,                // file could not be read or written
  domain,            // statistic undefined for the given data (zero mean, ...)
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace moe_sieve
