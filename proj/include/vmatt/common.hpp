// Copyright (c) 2026 vmatt contributors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vmatt {

// All library failures derive from Error and carry a short machine-readable
// kind tag. The CLI prints them as "error: <kind>: <message>".
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

// Shape or axis disagreement between tensors and an op's signature.
struct DimensionError : Error {
  explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

// A documented precondition was violated (value range, argument domain).
struct ContractError : Error {
  explicit ContractError(const std::string& msg) : Error("contract", msg) {}
};

// Operation issued against an object in the wrong lifecycle state.
struct StateError : Error {
  explicit StateError(const std::string& msg) : Error("state", msg) {}
};

// Bad or inconsistent configuration (CLI flags, config file, checkpoint).
struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

// NaN/Inf produced by a numeric kernel; surfaced, never propagated.
struct NumericsError : Error {
  explicit NumericsError(const std::string& msg) : Error("numerics", msg) {}
};

// Filesystem and codec failures. `kind` may be refined by the caller
// (bad-header, index-gap, dim-mismatch) for distinct CLI diagnostics.
struct IoError : Error {
  explicit IoError(const std::string& msg) : Error("io", msg) {}
  IoError(std::string kind, const std::string& msg) : Error(std::move(kind), msg) {}
};

using Shape = std::vector<int>;

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw ContractError(msg);
}

inline void require_dims(bool cond, const std::string& msg) {
  if (!cond) throw DimensionError(msg);
}

}  // namespace vmatt
