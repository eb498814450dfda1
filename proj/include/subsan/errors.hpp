#pragma once

#include <stdexcept>
#include <string>

namespace subsan {

struct InvalidInput : std::runtime_error {
  explicit InvalidInput(const std::string& what) : std::runtime_error(what) {}
};

struct DimensionMismatch : std::runtime_error {
  explicit DimensionMismatch(const std::string& what) : std::runtime_error(what) {}
};

// Eigen gap lambda_d - lambda_{d+1} is not strictly positive; subspace
// perturbation bounds do not apply.
struct DegenerateGap : std::runtime_error {
  explicit DegenerateGap(const std::string& what) : std::runtime_error(what) {}
};

// Automatic dimension selection found no eigenvalue above threshold.
struct EmptySubspace : std::runtime_error {
  explicit EmptySubspace(const std::string& what) : std::runtime_error(what) {}
};

// A trigger vector left the complement subspace it is restricted to.
struct InvalidTrigger : std::runtime_error {
  explicit InvalidTrigger(const std::string& what) : std::runtime_error(what) {}
};

// Exact policy evaluation requested on an environment that is not finite-state.
struct NotTabular : std::runtime_error {
  explicit NotTabular(const std::string& what) : std::runtime_error(what) {}
};

// Malformed experiment config; `path` points at the offending field.
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& path, const std::string& what)
      : std::runtime_error(path + ": " + what), path(path) {}
  std::string path;
};

}  // namespace subsan
