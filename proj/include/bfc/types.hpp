#pragma once

#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace bfc {

using Vec = Eigen::VectorXd;

/// Raised when an operation receives arguments outside its domain
/// (negative time, mismatched dimensions, non-finite inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised for inconsistent or invalid scenario/controller configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when integration produces non-finite state.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-dimension strict containment result plus its conjunction.
struct Containment {
  std::vector<bool> per_dim;
  bool all = true;
};

namespace detail {

inline void require_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError(std::string(what) + ": time must be finite and >= 0");
  }
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DomainError(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                      ", expected " + std::to_string(want) + ")");
  }
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

}  // namespace detail

}  // namespace bfc
