#pragma once

#include <stdexcept>
#include <string>

namespace revival {

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// A computed quantity violated an identity it must satisfy (e.g. a
/// nonzero imaginary residual in a sum that is real by symmetry).
struct ConsistencyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Not enough detected patches to estimate the revival time.
struct EstimationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

}  // namespace detail
}  // namespace revival
