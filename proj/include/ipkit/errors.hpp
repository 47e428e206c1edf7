#pragma once

#include <stdexcept>
#include <string>

namespace ipkit {

// Construction-time shape or content problem in a program, iterate, or system.
struct DimensionMismatch : std::invalid_argument {
  explicit DimensionMismatch(const std::string& what) : std::invalid_argument(what) {}
};

struct NonSymmetricMatrix : std::invalid_argument {
  explicit NonSymmetricMatrix(const std::string& what) : std::invalid_argument(what) {}
};

struct RankDeficientConstraints : std::invalid_argument {
  explicit RankDeficientConstraints(const std::string& what) : std::invalid_argument(what) {}
};

// An operation that requires x > 0, s > 0 was handed an iterate on or past the boundary.
struct NonInteriorIterate : std::domain_error {
  explicit NonInteriorIterate(const std::string& what) : std::domain_error(what) {}
};

// Duality gap too small to normalize by (mu <= 1e-300).
struct ZeroGap : std::domain_error {
  explicit ZeroGap(const std::string& what) : std::domain_error(what) {}
};

// Factorization hit a pivot below threshold; pivot_index identifies the offending row.
struct SingularSystem : std::runtime_error {
  int pivot_index;
  SingularSystem(const std::string& what, int index)
      : std::runtime_error(what + " (pivot index " + std::to_string(index) + ")"),
        pivot_index(index) {}
};

// Iterative solve hit its inner-iteration cap with fallback disabled.
struct MaxInnerIterations : std::runtime_error {
  explicit MaxInnerIterations(const std::string& what) : std::runtime_error(what) {}
};

// Solver's internal residual estimate disagreed with the recomputed residual.
struct InexactnessMismatch : std::runtime_error {
  explicit InexactnessMismatch(const std::string& what) : std::runtime_error(what) {}
};

// The centered-start projection could not satisfy the positivity floor.
struct InfeasibleStart : std::runtime_error {
  explicit InfeasibleStart(const std::string& what) : std::runtime_error(what) {}
};

// A trace handed to a checker lacks the fields the check needs.
struct IncompleteTrace : std::invalid_argument {
  explicit IncompleteTrace(const std::string& what) : std::invalid_argument(what) {}
};

// A verifier was invoked outside the hypothesis under which its bound holds
// (e.g. mu0 >= omega / C, where the contraction guarantee says nothing).
struct HypothesisUnmet : std::domain_error {
  explicit HypothesisUnmet(const std::string& what) : std::domain_error(what) {}
};

// A problem-family name the generator does not recognize.
struct UnsupportedFamily : std::invalid_argument {
  explicit UnsupportedFamily(const std::string& what) : std::invalid_argument(what) {}
};

// Unknown key, unparsable value, or out-of-range value in a run configuration.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace ipkit
