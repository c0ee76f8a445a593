#pragma once

#include <functional>

#include "dnres/conic.hpp"

namespace dnres {

/// Relaxation oracle: solve at the given per-binary bounds and report the
/// binary values of the solution. Must be deterministic.
struct BnbProblem {
  int num_binaries = 0;
  std::vector<int> branch_priority; // ties on fractionality: higher first, then lower index
  std::function<ConicSolution(const std::vector<double>& lo, const std::vector<double>& hi,
                              std::vector<double>& binary_values)>
      solve_relaxation;
};

struct BnbOptions {
  double int_tol = 1e-6;
  double rel_gap = 1e-6;
  long max_nodes = 1000000;
  bool integer_objective = false; ///< bounds may be rounded up (master problem)
};

struct BnbResult {
  bool feasible = false;
  double value = 0.0;
  std::vector<uint8_t> binaries;
  ConicSolution solution; ///< relaxation solution at the incumbent node
  long nodes = 0;
  int numerical_failures = 0;
  bool node_limit_hit = false;
};

/// Best-bound branch and bound over relaxed binaries; branches on the most
/// fractional variable. Deterministic given a deterministic oracle.
BnbResult branch_and_bound(const BnbProblem& prob, const BnbOptions& opts = {});

} // namespace dnres
