#pragma once

#include "dnres/conic.hpp"

namespace dnres::detail {

/// Reduction of a ConicProgram by singleton-row bound extraction: rows with a
/// single live coefficient become variable bounds; zero-width boxes fix the
/// variable and its column is eliminated; redundant bound rows are dropped
/// (first row in assembly order owns a tied bound). Eliminations cascade.
///
/// Dual recovery is exact: removed redundant rows get zero multipliers and
/// each fixed variable's stationarity residual is backfilled onto the owning
/// bound row, preferring the lower-bound owner for positive residuals.
struct Presolve {
  enum class Outcome { Reduced, Infeasible };

  Outcome outcome = Outcome::Reduced;
  std::string infeasibility; // set when outcome == Infeasible

  ConicProgram reduced;

  // full-space bookkeeping
  std::vector<int> var_map;       // full var -> reduced var, -1 if fixed
  Eigen::VectorXd fixed_value;    // per full var, meaningful when fixed
  std::vector<int> fix_order;     // full var ids in elimination order
  std::vector<int> row_map;       // full A row -> reduced row, -1 if removed
  std::vector<int> eq_row_map;    // full Aeq row -> reduced row, -1 if removed
  std::vector<int> lo_owner_row;  // per full var: A row owning the lower bound
  std::vector<int> hi_owner_row;  // per full var
  std::vector<int> eq_owner_row;  // per full var: Aeq row that fixed it, or -1

  static Presolve run(const ConicProgram& p);

  /// Maps a solution of `reduced` back to the full program, reconstructing
  /// the primal point and all dual multipliers.
  ConicSolution recover(const ConicProgram& full, const ConicSolution& red) const;
};

} // namespace dnres::detail
