#pragma once

#include <optional>

#include "dnres/assemble.hpp"
#include "dnres/bnb.hpp"

namespace dnres {

/// Term-by-term post-contingency loss.
struct LossBreakdown {
  double vr = 0.0; ///< worst nodal voltage deviation cost
  double lc = 0.0; ///< load control
  double ls = 0.0; ///< load shedding
  double ll = 0.0; ///< line losses (zero under the linear flow model)
  double total = 0.0;
};

LossBreakdown loss(const Network& net, const OperatorResponse& u, const NetworkState& s,
                   FlowModel flow = FlowModel::Npf);

/// P(d, kappa): optimal value of the fixed-configuration program, +inf when
/// the configuration violates a voltage window.
struct FixedConfigResult {
  double value = 0.0;
  SolveStatus status = SolveStatus::NumericalFailure;
  ConicSolution solution; // duals feed the Benders cut
  BuiltProgram program;
};

FixedConfigResult solve_fixed_config(const Network& net, double dv0, const AttackVector& d,
                                     const ConfigurationVector& kappa,
                                     FlowModel flow = FlowModel::Npf,
                                     const SolverOptions& solver = {});

/// Optimal operator response for a fixed attack.
struct OperatorOptimum {
  double loss = 0.0;
  LossBreakdown breakdown;
  OperatorResponse response;
  NetworkState state;
  long bnb_nodes = 0;
  int numerical_failures = 0;
  bool collapsed = false; ///< set by the cascade stages on voltage collapse
};

/// (O-MISOCP): branch and bound over the connectivity binaries with the
/// conic relaxation at each node; always feasible (full disconnect works).
OperatorOptimum solve_misocp(const Network& net, double dv0, const AttackVector& d,
                             bool use_structural_cuts = true, const SolverOptions& solver = {});

/// The LPF analog: LP relaxations, loss without the line-loss term.
OperatorOptimum solve_milp_lpf(const Network& net, double dv0, const AttackVector& d,
                               bool use_structural_cuts = true, const SolverOptions& solver = {});

/// Shared driver used by the cascade stages as well; empty when no feasible
/// integral connectivity exists (possible in the cascade stages, where the
/// model can run past the feeder's loadability).
std::optional<OperatorOptimum> try_solve_connectivity_bnb(const OperatorProgramBuilder& builder,
                                                          const std::vector<double>& lo,
                                                          const std::vector<double>& hi,
                                                          const SolverOptions& solver);

} // namespace dnres
