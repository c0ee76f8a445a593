#pragma once

#include "dnres/operator_problem.hpp"

namespace dnres {

/// Outcome of the two-stage autonomous-disconnect simulation.
struct CascadeOutcome {
  OperatorResponse u_in, u_nr;
  NetworkState x_in, x_nr;
  double loss_ad = 0.0; ///< loss at the final state
  LossBreakdown breakdown;
  bool collapsed = false; ///< stage ran past loadability: total blackout
};

/// First stage: only DGs trip. Load control is pinned to unity, the load
/// voltage windows are dropped from the state set, DG windows remain.
OperatorOptimum cascade_intermediate(const Network& net, double dv0, const AttackVector& d,
                                     const SolverOptions& solver = {});

/// Second stage: loads whose intermediate voltage violated their window trip;
/// DG disconnects are inherited; connected loads carry full demand.
OperatorOptimum cascade_final(const Network& net, double dv0, const std::vector<uint8_t>& kg_in,
                              const Eigen::VectorXd& v_in, const SolverOptions& solver = {});

CascadeOutcome get_cascade_final_state(const Network& net, double dv0, const AttackVector& d,
                                       const SolverOptions& solver = {});

/// Loss matrix of the randomized nested-attack scheme: Y(k-1, t) is the loss
/// of the first-k-nodes attack of permutation t; V is the rowwise max.
struct RandomizedRun {
  int permutations = 0;
  uint64_t seed = 0;
  Eigen::MatrixXd Y; // N_dg rows, Z columns
  Eigen::VectorXd V; // per-cardinality worst loss
  double nominal_loss = 0.0; ///< cascade loss of the empty attack
  std::string to_csv() const;
};

/// Mersenne-twister (mt19937_64) permutations via Fisher-Yates with modulo
/// draws; identical seeds give bit-identical Y on any platform.
RandomizedRun randomized_worst_case(const Network& net, double dv0, int permutations,
                                    uint64_t seed, int threads = 0,
                                    const SolverOptions& solver = {});

struct ResiliencePoint {
  int k = 0;
  double resilience_mm = 0.0;
  double resilience_ad = 0.0;
  double value_of_response = 0.0;
};

/// Aligns the max-min and autonomous-disconnect losses on cardinality; entry
/// k = 0 uses the nominal losses.
std::vector<ResiliencePoint> resilience_curves(const RandomizedRun& run,
                                               const Eigen::VectorXd& maxmin_loss_by_k,
                                               double nominal_mm_loss, double loss_max);

} // namespace dnres
