#pragma once

#include "dnres/operator_problem.hpp"

namespace dnres {

struct BendersCut {
  enum class Kind { generalized, no_good };
  Kind kind = Kind::generalized;
  /// generalized: sum_i coeffs[i] d_i >= rhs with coeffs = lambda'B on the
  /// attack columns; no_good: the Hamming-distance-1 exclusion of one attack.
  Eigen::VectorXd coeffs; // indexed by node id, zero off the DG nodes
  double rhs = 0.0;
};

struct GbdConfig {
  enum class EpsilonMode { variable, fixed };
  int m = 1; ///< criticality parameter in [0, N_dg - 1]
  EpsilonMode epsilon_mode = EpsilonMode::variable;
  double epsilon_fixed = 0.0;
  long iter_limit = 10000;
  bool lpf_mode = false; ///< run the decomposition on the LP/MILP family
  bool use_structural_cuts = true;
  /// Budget-search probes stop once the master's minimum cardinality passes
  /// this cap (< 0: no cap); the cardinality sequence is non-decreasing, so
  /// nothing with a smaller support can reappear later.
  int stop_above_cardinality = -1;
  SolverOptions solver;
};

enum class GbdStatus { Success, Failure, IterLimit };

struct GbdIteration {
  std::vector<int> attack;
  int cardinality = 0;
  double operator_loss = 0.0;
  std::string cut_kind;
  double epsilon = 0.0;
  double master_time = 0.0, sub_time = 0.0;
};

struct GbdResult {
  GbdStatus status = GbdStatus::Failure;
  AttackVector attack;
  int cardinality = 0;
  double realized_loss = 0.0; ///< NPF operator loss at the returned attack
  long iterations = 0;
  std::vector<GbdIteration> trace;
  double wall_time = 0.0;
  std::string to_json() const;
};

struct MasterResult {
  bool infeasible = false;
  AttackVector attack;
  long nodes = 0;
};

/// (A-MILP): minimum-cardinality attack satisfying all cuts; ties resolved
/// toward the lexicographically smallest support.
MasterResult solve_master(const std::vector<BendersCut>& cuts, const std::vector<int>& dg_nodes,
                          int node_count, const SolverOptions& solver = {});

/// Cut coefficients from the fixed-configuration duals: C = lambda'B over the
/// attack columns (only the DG-cap rows carry attack entries).
BendersCut benders_cut_from_dual(const ConicSolution& sol, const ConicProgram& prog,
                                 double epsilon);

BendersCut no_good_cut(const AttackVector& d_star, const std::vector<int>& dg_nodes);

/// Criticality-parameter heuristic: sort C descending (ties by node id),
/// skip the top min(m, N-k) values, sum the next k.
double epsilon_schedule(const std::vector<double>& coeffs, int k_j, int m);

GbdResult run_min_cardinality(const Network& net, double dv0, double loss_target,
                              const GbdConfig& cfg = {});

struct MaxMinResult {
  AttackVector attack;
  double loss = 0.0;
  double resilience = 100.0;
  long misocp_solves = 0;
};

/// Budget-k-max-loss via binary search on the target loss (largest target
/// whose min-cardinality attack fits the budget).
MaxMinResult run_budget_k_maxmin(const Network& net, double dv0, int k, const GbdConfig& cfg = {},
                                 double resolution_frac = 0.0005);

/// Exact max-min over all cardinality-k attacks; fan-out over threads with a
/// deterministic reduction (max loss, ties to the lexicographically smallest
/// attack).
MaxMinResult brute_force_maxmin(const Network& net, double dv0, int k,
                                bool use_structural_cuts = true, int threads = 0,
                                const SolverOptions& solver = {});

} // namespace dnres
