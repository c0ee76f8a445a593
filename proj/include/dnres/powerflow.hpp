#pragma once

#include <Eigen/Dense>

#include "dnres/network.hpp"

namespace dnres {

/// Post-contingency network state. Nodal vectors are sized N+1 and indexed
/// by node id with entry 0 unused (v[0] is the substation voltage); edge
/// vectors are indexed by the child node of the edge.
struct NetworkState {
  Eigen::VectorXd pc, qc, pg, qg, pt, qt; // nodal, pt = pc - pg
  Eigen::VectorXd P, Q, ell;              // per edge (parent(j), j) at index j
  Eigen::VectorXd v;                      // squared voltages, v[0] = substation

  static NetworkState zeros(int node_count, double v_nom);
};

struct LpfSolution {
  Eigen::VectorXd P, Q; // sending-end flows by child node
  Eigen::VectorXd v;    // v[0] = v_nom - dv0
};

struct SweepConfig {
  double tol = 1e-12; ///< fixed-point tolerance on max |delta ell|
  int max_iter = 200;
};

struct BfsResult {
  Eigen::VectorXd P, Q, ell, v;
  int iterations = 0;
  bool nrpf_ok = true; ///< when false, relaxation exactness is not guaranteed
};

/// Closed-form LinDistFlow: flows are subtree sums, voltages follow the
/// voltage-drop recursion with losses ignored. Single O(N) pass.
LpfSolution solve_lpf(const Network& net, double dv0, const Eigen::VectorXd& pt,
                      const Eigen::VectorXd& qt);

/// Backward-forward sweep for the nonlinear DistFlow equations. Throws on
/// non-convergence or on a voltage driven to zero during iteration.
BfsResult solve_npf_bfs(const Network& net, double dv0, const Eigen::VectorXd& pt,
                        const Eigen::VectorXd& qt, const SweepConfig& cfg = {});

/// max over edges of |ell*v_parent - P^2 - Q^2|; zero means the second-order
/// cone relaxation is exact on this state.
double relaxation_tightness(const Network& net, const NetworkState& s);
double relaxation_tightness(const Network& net, const Eigen::VectorXd& P,
                            const Eigen::VectorXd& Q, const Eigen::VectorXd& ell,
                            const Eigen::VectorXd& v);

} // namespace dnres
