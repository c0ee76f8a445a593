#include "dnres/powerflow.hpp"

#include <cmath>

namespace dnres {

NetworkState NetworkState::zeros(int n, double v_nom) {
  NetworkState s;
  s.pc = s.qc = s.pg = s.qg = s.pt = s.qt = Eigen::VectorXd::Zero(n + 1);
  s.P = s.Q = s.ell = Eigen::VectorXd::Zero(n + 1);
  s.v = Eigen::VectorXd::Constant(n + 1, v_nom);
  return s;
}

namespace {

void check_sizes(const Network& net, const Eigen::VectorXd& pt, const Eigen::VectorXd& qt) {
  if (pt.size() != net.node_count() + 1 || qt.size() != net.node_count() + 1)
    throw validation_error("consumption arrays must have size N+1");
}

} // namespace

LpfSolution solve_lpf(const Network& net, double dv0, const Eigen::VectorXd& pt,
                      const Eigen::VectorXd& qt) {
  check_sizes(net, pt, qt);
  const int n = net.node_count();
  LpfSolution sol;
  sol.P = Eigen::VectorXd::Zero(n + 1);
  sol.Q = Eigen::VectorXd::Zero(n + 1);
  sol.v = Eigen::VectorXd::Zero(n + 1);
  const auto& topo = net.topo_order();
  for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
    int j = *it;
    double sp = pt[j], sq = qt[j];
    for (int c : net.children(j)) {
      sp += sol.P[c];
      sq += sol.Q[c];
    }
    sol.P[j] = sp;
    sol.Q[j] = sq;
  }
  sol.v[0] = net.v_nom - dv0;
  for (int j : topo)
    sol.v[j] = sol.v[net.parent(j)] - 2.0 * (net.line_r(j) * sol.P[j] + net.line_x(j) * sol.Q[j]);
  return sol;
}

BfsResult solve_npf_bfs(const Network& net, double dv0, const Eigen::VectorXd& pt,
                        const Eigen::VectorXd& qt, const SweepConfig& cfg) {
  check_sizes(net, pt, qt);
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw validation_error("bad SweepConfig");
  const int n = net.node_count();
  const auto& topo = net.topo_order();
  const double v0 = net.v_nom - dv0;
  if (!(v0 > 0.0)) throw validation_error("substation voltage must stay positive");

  BfsResult res;
  res.nrpf_ok = net.check_nrpf({pt.data(), size_t(n + 1)}, {qt.data(), size_t(n + 1)});

  LpfSolution lpf = solve_lpf(net, dv0, pt, qt);
  res.P = lpf.P;
  res.Q = lpf.Q;
  res.ell = Eigen::VectorXd::Zero(n + 1);
  res.v = Eigen::VectorXd::Constant(n + 1, v0);
  res.v[0] = v0;

  Eigen::VectorXd ell_new(n + 1);
  for (int t = 1; t <= cfg.max_iter; ++t) {
    // Backward: currents from the previous iterate, then flows leaf-to-root.
    for (int j = 1; j <= n; ++j) {
      double vi = res.v[net.parent(j)];
      if (!(vi > 0.0))
        throw validation_error("voltage driven to zero at node " +
                               std::to_string(net.parent(j)) + " (infeasible operating point)");
      ell_new[j] = (res.P[j] * res.P[j] + res.Q[j] * res.Q[j]) / vi;
    }
    if (!ell_new.allFinite())
      throw validation_error("sweep diverged (infeasible operating point)");
    double max_step = 0.0;
    for (int j = 1; j <= n; ++j) max_step = std::max(max_step, std::abs(ell_new[j] - res.ell[j]));
    res.ell = ell_new;
    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
      int j = *it;
      double sp = pt[j] + net.line_r(j) * res.ell[j];
      double sq = qt[j] + net.line_x(j) * res.ell[j];
      for (int c : net.children(j)) {
        sp += res.P[c];
        sq += res.Q[c];
      }
      res.P[j] = sp;
      res.Q[j] = sq;
    }
    // Forward: voltages root-to-leaf.
    for (int j : topo) {
      double r = net.line_r(j), x = net.line_x(j);
      res.v[j] = res.v[net.parent(j)] - 2.0 * (r * res.P[j] + x * res.Q[j]) +
                 (r * r + x * x) * res.ell[j];
    }
    res.iterations = t;
    if (max_step <= cfg.tol) return res;
  }
  throw validation_error("backward-forward sweep did not converge within " +
                         std::to_string(cfg.max_iter) + " iterations");
}

double relaxation_tightness(const Network& net, const Eigen::VectorXd& P,
                            const Eigen::VectorXd& Q, const Eigen::VectorXd& ell,
                            const Eigen::VectorXd& v) {
  double worst = 0.0;
  for (int j = 1; j <= net.node_count(); ++j) {
    double res = std::abs(ell[j] * v[net.parent(j)] - P[j] * P[j] - Q[j] * Q[j]);
    worst = std::max(worst, res);
  }
  return worst;
}

double relaxation_tightness(const Network& net, const NetworkState& s) {
  if (s.v.size() != net.node_count() + 1) throw validation_error("state size mismatch");
  return relaxation_tightness(net, s.P, s.Q, s.ell, s.v);
}

} // namespace dnres
