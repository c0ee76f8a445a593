#include "dnres/operator_problem.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace dnres {

LossBreakdown loss(const Network& net, const OperatorResponse& u, const NetworkState& s,
                   FlowModel flow) {
  LossBreakdown out;
  double dev = 0.0;
  for (int i = 1; i <= net.node_count(); ++i) dev = std::max(dev, std::abs(net.v_nom - s.v[i]));
  out.vr = net.cost_vr * dev;
  for (int i : net.load_nodes()) {
    const LoadSpec& L = *net.load(i);
    out.lc += L.cost_lc * (1.0 - u.beta[i]) * L.pc_max;
    out.ls += (L.cost_ls - L.cost_lc) * double(u.kc[i]) * L.pc_max;
  }
  if (flow == FlowModel::Npf)
    for (int j = 1; j <= net.node_count(); ++j) out.ll += net.cost_ll * net.line_r(j) * s.ell[j];
  out.total = out.vr + out.lc + out.ls + out.ll;
  return out;
}

FixedConfigResult solve_fixed_config(const Network& net, double dv0, const AttackVector& d,
                                     const ConfigurationVector& kappa, FlowModel flow,
                                     const SolverOptions& solver) {
  ProblemShape shape;
  shape.flow = flow;
  OperatorProgramBuilder builder(net, dv0, d, shape);
  FixedConfigResult res;
  res.program = builder.fixed(kappa);
  res.solution = solve(res.program.prog, solver);
  res.status = res.solution.status;
  if (res.status == SolveStatus::Optimal)
    res.value = res.solution.objective;
  else if (res.status == SolveStatus::Infeasible)
    res.value = std::numeric_limits<double>::infinity();
  else
    res.value = std::numeric_limits<double>::quiet_NaN();
  return res;
}

std::optional<OperatorOptimum> try_solve_connectivity_bnb(const OperatorProgramBuilder& builder,
                                                          const std::vector<double>& lo,
                                                          const std::vector<double>& hi,
                                                          const SolverOptions& solver) {
  const auto& bins = builder.binaries();
  BnbProblem prob;
  prob.num_binaries = int(bins.size());
  for (const auto& b : bins) prob.branch_priority.push_back(b.depth);

  // Relaxation bounds are the intersection of the caller's and the node's.
  prob.solve_relaxation = [&](const std::vector<double>& nlo, const std::vector<double>& nhi,
                              std::vector<double>& vals) {
    std::vector<double> l(nlo.size()), h(nhi.size());
    for (size_t k = 0; k < nlo.size(); ++k) {
      l[k] = std::max(nlo[k], lo[k]);
      h[k] = std::min(nhi[k], hi[k]);
    }
    BuiltProgram bp = builder.relaxed(l, h);
    ConicSolution sol = solve(bp.prog, solver);
    vals.assign(bins.size(), 0.0);
    if (sol.status == SolveStatus::Optimal)
      for (size_t k = 0; k < bins.size(); ++k) {
        int col = bins[k].is_dg ? bp.col_kg[bins[k].node] : bp.col_kc[bins[k].node];
        vals[k] = sol.w[col];
      }
    return sol;
  };

  BnbResult bnb = branch_and_bound(prob);
  if (!bnb.feasible) return std::nullopt;

  // Re-extract state/response at the incumbent's exact binary assignment.
  std::vector<double> l(bins.size()), h(bins.size());
  for (size_t k = 0; k < bins.size(); ++k) l[k] = h[k] = double(bnb.binaries[k]);
  BuiltProgram bp = builder.relaxed(l, h);

  OperatorOptimum out;
  out.loss = bnb.value;
  out.bnb_nodes = bnb.nodes;
  out.numerical_failures = bnb.numerical_failures;
  out.state = builder.extract_state(bp, bnb.solution);
  out.response = builder.extract_response(bp, bnb.solution);
  out.breakdown = loss(builder.network(), out.response, out.state, builder.shape().flow);
  return out;
}

namespace {

OperatorOptimum solve_operator(const Network& net, double dv0, const AttackVector& d,
                               bool structural, FlowModel flow, const SolverOptions& solver) {
  ProblemShape shape;
  shape.flow = flow;
  shape.structural_cuts = structural;
  OperatorProgramBuilder builder(net, dv0, d, shape);
  std::vector<double> lo(builder.binaries().size(), 0.0), hi(builder.binaries().size(), 1.0);
  auto opt = try_solve_connectivity_bnb(builder, lo, hi, solver);
  if (!opt)
    throw validation_error("operator search found no feasible point (full disconnect is feasible)");
  return *opt;
}

} // namespace

OperatorOptimum solve_misocp(const Network& net, double dv0, const AttackVector& d,
                             bool use_structural_cuts, const SolverOptions& solver) {
  return solve_operator(net, dv0, d, use_structural_cuts, FlowModel::Npf, solver);
}

OperatorOptimum solve_milp_lpf(const Network& net, double dv0, const AttackVector& d,
                               bool use_structural_cuts, const SolverOptions& solver) {
  return solve_operator(net, dv0, d, use_structural_cuts, FlowModel::Lpf, solver);
}

} // namespace dnres
