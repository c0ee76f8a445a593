#include "dnres/gbd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace dnres {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Master MILP machinery: variables are the attack flags over the DG nodes.
ConicProgram master_lp(const std::vector<BendersCut>& cuts, const std::vector<int>& dg_nodes,
                       const std::vector<double>& lo, const std::vector<double>& hi) {
  const int nd = int(dg_nodes.size());
  ConicProgram p;
  p.num_vars = nd;
  p.c = Eigen::VectorXd::Ones(nd);
  std::vector<Eigen::Triplet<double>> ta;
  std::vector<double> rhs;
  std::vector<RowTag> tags;
  for (int k = 0; k < nd; ++k) {
    ta.push_back({int(rhs.size()), k, 1.0});
    tags.push_back({RowKind::box_lo, dg_nodes[k]});
    rhs.push_back(lo[k]);
    ta.push_back({int(rhs.size()), k, -1.0});
    tags.push_back({RowKind::box_hi, dg_nodes[k]});
    rhs.push_back(-hi[k]);
  }
  for (const auto& cut : cuts) {
    int r = int(rhs.size());
    for (int k = 0; k < nd; ++k) {
      double c = cut.coeffs[dg_nodes[k]];
      if (c != 0.0) ta.push_back({r, k, c});
    }
    tags.push_back({RowKind::cut, -1});
    rhs.push_back(cut.rhs);
  }
  p.A.resize(int(rhs.size()), nd);
  p.A.setFromTriplets(ta.begin(), ta.end());
  p.b = Eigen::Map<Eigen::VectorXd>(rhs.data(), int(rhs.size()));
  p.B.resize(int(rhs.size()), 0);
  p.Aeq.resize(0, nd);
  p.Beq.resize(0, 0);
  p.row_tags = std::move(tags);
  return p;
}

struct MasterBnb {
  const std::vector<BendersCut>& cuts;
  const std::vector<int>& dg_nodes;
  const SolverOptions& solver;

  BnbResult minimize(const std::vector<double>& base_lo, const std::vector<double>& base_hi) const {
    BnbProblem prob;
    prob.num_binaries = int(dg_nodes.size());
    prob.branch_priority.assign(dg_nodes.size(), 0);
    prob.solve_relaxation = [&](const std::vector<double>& lo, const std::vector<double>& hi,
                                std::vector<double>& vals) {
      std::vector<double> l(lo.size()), h(hi.size());
      for (size_t k = 0; k < lo.size(); ++k) {
        l[k] = std::max(lo[k], base_lo[k]);
        h[k] = std::min(hi[k], base_hi[k]);
      }
      ConicProgram p = master_lp(cuts, dg_nodes, l, h);
      ConicSolution sol = solve(p, solver);
      vals.assign(dg_nodes.size(), 0.0);
      if (sol.status == SolveStatus::Optimal)
        for (size_t k = 0; k < dg_nodes.size(); ++k) vals[k] = sol.w[k];
      return sol;
    };
    BnbOptions opts;
    opts.integer_objective = true;
    return branch_and_bound(prob, opts);
  }
};

} // namespace

MasterResult solve_master(const std::vector<BendersCut>& cuts, const std::vector<int>& dg_nodes,
                          int node_count, const SolverOptions& solver) {
  MasterResult res;
  const int nd = int(dg_nodes.size());
  std::vector<double> lo(nd, 0.0), hi(nd, 1.0);
  MasterBnb bnb{cuts, dg_nodes, solver};
  BnbResult first = bnb.minimize(lo, hi);
  res.nodes = first.nodes;
  if (!first.feasible) {
    res.infeasible = true;
    return res;
  }
  const int k_star = int(std::lround(first.value));

  // Lexicographic pass: greedily include the smallest node ids that still
  // admit a completion of cardinality k_star.
  std::vector<uint8_t> witness = first.binaries;
  std::vector<double> flo(nd, 0.0), fhi(nd, 1.0);
  int placed = 0;
  for (int k = 0; k < nd && placed < k_star; ++k) {
    if (witness[k]) {
      flo[k] = 1.0;
      ++placed;
      continue;
    }
    std::vector<double> try_lo = flo;
    try_lo[k] = 1.0;
    BnbResult probe = bnb.minimize(try_lo, fhi);
    res.nodes += probe.nodes;
    if (probe.feasible && int(std::lround(probe.value)) == k_star) {
      flo = try_lo;
      witness = probe.binaries;
      ++placed;
    } else {
      fhi[k] = 0.0; // node k is in no minimum-cardinality attack with this prefix
    }
  }

  res.attack = AttackVector(node_count);
  for (int k = 0; k < nd; ++k) res.attack.d[dg_nodes[k]] = witness[k];
  return res;
}

BendersCut benders_cut_from_dual(const ConicSolution& sol, const ConicProgram& prog,
                                 double epsilon) {
  if (sol.status != SolveStatus::Optimal)
    throw validation_error("benders cut requires an Optimal fixed-configuration solve");
  BendersCut cut;
  cut.kind = BendersCut::Kind::generalized;
  cut.rhs = epsilon;
  cut.coeffs = Eigen::VectorXd::Zero(prog.B.cols());
  if (prog.B.cols() > 0) cut.coeffs = prog.B.transpose() * sol.lambda;
  return cut;
}

BendersCut no_good_cut(const AttackVector& d_star, const std::vector<int>& dg_nodes) {
  BendersCut cut;
  cut.kind = BendersCut::Kind::no_good;
  cut.coeffs = Eigen::VectorXd::Zero(int(d_star.d.size()));
  int support = 0;
  for (int i : dg_nodes) {
    if (d_star.d[i]) {
      cut.coeffs[i] = -1.0;
      ++support;
    } else {
      cut.coeffs[i] = 1.0;
    }
  }
  cut.rhs = 1.0 - double(support);
  return cut;
}

double epsilon_schedule(const std::vector<double>& coeffs, int k_j, int m) {
  const int n = int(coeffs.size());
  if (k_j <= 0 || n == 0) return 0.0;
  if (m < 0 || m > n - 1) throw validation_error("criticality parameter outside [0, N-1]");
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return coeffs[a] > coeffs[b]; });
  int e = std::min(n, m + k_j);
  int s = e - k_j + 1;
  double eps = 0.0;
  for (int pos = s; pos <= e; ++pos) eps += coeffs[order[pos - 1]];
  return eps;
}

GbdResult run_min_cardinality(const Network& net, double dv0, double loss_target,
                              const GbdConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  GbdResult res;
  const std::vector<int> dg_nodes = net.dg_nodes();
  const double lmax = net.max_loss();
  if (!(loss_target > 0.0) || loss_target > lmax + 1e-9)
    throw validation_error("loss target must lie in (0, max_loss]");
  const double success_tol = 1e-7 * std::max(1.0, lmax);
  const FlowModel flow = cfg.lpf_mode ? FlowModel::Lpf : FlowModel::Npf;

  std::vector<BendersCut> cuts;
  for (long iter = 1; iter <= cfg.iter_limit; ++iter) {
    res.iterations = iter;
    GbdIteration tr;
    auto tm = std::chrono::steady_clock::now();
    MasterResult master = solve_master(cuts, dg_nodes, net.node_count(), cfg.solver);
    tr.master_time = seconds_since(tm);
    if (master.infeasible) {
      res.status = GbdStatus::Failure;
      res.wall_time = seconds_since(t0);
      return res;
    }
    AttackVector d_star = master.attack;
    tr.attack = d_star.support();
    tr.cardinality = d_star.cardinality();
    if (cfg.stop_above_cardinality >= 0 && tr.cardinality > cfg.stop_above_cardinality) {
      res.status = GbdStatus::IterLimit;
      res.cardinality = tr.cardinality;
      res.trace.push_back(std::move(tr));
      res.wall_time = seconds_since(t0);
      return res;
    }

    auto ts = std::chrono::steady_clock::now();
    OperatorOptimum op = cfg.lpf_mode
                             ? solve_milp_lpf(net, dv0, d_star, cfg.use_structural_cuts, cfg.solver)
                             : solve_misocp(net, dv0, d_star, cfg.use_structural_cuts, cfg.solver);
    tr.operator_loss = op.loss;
    if (op.loss >= loss_target - success_tol) {
      res.status = GbdStatus::Success;
      res.attack = d_star;
      res.cardinality = d_star.cardinality();
      // realized loss is always re-scored under the nonlinear model
      OperatorOptimum fresh = solve_misocp(net, dv0, d_star, cfg.use_structural_cuts, cfg.solver);
      res.realized_loss = fresh.loss;
      tr.sub_time = seconds_since(ts);
      tr.cut_kind = "none";
      res.trace.push_back(std::move(tr));
      res.wall_time = seconds_since(t0);
      return res;
    }

    // Fixed-configuration duals at the operator's optimal configuration.
    ConfigurationVector kappa;
    kappa.kc = op.response.kc;
    kappa.kg = op.response.kg;
    bool added_generalized = false;
    FixedConfigResult fc = solve_fixed_config(net, dv0, d_star, kappa, flow, cfg.solver);
    if (fc.status == SolveStatus::Optimal) {
      std::vector<double> coeffs(dg_nodes.size());
      Eigen::VectorXd c_full = fc.program.prog.B.transpose() * fc.solution.lambda;
      for (size_t k = 0; k < dg_nodes.size(); ++k) coeffs[k] = c_full[dg_nodes[k]];
      double eps = cfg.epsilon_mode == GbdConfig::EpsilonMode::fixed
                       ? cfg.epsilon_fixed
                       : epsilon_schedule(coeffs, d_star.cardinality(), cfg.m);
      double cmax = *std::max_element(coeffs.begin(), coeffs.end());
      if (eps > 0.0 && cmax > 1e-9) {
        BendersCut cut = benders_cut_from_dual(fc.solution, fc.program.prog, eps);
        cut.rhs = eps;
        cuts.push_back(std::move(cut));
        added_generalized = true;
      }
    }
    cuts.push_back(no_good_cut(d_star, dg_nodes));
    tr.cut_kind = added_generalized ? "generalized+no_good" : "no_good";
    tr.epsilon = added_generalized ? cuts[cuts.size() - 2].rhs : 0.0;
    tr.sub_time = seconds_since(ts);
    res.trace.push_back(std::move(tr));
  }
  res.status = GbdStatus::IterLimit;
  res.wall_time = seconds_since(t0);
  return res;
}

MaxMinResult run_budget_k_maxmin(const Network& net, double dv0, int k, const GbdConfig& cfg,
                                 double resolution_frac) {
  const double lmax = net.max_loss();
  const double res_abs = resolution_frac * lmax;
  MaxMinResult best;
  best.attack = AttackVector(net.node_count());

  double lo = 0.0, hi = lmax;
  bool have_attack = false;
  GbdConfig probe_cfg = cfg;
  probe_cfg.stop_above_cardinality = k;
  while (hi - lo > res_abs) {
    double mid = 0.5 * (lo + hi);
    GbdResult g = run_min_cardinality(net, dv0, mid, probe_cfg);
    if (g.status == GbdStatus::Success && g.cardinality <= k) {
      lo = mid;
      best.attack = g.attack;
      have_attack = true;
    } else {
      hi = mid;
    }
  }
  OperatorOptimum op = solve_misocp(net, dv0, have_attack ? best.attack : AttackVector(net.node_count()),
                                    cfg.use_structural_cuts, cfg.solver);
  best.loss = op.loss;
  best.resilience = 100.0 * (1.0 - best.loss / lmax);
  return best;
}

namespace {

bool attack_lex_less(const AttackVector& a, const AttackVector& b) {
  return a.support() < b.support();
}

} // namespace

MaxMinResult brute_force_maxmin(const Network& net, double dv0, int k, bool use_structural_cuts,
                                int threads, const SolverOptions& solver) {
  const std::vector<int> dg_nodes = net.dg_nodes();
  const int nd = int(dg_nodes.size());
  if (k < 0 || k > nd) throw validation_error("budget outside [0, N_dg]");

  // enumerate all C(nd, k) supports
  std::vector<std::vector<int>> combos;
  std::vector<int> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0)
    combos.push_back({});
  else
    while (true) {
      combos.push_back(idx);
      int i = k - 1;
      while (i >= 0 && idx[i] == nd - k + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
  if (combos.size() > 100000)
    std::fprintf(stderr, "warning: brute force over %zu attacks\n", combos.size());

  int nthreads = threads > 0 ? threads : int(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min<int>(nthreads, int(combos.size())));

  struct Best {
    double loss = -1.0;
    AttackVector attack;
    long solves = 0;
  };
  std::vector<Best> best(nthreads);
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t]() {
      for (size_t c = t; c < combos.size(); c += nthreads) {
        AttackVector d(net.node_count());
        for (int pos : combos[c]) d.d[dg_nodes[pos]] = 1;
        OperatorOptimum op = solve_misocp(net, dv0, d, use_structural_cuts, solver);
        ++best[t].solves;
        if (op.loss > best[t].loss ||
            (op.loss == best[t].loss && attack_lex_less(d, best[t].attack)))
          best[t] = {op.loss, d, best[t].solves};
      }
    });
  for (auto& th : pool) th.join();

  MaxMinResult out;
  out.attack = AttackVector(net.node_count());
  double bl = -1.0;
  for (const auto& b : best) {
    out.misocp_solves += b.solves;
    if (b.loss > bl || (b.loss == bl && b.loss >= 0.0 && attack_lex_less(b.attack, out.attack))) {
      bl = b.loss;
      out.attack = b.attack;
    }
  }
  out.loss = bl;
  out.resilience = 100.0 * (1.0 - out.loss / net.max_loss());
  return out;
}

std::string GbdResult::to_json() const {
  nlohmann::json doc;
  doc["status"] = status == GbdStatus::Success  ? "Success"
                  : status == GbdStatus::Failure ? "Failure"
                                                  : "IterLimit";
  doc["cardinality"] = cardinality;
  doc["realized_loss"] = realized_loss;
  doc["iterations"] = iterations;
  doc["wall_time"] = wall_time;
  doc["attack"] = attack.support();
  nlohmann::json tr = nlohmann::json::array();
  for (const auto& it : trace)
    tr.push_back({{"d", it.attack},
                  {"cardinality", it.cardinality},
                  {"operator_loss", it.operator_loss},
                  {"cut_kind", it.cut_kind},
                  {"epsilon", it.epsilon},
                  {"master_time", it.master_time},
                  {"sub_time", it.sub_time}});
  doc["trace"] = tr;
  return doc.dump(2);
}

} // namespace dnres
