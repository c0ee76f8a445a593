#include "dnres/presolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dnres::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFeasTol = 1e-9;

struct RowState {
  std::vector<std::pair<int, double>> entries; // live (var, coeff)
  double rhs = 0.0;
  bool removed = false;
};

} // namespace

Presolve Presolve::run(const ConicProgram& p) {
  Presolve ps;
  const int n = p.num_vars;
  const int m = p.A.rows();
  const int meq = p.Aeq.rows();

  std::vector<RowState> in(m), eq(meq);
  {
    Eigen::VectorXd rhs = p.rhs();
    for (int r = 0; r < m; ++r) in[r].rhs = rhs[r];
    Eigen::VectorXd rhse = p.rhs_eq();
    for (int r = 0; r < meq; ++r) eq[r].rhs = rhse[r];
  }
  // column views for cascading updates
  std::vector<std::vector<std::pair<int, double>>> col_in(n), col_eq(n);
  for (int k = 0; k < p.A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.A, k); it; ++it) {
      in[it.row()].entries.push_back({int(it.col()), it.value()});
      col_in[it.col()].push_back({int(it.row()), it.value()});
    }
  for (int k = 0; k < p.Aeq.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(p.Aeq, k); it; ++it) {
      eq[it.row()].entries.push_back({int(it.col()), it.value()});
      col_eq[it.col()].push_back({int(it.row()), it.value()});
    }
  for (auto& r : in) std::sort(r.entries.begin(), r.entries.end());
  for (auto& r : eq) std::sort(r.entries.begin(), r.entries.end());

  std::vector<int> live_count_in(m), live_count_eq(meq);
  for (int r = 0; r < m; ++r) live_count_in[r] = int(in[r].entries.size());
  for (int r = 0; r < meq; ++r) live_count_eq[r] = int(eq[r].entries.size());

  std::vector<bool> fixed(n, false);
  ps.fixed_value = Eigen::VectorXd::Zero(n);
  ps.lo_owner_row.assign(n, -1);
  ps.hi_owner_row.assign(n, -1);
  ps.eq_owner_row.assign(n, -1);
  std::vector<double> lo(n, -kInf), hi(n, kInf);
  std::vector<bool> row_live_in(m, true), row_live_eq(meq, true);

  auto fail = [&](const std::string& why) {
    ps.outcome = Outcome::Infeasible;
    ps.infeasibility = why;
  };

  auto live_entry = [&](RowState& row) -> std::pair<int, double> {
    for (auto& [v, a] : row.entries)
      if (!fixed[v]) return {v, a};
    return {-1, 0.0};
  };

  std::vector<int> worklist_fix;

  auto fix_var = [&](int v, double val) {
    fixed[v] = true;
    ps.fixed_value[v] = val;
    ps.fix_order.push_back(v);
    worklist_fix.push_back(v);
  };

  // Scan inequality singleton rows: derive bounds; tighter bound wins the
  // ownership, first row wins ties.
  auto scan_in_row = [&](int r) {
    if (!row_live_in[r] || live_count_in[r] != 1) return;
    auto [v, a] = live_entry(in[r]);
    if (v < 0) return;
    double bound = in[r].rhs / a;
    if (a > 0) { // lower bound
      if (bound > lo[v] + kFeasTol * std::max(1.0, std::abs(bound))) {
        lo[v] = bound;
        ps.lo_owner_row[v] = r;
      } else {
        row_live_in[r] = false; // redundant or tied: owner keeps duty
      }
    } else {
      if (bound < hi[v] - kFeasTol * std::max(1.0, std::abs(bound))) {
        hi[v] = bound;
        ps.hi_owner_row[v] = r;
      } else {
        row_live_in[r] = false;
      }
    }
    if (!fixed[v] && std::isfinite(lo[v]) && std::isfinite(hi[v]) &&
        hi[v] - lo[v] <= kFeasTol * std::max(1.0, std::abs(lo[v]))) {
      if (lo[v] > hi[v] + kFeasTol * std::max(1.0, std::abs(lo[v]))) {
        fail("contradictory bounds on variable " +
             (size_t(v) < p.var_names.size() ? p.var_names[v] : std::to_string(v)));
        return;
      }
      fix_var(v, lo[v]);
    }
  };

  auto scan_eq_row = [&](int r) {
    if (!row_live_eq[r]) return;
    if (live_count_eq[r] == 0) {
      if (std::abs(eq[r].rhs) > kFeasTol) fail("empty equality row with nonzero rhs");
      row_live_eq[r] = false;
      return;
    }
    if (live_count_eq[r] != 1) return;
    auto [v, a] = live_entry(eq[r]);
    if (v < 0 || fixed[v]) return;
    double val = eq[r].rhs / a;
    if (val < lo[v] - kFeasTol || val > hi[v] + kFeasTol) {
      fail("equality row pins a variable outside its bounds");
      return;
    }
    ps.eq_owner_row[v] = r;
    row_live_eq[r] = false; // consumed: the fix substitutes it away
    fix_var(v, val);
  };

  for (int r = 0; r < meq; ++r) {
    scan_eq_row(r);
    if (ps.outcome == Outcome::Infeasible) return ps;
  }
  for (int r = 0; r < m; ++r) {
    scan_in_row(r);
    if (ps.outcome == Outcome::Infeasible) return ps;
  }

  while (!worklist_fix.empty() && ps.outcome == Outcome::Reduced) {
    int v = worklist_fix.back();
    worklist_fix.pop_back();
    double val = ps.fixed_value[v];
    for (auto& [r, a] : col_in[v]) {
      in[r].rhs -= a * val;
      if (--live_count_in[r] == 0) {
        if (row_live_in[r]) {
          if (in[r].rhs > kFeasTol) {
            fail("row " + std::to_string(r) + " infeasible after substitution");
            break;
          }
          row_live_in[r] = false;
        }
      } else {
        scan_in_row(r);
        if (ps.outcome == Outcome::Infeasible) break;
      }
    }
    if (ps.outcome == Outcome::Infeasible) break;
    for (auto& [r, a] : col_eq[v]) {
      if (ps.eq_owner_row[v] == r) continue; // the consumed pin row
      eq[r].rhs -= a * val;
      --live_count_eq[r];
      scan_eq_row(r);
      if (ps.outcome == Outcome::Infeasible) break;
    }
  }
  if (ps.outcome == Outcome::Infeasible) return ps;

  // Assemble the reduced program.
  ps.var_map.assign(n, -1);
  int nr = 0;
  for (int v = 0; v < n; ++v)
    if (!fixed[v]) ps.var_map[v] = nr++;

  ConicProgram& q = ps.reduced;
  q.num_vars = nr;
  q.c = Eigen::VectorXd::Zero(nr);
  q.c0 = p.c0;
  for (int v = 0; v < n; ++v) {
    if (fixed[v])
      q.c0 += p.c[v] * ps.fixed_value[v];
    else
      q.c[ps.var_map[v]] = p.c[v];
  }

  ps.row_map.assign(m, -1);
  ps.eq_row_map.assign(meq, -1);
  std::vector<Eigen::Triplet<double>> ta;
  Eigen::VectorXd bq;
  {
    int rr = 0;
    std::vector<double> rhs_r;
    for (int r = 0; r < m; ++r) {
      if (!row_live_in[r]) continue;
      ps.row_map[r] = rr;
      for (auto& [v, a] : in[r].entries)
        if (!fixed[v]) ta.push_back({rr, ps.var_map[v], a});
      rhs_r.push_back(in[r].rhs);
      ++rr;
    }
    q.A.resize(rr, nr);
    q.A.setFromTriplets(ta.begin(), ta.end());
    q.b = Eigen::Map<Eigen::VectorXd>(rhs_r.data(), rr);
    q.B.resize(rr, 0); // attack already folded into b
    q.row_tags.resize(rr);
    for (int r = 0; r < m; ++r)
      if (ps.row_map[r] >= 0 && size_t(r) < p.row_tags.size())
        q.row_tags[ps.row_map[r]] = p.row_tags[r];
  }
  {
    std::vector<Eigen::Triplet<double>> te;
    std::vector<double> rhs_r;
    int rr = 0;
    for (int r = 0; r < meq; ++r) {
      if (!row_live_eq[r]) continue;
      ps.eq_row_map[r] = rr;
      for (auto& [v, a] : eq[r].entries)
        if (!fixed[v]) te.push_back({rr, ps.var_map[v], a});
      rhs_r.push_back(eq[r].rhs);
      ++rr;
    }
    q.Aeq.resize(rr, nr);
    q.Aeq.setFromTriplets(te.begin(), te.end());
    q.beq = Eigen::Map<Eigen::VectorXd>(rhs_r.data(), rr);
    q.Beq.resize(rr, 0);
    q.eq_row_tags.resize(rr);
    for (int r = 0; r < meq; ++r)
      if (ps.eq_row_map[r] >= 0 && size_t(r) < p.eq_row_tags.size())
        q.eq_row_tags[ps.eq_row_map[r]] = p.eq_row_tags[r];
  }
  // Cones: fold fixed columns into the offsets.
  for (const auto& cone : p.cones) {
    SocConstraint cq;
    cq.edge = cone.edge;
    cq.f = cone.f;
    cq.h = cone.h;
    std::vector<Eigen::Triplet<double>> te;
    for (int k = 0; k < cone.E.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(cone.E, k); it; ++it) {
        if (fixed[it.col()])
          cq.f[it.row()] += it.value() * ps.fixed_value[it.col()];
        else
          te.push_back({int(it.row()), ps.var_map[it.col()], it.value()});
      }
    cq.E.resize(cone.E.rows(), nr);
    cq.E.setFromTriplets(te.begin(), te.end());
    cq.g.resize(nr);
    for (Eigen::SparseVector<double>::InnerIterator it(cone.g); it; ++it) {
      if (fixed[it.index()])
        cq.h += it.value() * ps.fixed_value[it.index()];
      else
        cq.g.coeffRef(ps.var_map[it.index()]) = it.value();
    }
    q.cones.push_back(std::move(cq));
  }
  if (!p.var_names.empty()) {
    q.var_names.resize(nr);
    for (int v = 0; v < n; ++v)
      if (!fixed[v]) q.var_names[ps.var_map[v]] = p.var_names[v];
  }
  return ps;
}

ConicSolution Presolve::recover(const ConicProgram& full, const ConicSolution& red) const {
  ConicSolution s;
  s.status = red.status;
  s.gap = red.gap;
  s.primal_residual = red.primal_residual;
  s.dual_residual = red.dual_residual;
  s.iterations = red.iterations;
  s.diagnostic = red.diagnostic;
  s.objective = red.objective;

  const int n = full.num_vars;
  s.w = Eigen::VectorXd::Zero(n);
  for (int v = 0; v < n; ++v)
    s.w[v] = (var_map[v] >= 0 && red.w.size() > var_map[v]) ? red.w[var_map[v]] : fixed_value[v];

  s.lambda = Eigen::VectorXd::Zero(full.A.rows());
  if (red.lambda.size() == reduced.A.rows())
    for (int r = 0; r < full.A.rows(); ++r)
      if (row_map[r] >= 0) s.lambda[r] = red.lambda[row_map[r]];
  s.mu = Eigen::VectorXd::Zero(full.Aeq.rows());
  if (red.mu.size() == reduced.Aeq.rows())
    for (int r = 0; r < full.Aeq.rows(); ++r)
      if (eq_row_map[r] >= 0) s.mu[r] = red.mu[eq_row_map[r]];
  s.alpha = red.alpha;
  s.beta = red.beta;
  if (s.alpha.empty())
    for (const auto& cone : full.cones) {
      s.alpha.push_back(Eigen::VectorXd::Zero(cone.E.rows()));
      s.beta.push_back(0.0);
    }

  if (red.status != SolveStatus::Optimal) return s;

  // Backfill the multipliers of the bound rows that fixed each variable,
  // walking the eliminations in reverse so cascaded rows are ready. An owner
  // row only references variables fixed before the one it owns, so each
  // residual entry is final when read.
  for (auto it = fix_order.rbegin(); it != fix_order.rend(); ++it) {
    int v = *it;
    double gamma = kkt_stationarity_residual(full, s)[v];
    double a = 0.0;
    if (eq_owner_row[v] >= 0) {
      int row = eq_owner_row[v];
      for (Eigen::SparseMatrix<double>::InnerIterator jt(full.Aeq, v); jt; ++jt)
        if (jt.row() == row) a = jt.value();
      if (a != 0.0) s.mu[row] = gamma / a;
    } else {
      int row = (gamma >= 0.0) ? lo_owner_row[v] : hi_owner_row[v];
      if (row < 0) continue; // zero-residual free fix; nothing to absorb
      for (Eigen::SparseMatrix<double>::InnerIterator jt(full.A, v); jt; ++jt)
        if (jt.row() == row) a = jt.value();
      if (a != 0.0) s.lambda[row] = gamma / a;
    }
  }
  return s;
}

} // namespace dnres::detail
