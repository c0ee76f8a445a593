#include "dnres/assemble.hpp"

#include <algorithm>
#include <cmath>

namespace dnres {

ConfigurationVector ConfigurationVector::all(const Network& net, int value) {
  ConfigurationVector k;
  k.kc.assign(net.node_count() + 1, 0);
  k.kg.assign(net.node_count() + 1, 0);
  for (int i = 1; i <= net.node_count(); ++i) {
    if (net.load(i)) k.kc[i] = uint8_t(value);
    if (net.dg(i)) k.kg[i] = uint8_t(value);
  }
  return k;
}

bool ConfigurationVector::respects(const AttackVector& d) const {
  for (size_t i = 1; i < d.d.size() && i < kg.size(); ++i)
    if (d.d[i] && !kg[i]) return false;
  return true;
}

OperatorProgramBuilder::OperatorProgramBuilder(const Network& net, double dv0, AttackVector d,
                                               ProblemShape shape)
    : net_(net), dv0_(dv0), d_(std::move(d)), shape_(shape) {
  if (d_.d.size() != size_t(net.node_count() + 1))
    throw validation_error("attack vector size mismatch");
  for (int i = 1; i <= net.node_count(); ++i)
    if (d_.d[i] && !net.dg(i))
      throw validation_error("attack on node " + std::to_string(i) + " which has no DG");
  if (!(net.v_nom - dv0 > 0.0)) throw validation_error("sag exceeds nominal voltage");
  const bool kc_exists = !shape_.beta_one;
  if (kc_exists)
    for (int i : net.load_nodes()) binaries_.push_back({i, false, net.depth(i)});
  for (int i : net.dg_nodes()) binaries_.push_back({i, true, net.depth(i)});
}

namespace {

struct Emitter {
  std::vector<Eigen::Triplet<double>> a, b_attack, aeq;
  std::vector<double> rhs, rhs_eq;
  std::vector<RowTag> tags, eq_tags;

  int row(RowKind kind, int node, double r) {
    tags.push_back({kind, node});
    rhs.push_back(r);
    return int(rhs.size()) - 1;
  }
  int eq_row(RowKind kind, int node, double r) {
    eq_tags.push_back({kind, node});
    rhs_eq.push_back(r);
    return int(rhs_eq.size()) - 1;
  }
  void at(int r, int col, double v) { a.push_back({r, col, v}); }
  void at_eq(int r, int col, double v) { aeq.push_back({r, col, v}); }
  void attack_at(int r, int col, double v) { b_attack.push_back({r, col, v}); }
};

} // namespace

BuiltProgram OperatorProgramBuilder::build(bool kappa_variable, const ConfigurationVector* kappa,
                                           const std::vector<double>* lo,
                                           const std::vector<double>* hi) const {
  const Network& net = net_;
  const int n = net.node_count();
  const bool lpf = shape_.flow == FlowModel::Lpf;

  BuiltProgram bp;
  bp.flow = shape_.flow;
  auto& col_beta = bp.col_beta;
  auto& col_kc = bp.col_kc;
  auto& col_pg = bp.col_pg;
  auto& col_qg = bp.col_qg;
  auto& col_kg = bp.col_kg;
  auto& col_pt = bp.col_pt;
  auto& col_qt = bp.col_qt;
  auto& col_v = bp.col_v;
  auto& col_P = bp.col_P;
  auto& col_Q = bp.col_Q;
  auto& col_ell = bp.col_ell;
  for (auto* v : {&col_beta, &col_kc, &col_pg, &col_qg, &col_kg, &col_pt, &col_qt, &col_v,
                  &col_P, &col_Q, &col_ell})
    v->assign(n + 1, -1);

  ConicProgram& p = bp.prog;
  std::vector<std::string> names;
  int nv = 0;
  auto add_var = [&](std::vector<int>& map, int i, const char* base) {
    map[i] = nv++;
    names.push_back(std::string(base) + "_" + std::to_string(i));
  };
  const bool has_beta = !shape_.beta_one && !shape_.beta_is_one_minus_kc;
  const bool has_kc = kappa_variable && !shape_.beta_one;
  for (int i = 1; i <= n; ++i) {
    if (net.load(i) && has_beta) add_var(col_beta, i, "beta");
    if (net.load(i) && has_kc) add_var(col_kc, i, "kc");
    if (net.dg(i)) {
      add_var(col_pg, i, "pg");
      add_var(col_qg, i, "qg");
      if (kappa_variable) add_var(col_kg, i, "kg");
    }
    add_var(col_pt, i, "pt");
    add_var(col_qt, i, "qt");
    add_var(col_v, i, "v");
    add_var(col_P, i, "P");
    add_var(col_Q, i, "Q");
    if (!lpf) add_var(col_ell, i, "l");
  }
  bp.col_v0 = nv++;
  names.push_back("v0");
  bp.col_t = nv++;
  names.push_back("t");

  p.num_vars = nv;
  p.var_names = std::move(names);
  p.c = Eigen::VectorXd::Zero(nv);
  p.c0 = 0.0;
  p.c[bp.col_t] = net.cost_vr;

  Emitter em;

  // objective and per-load rows
  for (int i : net.load_nodes()) {
    const LoadSpec& L = *net.load(i);
    double kc_fix = (!kappa_variable && kappa) ? double(kappa->kc[i]) : 0.0;
    if (has_beta) {
      p.c[col_beta[i]] = -L.cost_lc * L.pc_max;
      p.c0 += L.cost_lc * L.pc_max;
      int r = em.row(RowKind::eq9a, i, 0.0);
      em.at(r, col_beta[i], 1.0);
      if (has_kc)
        em.at(r, col_kc[i], L.beta_min);
      em.rhs[r] = L.beta_min * (kappa_variable ? 1.0 : (1.0 - kc_fix));
      r = em.row(RowKind::eq9b, i, kappa_variable ? -1.0 : -(1.0 - kc_fix));
      em.at(r, col_beta[i], -1.0);
      if (has_kc) em.at(r, col_kc[i], -1.0);
    }
    if (has_kc) p.c[col_kc[i]] += (L.cost_ls - L.cost_lc) * L.pc_max;
    if (shape_.beta_is_one_minus_kc && has_kc) p.c[col_kc[i]] += L.cost_lc * L.pc_max;
    if (!kappa_variable && kappa) p.c0 += (L.cost_ls - L.cost_lc) * L.pc_max * kc_fix;
    // load voltage window, Eq. (12)
    if (shape_.load_windows) {
      int r = em.row(RowKind::eq12a, i, L.v_min - (kappa_variable ? 0.0 : kc_fix));
      em.at(r, col_v[i], 1.0);
      if (has_kc) em.at(r, col_kc[i], 1.0);
      r = em.row(RowKind::eq12b, i, -L.v_max - (kappa_variable ? 0.0 : kc_fix));
      em.at(r, col_v[i], -1.0);
      if (has_kc) em.at(r, col_kc[i], 1.0);
    }
  }

  // per-DG rows, in the worked standard form's order
  for (int i : net.dg_nodes()) {
    const DgSpec& G = *net.dg(i);
    double kg_fix = (!kappa_variable && kappa) ? double(kappa->kg[i]) : 0.0;
    int r = em.row(RowKind::eq6, i, 0.0);
    em.at(r, col_pg[i], 1.0);
    r = em.row(RowKind::eq4, i, -G.pg_max);
    em.at(r, col_pg[i], -1.0);
    em.attack_at(r, i, G.pg_max);
    r = em.row(RowKind::eq7a, i, 0.0);
    em.at(r, col_pg[i], G.eta);
    em.at(r, col_qg[i], 1.0);
    r = em.row(RowKind::eq7b, i, 0.0);
    em.at(r, col_pg[i], G.eta);
    em.at(r, col_qg[i], -1.0);
    if (kappa_variable) {
      // Prop. 2 pin: pg = pg_max (1 - kg)
      int e = em.eq_row(RowKind::eq5, i, G.pg_max);
      em.at_eq(e, col_pg[i], 1.0);
      em.at_eq(e, col_kg[i], G.pg_max);
    } else {
      r = em.row(RowKind::eq5, i, G.pg_max * (1.0 - kg_fix));
      em.at(r, col_pg[i], 1.0);
      r = em.row(RowKind::eq5, i, -G.pg_max * (1.0 - kg_fix));
      em.at(r, col_pg[i], -1.0);
    }
    // DG voltage window, Eq. (11)
    r = em.row(RowKind::eq11a, i, G.v_min - (kappa_variable ? 0.0 : kg_fix));
    em.at(r, col_v[i], 1.0);
    if (kappa_variable) em.at(r, col_kg[i], 1.0);
    r = em.row(RowKind::eq11b, i, -G.v_max - (kappa_variable ? 0.0 : kg_fix));
    em.at(r, col_v[i], -1.0);
    if (kappa_variable) em.at(r, col_kg[i], 1.0);
  }

  // binary boxes (kc block first, then kg, matching binaries())
  if (kappa_variable) {
    int k = 0;
    for (const auto& bin : binaries_) {
      double blo = lo ? (*lo)[k] : 0.0;
      double bhi = hi ? (*hi)[k] : 1.0;
      int col = bin.is_dg ? col_kg[bin.node] : col_kc[bin.node];
      if (bin.is_dg) blo = std::max(blo, double(d_.d[bin.node]));
      int r = em.row(bin.is_dg ? RowKind::eq3 : RowKind::box_lo, bin.node, blo);
      em.at(r, col, 1.0);
      r = em.row(RowKind::box_hi, bin.node, -bhi);
      em.at(r, col, -1.0);
      ++k;
    }
  }

  // structural connectivity-ordering cuts (Props 6-7)
  if (kappa_variable && shape_.structural_cuts) {
    for (int j = 1; j <= n; ++j) {
      if (net.load(j) && has_kc) {
        const LoadSpec& Lj = *net.load(j);
        for (int i = net.parent(j); i != 0; i = net.parent(i)) {
          if (!net.load(i)) continue;
          const LoadSpec& Li = *net.load(i);
          bool ok = Li.v_min <= Lj.v_min && Li.pc_max <= Lj.pc_max && Li.beta_min <= Lj.beta_min &&
                    Li.qc_max <= Lj.qc_max && Li.cost_lc <= Lj.cost_lc && Li.cost_ls >= Lj.cost_ls;
          if (!ok) continue;
          int r = em.row(RowKind::structural, j, 0.0);
          em.at(r, col_kc[j], 1.0);
          em.at(r, col_kc[i], -1.0);
        }
      }
      if (net.dg(j) && !d_.d[j]) {
        const DgSpec& Gj = *net.dg(j);
        for (int i = net.parent(j); i != 0; i = net.parent(i)) {
          if (!net.dg(i) || d_.d[i]) continue;
          const DgSpec& Gi = *net.dg(i);
          bool ok = Gi.v_min <= Gj.v_min && Gi.pg_max >= Gj.pg_max && Gi.eta >= Gj.eta;
          if (!ok) continue;
          int r = em.row(RowKind::structural, j, 0.0);
          em.at(r, col_kg[j], 1.0);
          em.at(r, col_kg[i], -1.0);
        }
      }
    }
  }

  // worst-deviation rows: t >= |v_nom - v_i| on non-substation nodes
  for (int i = 1; i <= n; ++i) {
    int r = em.row(RowKind::tmax_lo, i, net.v_nom);
    em.at(r, col_v[i], 1.0);
    em.at(r, bp.col_t, 1.0);
    r = em.row(RowKind::tmax_hi, i, -net.v_nom);
    em.at(r, col_v[i], -1.0);
    em.at(r, bp.col_t, 1.0);
  }
  {
    int r = em.row(RowKind::t_sign, -1, 0.0);
    em.at(r, bp.col_t, 1.0);
  }

  // physics equalities
  {
    int e = em.eq_row(RowKind::eq2, 0, net.v_nom - dv0_);
    em.at_eq(e, bp.col_v0, 1.0);
  }
  for (int i = 1; i <= n; ++i) {
    int e = em.eq_row(RowKind::eq13p, i, 0.0);
    em.at_eq(e, col_pt[i], 1.0);
    if (net.dg(i)) em.at_eq(e, col_pg[i], 1.0);
    if (net.load(i)) {
      const LoadSpec& L = *net.load(i);
      if (has_beta)
        em.at_eq(e, col_beta[i], -L.pc_max);
      else if (shape_.beta_one)
        em.rhs_eq[e] = L.pc_max;
      else { // beta = 1 - kc
        em.at_eq(e, col_kc[i], L.pc_max);
        em.rhs_eq[e] = L.pc_max;
      }
    }
    e = em.eq_row(RowKind::eq13q, i, 0.0);
    em.at_eq(e, col_qt[i], 1.0);
    if (net.dg(i)) em.at_eq(e, col_qg[i], 1.0);
    if (net.load(i)) {
      const LoadSpec& L = *net.load(i);
      if (has_beta && shape_.reactive_follows_beta)
        em.at_eq(e, col_beta[i], -L.qc_max);
      else if (shape_.beta_one)
        em.rhs_eq[e] = L.qc_max;
      else if (!has_beta && !shape_.beta_one) { // beta = 1 - kc
        em.at_eq(e, col_kc[i], L.qc_max);
        em.rhs_eq[e] = L.qc_max;
      } else { // connected loads keep their reactive demand
        double kc_fix = (!kappa_variable && kappa) ? double(kappa->kc[i]) : 0.0;
        if (has_kc) {
          em.at_eq(e, col_kc[i], L.qc_max);
          em.rhs_eq[e] = L.qc_max;
        } else {
          em.rhs_eq[e] = L.qc_max * (1.0 - kc_fix);
        }
      }
    }
  }
  for (int j = 1; j <= n; ++j) {
    double r = net.line_r(j), x = net.line_x(j);
    int e = em.eq_row(RowKind::eq14, j, 0.0);
    em.at_eq(e, col_P[j], 1.0);
    em.at_eq(e, col_pt[j], -1.0);
    if (!lpf) em.at_eq(e, col_ell[j], -r);
    for (int c : net.children(j)) em.at_eq(e, col_P[c], -1.0);
    e = em.eq_row(RowKind::eq15, j, 0.0);
    em.at_eq(e, col_Q[j], 1.0);
    em.at_eq(e, col_qt[j], -1.0);
    if (!lpf) em.at_eq(e, col_ell[j], -x);
    for (int c : net.children(j)) em.at_eq(e, col_Q[c], -1.0);
    e = em.eq_row(RowKind::eq16, j, 0.0);
    em.at_eq(e, col_v[j], 1.0);
    int pv = net.parent(j) == 0 ? bp.col_v0 : col_v[net.parent(j)];
    em.at_eq(e, pv, -1.0);
    em.at_eq(e, col_P[j], 2.0 * r);
    em.at_eq(e, col_Q[j], 2.0 * x);
    if (!lpf) em.at_eq(e, col_ell[j], -(r * r + x * x));
  }

  // line-loss cost and relaxed current cones
  if (!lpf) {
    for (int j = 1; j <= n; ++j) {
      p.c[col_ell[j]] = net.cost_ll * net.line_r(j);
      SocConstraint cone;
      cone.edge = j;
      int pv = net.parent(j) == 0 ? bp.col_v0 : col_v[net.parent(j)];
      std::vector<Eigen::Triplet<double>> te;
      te.push_back({0, col_P[j], std::sqrt(2.0)});
      te.push_back({1, col_Q[j], std::sqrt(2.0)});
      te.push_back({2, pv, 1.0});
      te.push_back({3, col_ell[j], 1.0});
      cone.E.resize(4, nv);
      cone.E.setFromTriplets(te.begin(), te.end());
      cone.f = Eigen::VectorXd::Zero(4);
      cone.g.resize(nv);
      cone.g.coeffRef(pv) = 1.0;
      cone.g.coeffRef(col_ell[j]) = 1.0;
      cone.h = 0.0;
      p.cones.push_back(std::move(cone));
    }
  }

  const int m = int(em.rhs.size()), meq = int(em.rhs_eq.size());
  p.A.resize(m, nv);
  p.A.setFromTriplets(em.a.begin(), em.a.end());
  p.b = Eigen::Map<Eigen::VectorXd>(em.rhs.data(), m);
  p.B.resize(m, n + 1);
  p.B.setFromTriplets(em.b_attack.begin(), em.b_attack.end());
  p.d = Eigen::VectorXd::Zero(n + 1);
  for (int i = 1; i <= n; ++i) p.d[i] = double(d_.d[i]);
  p.Aeq.resize(meq, nv);
  p.Aeq.setFromTriplets(em.aeq.begin(), em.aeq.end());
  p.beq = Eigen::Map<Eigen::VectorXd>(em.rhs_eq.data(), meq);
  p.Beq.resize(meq, n + 1);
  p.row_tags = std::move(em.tags);
  p.eq_row_tags = std::move(em.eq_tags);
  return bp;
}

BuiltProgram OperatorProgramBuilder::relaxed(const std::vector<double>& lo,
                                             const std::vector<double>& hi) const {
  if (lo.size() != binaries_.size() || hi.size() != binaries_.size())
    throw validation_error("binary bound vectors must match binaries()");
  return build(true, nullptr, &lo, &hi);
}

BuiltProgram OperatorProgramBuilder::fixed(const ConfigurationVector& kappa) const {
  if (!kappa.respects(d_))
    throw validation_error("configuration does not respect the attack: kg_i >= d_i violated");
  return build(false, &kappa, nullptr, nullptr);
}

NetworkState OperatorProgramBuilder::extract_state(const BuiltProgram& bp,
                                                   const ConicSolution& sol) const {
  const int n = net_.node_count();
  NetworkState s = NetworkState::zeros(n, net_.v_nom);
  auto get = [&](const std::vector<int>& col, int i) {
    return col[i] >= 0 ? sol.w[col[i]] : 0.0;
  };
  for (int i = 1; i <= n; ++i) {
    double beta = 0.0;
    if (bp.col_beta[i] >= 0)
      beta = sol.w[bp.col_beta[i]];
    else if (net_.load(i) && shape_.beta_one)
      beta = 1.0;
    else if (net_.load(i) && shape_.beta_is_one_minus_kc)
      beta = 1.0 - get(bp.col_kc, i);
    if (net_.load(i)) {
      s.pc[i] = beta * net_.load(i)->pc_max;
      s.qc[i] = beta * net_.load(i)->qc_max;
    }
    s.pg[i] = get(bp.col_pg, i);
    s.qg[i] = get(bp.col_qg, i);
    s.pt[i] = get(bp.col_pt, i);
    s.qt[i] = get(bp.col_qt, i);
    s.v[i] = get(bp.col_v, i);
    s.P[i] = get(bp.col_P, i);
    s.Q[i] = get(bp.col_Q, i);
    s.ell[i] = bp.col_ell[i] >= 0 ? sol.w[bp.col_ell[i]] : 0.0;
  }
  s.v[0] = bp.col_v0 >= 0 ? sol.w[bp.col_v0] : net_.v_nom - dv0_;
  return s;
}

OperatorResponse OperatorProgramBuilder::extract_response(
    const BuiltProgram& bp, const ConicSolution& sol,
    const ConfigurationVector* fixed_kappa) const {
  const int n = net_.node_count();
  OperatorResponse u;
  u.beta = Eigen::VectorXd::Zero(n + 1);
  u.kc.assign(n + 1, 0);
  u.kg.assign(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    if (bp.col_kc[i] >= 0)
      u.kc[i] = uint8_t(std::lround(sol.w[bp.col_kc[i]]));
    else if (fixed_kappa)
      u.kc[i] = fixed_kappa->kc[i];
    if (bp.col_kg[i] >= 0)
      u.kg[i] = uint8_t(std::lround(sol.w[bp.col_kg[i]]));
    else if (fixed_kappa)
      u.kg[i] = fixed_kappa->kg[i];
    else if (d_.d[i])
      u.kg[i] = 1;
    if (net_.load(i)) {
      if (bp.col_beta[i] >= 0)
        u.beta[i] = sol.w[bp.col_beta[i]];
      else if (shape_.beta_one)
        u.beta[i] = 1.0;
      else
        u.beta[i] = 1.0 - double(u.kc[i]);
    }
  }
  return u;
}

ConicProgram assemble_operator_socp(const Network& net, double dv0, const AttackVector& d,
                                    const ConfigurationVector& kappa, FlowModel flow) {
  ProblemShape shape;
  shape.flow = flow;
  OperatorProgramBuilder builder(net, dv0, d, shape);
  return builder.fixed(kappa).prog;
}

} // namespace dnres
