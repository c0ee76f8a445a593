#include "dnres/cascade.hpp"

#include <random>
#include <sstream>
#include <thread>

namespace dnres {

namespace {

// Past the feeder's loadability no intermediate state exists: the cascade
// ends in a voltage collapse and everything disconnects.
OperatorOptimum blackout(const Network& net, double dv0) {
  OperatorOptimum out;
  const int n = net.node_count();
  out.response.beta = Eigen::VectorXd::Zero(n + 1);
  out.response.kc.assign(n + 1, 0);
  out.response.kg.assign(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    if (net.load(i)) out.response.kc[i] = 1;
    if (net.dg(i)) out.response.kg[i] = 1;
  }
  out.state = NetworkState::zeros(n, net.v_nom - dv0);
  out.breakdown = loss(net, out.response, out.state);
  out.loss = out.breakdown.total;
  out.collapsed = true;
  return out;
}

} // namespace

OperatorOptimum cascade_intermediate(const Network& net, double dv0, const AttackVector& d,
                                     const SolverOptions& solver) {
  ProblemShape shape;
  shape.beta_one = true;
  shape.load_windows = false;
  OperatorProgramBuilder builder(net, dv0, d, shape);
  std::vector<double> lo(builder.binaries().size(), 0.0), hi(builder.binaries().size(), 1.0);
  auto opt = try_solve_connectivity_bnb(builder, lo, hi, solver);
  return opt ? *opt : blackout(net, dv0);
}

OperatorOptimum cascade_final(const Network& net, double dv0, const std::vector<uint8_t>& kg_in,
                              const Eigen::VectorXd& v_in, const SolverOptions& solver) {
  AttackVector inherited(net.node_count());
  for (int i = 1; i <= net.node_count(); ++i)
    if (net.dg(i) && kg_in[i]) inherited.d[i] = 1; // kg_nr >= kg_in via Eq. (3)
  ProblemShape shape;
  shape.beta_is_one_minus_kc = true;
  shape.structural_cuts = true;
  OperatorProgramBuilder builder(net, dv0, inherited, shape);
  const auto& bins = builder.binaries();
  std::vector<double> lo(bins.size(), 0.0), hi(bins.size(), 1.0);
  for (size_t k = 0; k < bins.size(); ++k) {
    if (bins[k].is_dg) {
      if (kg_in[bins[k].node]) lo[k] = 1.0;
    } else {
      const LoadSpec& L = *net.load(bins[k].node);
      double v = v_in[bins[k].node];
      if (v < L.v_min || v > L.v_max) lo[k] = 1.0; // forced trip
    }
  }
  auto opt = try_solve_connectivity_bnb(builder, lo, hi, solver);
  return opt ? *opt : blackout(net, dv0);
}

CascadeOutcome get_cascade_final_state(const Network& net, double dv0, const AttackVector& d,
                                       const SolverOptions& solver) {
  CascadeOutcome out;
  OperatorOptimum in = cascade_intermediate(net, dv0, d, solver);
  out.u_in = in.response;
  out.x_in = in.state;
  // On an intermediate collapse every DG has tripped but no load is forced
  // by a (nonexistent) intermediate voltage; the final stage then selects
  // the load trips that restore a feasible state.
  Eigen::VectorXd v_in = in.collapsed ? Eigen::VectorXd::Constant(net.node_count() + 1, net.v_nom)
                                      : in.state.v;
  OperatorOptimum nr = cascade_final(net, dv0, in.response.kg, v_in, solver);
  out.u_nr = nr.response;
  out.x_nr = nr.state;
  out.loss_ad = nr.loss;
  out.breakdown = nr.breakdown;
  out.collapsed = in.collapsed || nr.collapsed;
  return out;
}

RandomizedRun randomized_worst_case(const Network& net, double dv0, int permutations,
                                    uint64_t seed, int threads, const SolverOptions& solver) {
  if (permutations < 1) throw validation_error("permutation count must be >= 1");
  const std::vector<int> dg_nodes = net.dg_nodes();
  const int nd = int(dg_nodes.size());
  RandomizedRun run;
  run.permutations = permutations;
  run.seed = seed;
  run.Y = Eigen::MatrixXd::Zero(nd, permutations);
  run.V = Eigen::VectorXd::Zero(nd);
  run.nominal_loss = get_cascade_final_state(net, dv0, AttackVector(net.node_count()), solver)
                         .loss_ad;

  // draw all permutations up front so the work can fan out per column
  std::vector<std::vector<int>> perms(permutations);
  std::mt19937_64 rng(seed);
  for (int t = 0; t < permutations; ++t) {
    std::vector<int> perm = dg_nodes;
    for (int i = nd - 1; i > 0; --i) {
      int j = int(rng() % uint64_t(i + 1));
      std::swap(perm[i], perm[j]);
    }
    perms[t] = std::move(perm);
  }

  int nthreads = threads > 0 ? threads : int(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, permutations));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t)
    pool.emplace_back([&, t]() {
      for (int col = t; col < permutations; col += nthreads) {
        AttackVector d(net.node_count());
        for (int k = 1; k <= nd; ++k) {
          d.d[perms[col][k - 1]] = 1;
          run.Y(k - 1, col) = get_cascade_final_state(net, dv0, d, solver).loss_ad;
        }
      }
    });
  for (auto& th : pool) th.join();

  for (int k = 0; k < nd; ++k) run.V[k] = run.Y.row(k).maxCoeff();
  return run;
}

std::string RandomizedRun::to_csv() const {
  std::ostringstream os;
  os << "k";
  for (int t = 0; t < permutations; ++t) os << ",perm_" << t;
  os << ",worst\n";
  os.precision(10);
  for (int k = 0; k < Y.rows(); ++k) {
    os << (k + 1);
    for (int t = 0; t < permutations; ++t) os << "," << Y(k, t);
    os << "," << V[k] << "\n";
  }
  return os.str();
}

std::vector<ResiliencePoint> resilience_curves(const RandomizedRun& run,
                                               const Eigen::VectorXd& maxmin_loss_by_k,
                                               double nominal_mm_loss, double loss_max) {
  if (maxmin_loss_by_k.size() != run.V.size())
    throw validation_error("max-min losses must align with the cardinality axis");
  std::vector<ResiliencePoint> out;
  auto point = [&](int k, double lmm, double lad) {
    ResiliencePoint p;
    p.k = k;
    p.resilience_mm = 100.0 * (1.0 - lmm / loss_max);
    p.resilience_ad = 100.0 * (1.0 - lad / loss_max);
    p.value_of_response = p.resilience_mm - p.resilience_ad;
    return p;
  };
  out.push_back(point(0, nominal_mm_loss, run.nominal_loss));
  for (int k = 1; k <= run.V.size(); ++k)
    out.push_back(point(k, maxmin_loss_by_k[k - 1], run.V[k - 1]));
  return out;
}

} // namespace dnres
