#include <doctest.h>

#include <random>

#include "dnres/powerflow.hpp"

using namespace dnres;
using Eigen::VectorXd;

namespace {

Network two_node() {
  return Network::load(R"({"nodes":[{"id":1,"parent":0,"r":0.01,"x":0.02}]})");
}

// Random radial feeders with nonnegative injections (hence NRPF) for the
// property suites.
Network random_tree(std::mt19937_64& rng, int n) {
  std::vector<int> parent(n + 1, 0);
  std::vector<double> r(n + 1, 0.0), x(n + 1, 0.0);
  std::uniform_real_distribution<double> imp(0.001, 0.02);
  for (int i = 1; i <= n; ++i) {
    parent[i] = i == 1 ? 0 : int(rng() % uint64_t(i));
    r[i] = imp(rng);
    x[i] = 2.0 * imp(rng);
  }
  return Network::from_parents(parent, r, x);
}

void random_injections(std::mt19937_64& rng, int n, VectorXd& pt, VectorXd& qt) {
  std::uniform_real_distribution<double> load(0.0, 0.08);
  pt = VectorXd::Zero(n + 1);
  qt = VectorXd::Zero(n + 1);
  for (int i = 1; i <= n; ++i) {
    pt[i] = load(rng);
    qt[i] = load(rng) / 3.0;
  }
}

// Closed-form voltage via shared path impedances; the independent route for
// checking the recursion inside solve_lpf.
VectorXd lpf_voltage_closed_form(const Network& net, double dv0, const VectorXd& pt,
                                 const VectorXd& qt) {
  int n = net.node_count();
  VectorXd v(n + 1);
  v[0] = net.v_nom - dv0;
  for (int j = 1; j <= n; ++j) {
    double drop = 0.0;
    for (int k = 1; k <= n; ++k) {
      auto [R, X] = net.common_impedance(j, k);
      drop += R * pt[k] + X * qt[k];
    }
    v[j] = net.v_nom - dv0 - 2.0 * drop;
  }
  return v;
}

} // namespace

TEST_CASE("two-node LPF matches the hand evaluation") {
  Network net = two_node();
  VectorXd pt(2), qt(2);
  pt << 0.0, 0.75;
  qt << 0.0, 0.25;
  LpfSolution s = solve_lpf(net, 0.0, pt, qt);
  CHECK(s.P[1] == doctest::Approx(0.75));
  CHECK(s.Q[1] == doctest::Approx(0.25));
  CHECK(s.v[1] == doctest::Approx(0.975)); // 1 - 2(0.0075 + 0.005)
}

TEST_CASE("zero injections give flat profiles, sag shifts them") {
  Network net = Network::builtin("net24"); // substation scheduled at 1.04
  VectorXd z = VectorXd::Zero(25);
  LpfSolution s = solve_lpf(net, 0.0, z, z);
  CHECK(s.P.maxCoeff() == 0.0);
  CHECK(s.v.minCoeff() == doctest::Approx(1.04));
  LpfSolution sag = solve_lpf(net, 0.02, z, z);
  for (int i = 0; i <= 24; ++i) CHECK(sag.v[i] == doctest::Approx(1.02));
  BfsResult b = solve_npf_bfs(net, 0.02, z, z);
  CHECK(b.iterations == 1);
  CHECK(b.ell.maxCoeff() == 0.0);
  for (int i = 0; i <= 24; ++i) CHECK(b.v[i] == doctest::Approx(1.02));
}

TEST_CASE("LPF recursion agrees with the shared-impedance closed form") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    Network net = random_tree(rng, 5 + int(rng() % 26));
    VectorXd pt, qt;
    random_injections(rng, net.node_count(), pt, qt);
    LpfSolution s = solve_lpf(net, 0.01, pt, qt);
    VectorXd v2 = lpf_voltage_closed_form(net, 0.01, pt, qt);
    for (int i = 1; i <= net.node_count(); ++i) CHECK(s.v[i] == doctest::Approx(v2[i]).epsilon(1e-12));
  }
}

TEST_CASE("two-node NPF sits below LPF") {
  Network net = two_node();
  VectorXd pt(2), qt(2);
  pt << 0.0, 0.75;
  qt << 0.0, 0.25;
  BfsResult b = solve_npf_bfs(net, 0.0, pt, qt);
  CHECK(b.nrpf_ok);
  CHECK(b.v[1] < 0.975);
  CHECK(b.P[1] > 0.75);
  // converged state satisfies the current equation to tolerance
  CHECK(relaxation_tightness(net, b.P, b.Q, b.ell, b.v) <= 1e-9);
}

TEST_CASE("net24 nominal point: residual and minimum voltage") {
  Network net = Network::builtin("net24");
  VectorXd pt = VectorXd::Zero(25), qt = VectorXd::Zero(25);
  for (int i = 1; i <= 24; ++i) {
    if (net.load(i)) {
      pt[i] = net.load(i)->pc_max;
      qt[i] = net.load(i)->qc_max;
    } else {
      pt[i] = -net.dg(i)->pg_max;
      qt[i] = -net.dg(i)->eta * net.dg(i)->pg_max;
    }
  }
  BfsResult b = solve_npf_bfs(net, 0.0, pt, qt);
  CHECK_FALSE(b.nrpf_ok); // leaf DGs export upward at full output
  CHECK(relaxation_tightness(net, b.P, b.Q, b.ell, b.v) <= 1e-9);
  // full-output profile clears the DG floor with a small margin
  double vmin = b.v.tail(24).minCoeff();
  CHECK(vmin > 0.92);
  CHECK(vmin < 0.96);
}

TEST_CASE("LPF/NPF ordering and Propositions 1 and 3 in finite differences") {
  std::mt19937_64 rng(42);
  const double h = 1e-6, slack = 1e-10;
  for (int trial = 0; trial < 25; ++trial) {
    Network net = random_tree(rng, 5 + int(rng() % 26));
    int n = net.node_count();
    VectorXd pt, qt;
    random_injections(rng, n, pt, qt);
    BfsResult base = solve_npf_bfs(net, 0.0, pt, qt);
    LpfSolution lin = solve_lpf(net, 0.0, pt, qt);
    REQUIRE(base.nrpf_ok);
    for (int i = 1; i <= n; ++i) {
      CHECK(lin.v[i] >= base.v[i] - 1e-12);
      CHECK(base.P[i] >= lin.P[i] - 1e-12);
      CHECK(base.Q[i] >= lin.Q[i] - 1e-12);
    }

    // Prop 1: d f / d pt_k >= d f_hat / d pt_k >= 0 > d v_hat / d c > d v / d c
    int k = 1 + int(rng() % uint64_t(n));
    VectorXd pt2 = pt;
    pt2[k] += h;
    BfsResult up = solve_npf_bfs(net, 0.0, pt2, qt);
    LpfSolution lup = solve_lpf(net, 0.0, pt2, qt);
    for (int e = 1; e <= n; ++e) {
      double dP = up.P[e] - base.P[e], dPl = lup.P[e] - lin.P[e];
      CHECK(dP >= dPl - slack);
      CHECK(dPl >= -slack);
    }
    for (int i = 1; i <= n; ++i) {
      double dv = up.v[i] - base.v[i], dvl = lup.v[i] - lin.v[i];
      CHECK(dvl >= dv - slack);
      CHECK(dv <= slack);
    }

    // Prop 3: a downstream bump moves everything at least as much
    std::vector<int> below = net.subtree(k);
    if (below.size() > 1) {
      int l = below[1 + int(rng() % uint64_t(below.size() - 1))];
      VectorXd pt3 = pt;
      pt3[l] += h;
      BfsResult up_l = solve_npf_bfs(net, 0.0, pt3, qt);
      for (int e = 1; e <= n; ++e)
        CHECK(up_l.P[e] - base.P[e] >= up.P[e] - base.P[e] - slack);
      for (int i = 1; i <= n; ++i)
        CHECK(up_l.v[i] - base.v[i] <= up.v[i] - base.v[i] + slack);
    }
  }
}

TEST_CASE("constructed slack shows in the tightness measure") {
  Network net = two_node();
  NetworkState s = NetworkState::zeros(1, 1.0);
  CHECK(relaxation_tightness(net, s) == 0.0);
  s.ell[1] = 1.0;
  CHECK(relaxation_tightness(net, s) >= s.v[0] - 1e-12);
}

TEST_CASE("determinism: identical inputs, identical bits") {
  Network net = Network::builtin("net36");
  VectorXd pt = VectorXd::Zero(37), qt = VectorXd::Zero(37);
  for (int i = 1; i <= 36; ++i) {
    pt[i] = net.load(i) ? net.load(i)->pc_max : -net.dg(i)->pg_max;
    qt[i] = pt[i] / 3.0;
  }
  BfsResult a = solve_npf_bfs(net, 0.01, pt, qt);
  BfsResult b = solve_npf_bfs(net, 0.01, pt, qt);
  CHECK(a.v == b.v);
  CHECK(a.ell == b.ell);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("non-convergence and dead voltage raise") {
  Network net = two_node();
  VectorXd pt(2), qt(2);
  pt << 0.0, 0.75;
  qt << 0.0, 0.25;
  SweepConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 1e-16;
  CHECK_THROWS_AS(solve_npf_bfs(net, 0.0, pt, qt, cfg), validation_error);
  pt[1] = 60.0; // far beyond the feeder's capacity: collapse
  CHECK_THROWS_AS(solve_npf_bfs(net, 0.0, pt, qt), validation_error);
}
