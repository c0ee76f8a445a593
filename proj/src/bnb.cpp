#include "dnres/bnb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>

namespace dnres {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Node {
  std::vector<int8_t> fix; // -1 free, else 0/1
  double bound = -kInf;
  int branch_k = -1;
  double branch_val = 0.5; // relaxed value of the branching binary
  long seq = 0;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound; // min-heap on bound
    return a.seq > b.seq;
  }
};

} // namespace

BnbResult branch_and_bound(const BnbProblem& prob, const BnbOptions& opts) {
  BnbResult res;
  res.value = kInf;
  const int nb = prob.num_binaries;
  long seq = 0;

  auto effective = [&](double bound) {
    return opts.integer_objective ? std::ceil(bound - 1e-6) : bound;
  };
  auto prunable = [&](double bound) {
    if (!res.feasible) return false;
    double slack = opts.rel_gap * std::max(1.0, std::abs(res.value));
    return effective(bound) >= res.value - slack;
  };

  // Evaluate a fixing: may update the incumbent; returns a node to branch on.
  auto evaluate = [&](std::vector<int8_t> fix) -> std::optional<Node> {
    ++res.nodes;
    std::vector<double> lo(nb, 0.0), hi(nb, 1.0), vals;
    for (int k = 0; k < nb; ++k)
      if (fix[k] >= 0) lo[k] = hi[k] = double(fix[k]);
    ConicSolution sol = prob.solve_relaxation(lo, hi, vals);
    if (sol.status == SolveStatus::Infeasible) return std::nullopt;
    if (sol.status != SolveStatus::Optimal) {
      ++res.numerical_failures;
      // keep the subtree alive: force a branch on the first free binary
      for (int k = 0; k < nb; ++k)
        if (fix[k] < 0) return Node{std::move(fix), -kInf, k, 0.5, ++seq};
      return std::nullopt;
    }
    double bound = sol.objective;
    if (prunable(bound)) return std::nullopt;

    int branch_k = -1;
    double best_score = -1.0;
    for (int k = 0; k < nb; ++k) {
      if (fix[k] >= 0) continue;
      double v = vals[k];
      if (std::abs(v - std::lround(v)) <= opts.int_tol) continue;
      double score = 0.5 - std::abs(v - 0.5); // larger = more fractional
      bool better;
      if (branch_k < 0 || score > best_score + 1e-9)
        better = true;
      else if (score > best_score - 1e-9) // tie: deeper network node first
        better = prob.branch_priority[k] > prob.branch_priority[branch_k];
      else
        better = false;
      if (better) {
        branch_k = k;
        best_score = std::max(best_score, score);
      }
    }
    if (branch_k < 0) { // integral
      if (!res.feasible || bound < res.value - 1e-12 * std::max(1.0, std::abs(res.value))) {
        res.feasible = true;
        res.value = bound;
        res.solution = std::move(sol);
        res.binaries.assign(nb, 0);
        for (int k = 0; k < nb; ++k) res.binaries[k] = uint8_t(std::lround(vals[k]));
      }
      return std::nullopt;
    }
    return Node{std::move(fix), bound, branch_k, vals[branch_k], ++seq};
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;

  // Dive from a node to an integral leaf, following the relaxation's
  // rounding; siblings go to the queue for the best-bound phase.
  auto dive = [&](Node node) {
    while (true) {
      if (res.nodes >= opts.max_nodes) {
        res.node_limit_hit = true;
        return;
      }
      if (prunable(node.bound)) return;
      int first = node.branch_val >= 0.5 ? 1 : 0;
      std::vector<int8_t> near = node.fix, far = std::move(node.fix);
      near[node.branch_k] = int8_t(first);
      far[node.branch_k] = int8_t(1 - first);
      if (auto sibling = evaluate(std::move(far))) open.push(std::move(*sibling));
      auto next = evaluate(std::move(near));
      if (!next) return;
      node = std::move(*next);
    }
  };

  if (auto root = evaluate(std::vector<int8_t>(nb, -1))) dive(std::move(*root));

  while (!open.empty()) {
    if (res.nodes >= opts.max_nodes) {
      res.node_limit_hit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (prunable(node.bound)) break; // best-bound order: the rest follows
    dive(std::move(node));
  }
  return res;
}

} // namespace dnres
