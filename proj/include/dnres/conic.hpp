#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

namespace dnres {

/// Semantic label tying a program row back to its source constraint.
enum class RowKind {
  eq2,     // substation voltage pin
  eq3,     // kg >= d
  eq4,     // DG cap under attack (the only rows with attack coupling)
  eq5,     // DG cap under operator disconnect
  eq6,     // pg >= 0
  eq7a,    // qg >= -eta*pg
  eq7b,    // qg <= eta*pg
  eq9a,    // beta lower
  eq9b,    // beta upper
  eq11a,   // DG voltage window, lower
  eq11b,   // DG voltage window, upper
  eq12a,   // load voltage window, lower
  eq12b,   // load voltage window, upper
  eq13p,   // pt = pc - pg
  eq13q,   // qt = qc - qg
  eq14,    // active power conservation
  eq15,    // reactive power conservation
  eq16,    // voltage drop
  tmax_lo, // t >= v_nom - v
  tmax_hi, // t >= v - v_nom
  t_sign,  // t >= 0
  box_lo,  // binary relaxation bounds
  box_hi,
  forced,     // connectivity forced by an earlier cascade stage
  structural, // Propositions 6-7 ordering cuts
  cut,        // Benders / no-good cut in the master
  other,
};

struct RowTag {
  RowKind kind = RowKind::other;
  int node = -1; // node id or edge child id; -1 when not applicable
};

/// One second-order constraint ||E w + f|| <= g'w + h.
struct SocConstraint {
  Eigen::SparseMatrix<double> E; // rows x num_vars
  Eigen::VectorXd f;
  Eigen::SparseVector<double> g;
  double h = 0.0;
  int edge = -1; // child node of the edge this cone relaxes, -1 if generic
};

/// Standard-form program
///   min  c'w + c0
///   s.t. A w >= b + B d          (duals lambda >= 0)
///        Aeq w = beq + Beq d     (free duals mu)
///        ||E^j w + f^j|| <= g^j' w + h^j   (dual pairs alpha^j, beta^j)
/// The attack enters only through the right-hand sides.
struct ConicProgram {
  int num_vars = 0;
  Eigen::VectorXd c;
  double c0 = 0.0;

  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double> B;
  Eigen::VectorXd d;

  Eigen::SparseMatrix<double> Aeq;
  Eigen::VectorXd beq;
  Eigen::SparseMatrix<double> Beq;

  std::vector<SocConstraint> cones;
  std::vector<RowTag> row_tags;
  std::vector<RowTag> eq_row_tags;
  std::vector<std::string> var_names;

  Eigen::VectorXd rhs() const;    // b + B d
  Eigen::VectorXd rhs_eq() const; // beq + Beq d
  std::string dump() const;       // plain-text standard-form listing
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd w;
  double objective = 0.0; // c'w + c0
  Eigen::VectorXd lambda; // per A row, >= 0
  Eigen::VectorXd mu;     // per Aeq row
  std::vector<Eigen::VectorXd> alpha;
  std::vector<double> beta;
  double gap = 0.0; // relative duality gap
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
  std::string diagnostic;
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iter = 200;
  /// Infeasibility is declared when the certificate test passes, or when the
  /// gap stalls for this many iterations while infeasibility grows.
  int stall_window = 20;
};

const char* to_string(SolveStatus s);
const char* to_string(RowKind k);

/// Homogeneous self-dual primal-dual path-following solver with
/// Nesterov-Todd scaling and a Mehrotra predictor-corrector step.
ConicSolution solve(const ConicProgram& p, const SolverOptions& opts = {});
ConicSolution solve(const ConicProgram& p, double tol);

/// c - A'lambda - Aeq'mu + sum_j (E^j'alpha^j - beta^j g^j); ~0 at optimality.
Eigen::VectorXd kkt_stationarity_residual(const ConicProgram& p, const ConicSolution& s);

/// (b + Bd)'lambda + (beq + Beq d)'mu + sum_j (f^j'alpha^j - h^j beta^j).
double dual_objective(const ConicProgram& p, const ConicSolution& s);

} // namespace dnres
