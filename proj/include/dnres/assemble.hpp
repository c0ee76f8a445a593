#pragma once

#include "dnres/conic.hpp"
#include "dnres/network.hpp"
#include "dnres/powerflow.hpp"

namespace dnres {

/// Binary load/DG connectivity pair (kc, kg); 1 = disconnected.
struct ConfigurationVector {
  std::vector<uint8_t> kc, kg; // size N+1, index 0 unused

  static ConfigurationVector all(const Network& net, int value);
  /// kappa in K(d): kg_i >= d_i at every DG node.
  bool respects(const AttackVector& d) const;
};

/// Reduced operator response (beta, kc, kg); DG outputs follow Prop. 2.
struct OperatorResponse {
  Eigen::VectorXd beta;        // per node, 0 where no load
  std::vector<uint8_t> kc, kg; // size N+1
};

enum class FlowModel { Npf, Lpf };

/// Which operator subproblem family a program encodes.
struct ProblemShape {
  FlowModel flow = FlowModel::Npf;
  /// Load control acts on active power; a connected load keeps its reactive
  /// demand (it only vanishes on disconnect).
  bool reactive_follows_beta = false;
  bool load_windows = true;          ///< Eq. (12) rows; dropped for the cascade's first stage
  bool beta_one = false;             ///< loads pinned to full demand, no load control
  bool beta_is_one_minus_kc = false; ///< connected loads carry full demand (final cascade stage)
  bool structural_cuts = false;      ///< Props 6-7 connectivity-ordering rows
};

/// Built standard-form program plus the column bookkeeping needed to read a
/// solution back into network terms. Column entries are -1 where absent.
struct BuiltProgram {
  ConicProgram prog;
  std::vector<int> col_beta, col_kc, col_pg, col_qg, col_kg;
  std::vector<int> col_pt, col_qt, col_v, col_P, col_Q, col_ell;
  int col_v0 = -1, col_t = -1;
  FlowModel flow = FlowModel::Npf;
};

struct BinaryInfo {
  int node = 0;
  bool is_dg = false; // kg vs kc
  int depth = 0;
};

/// Assembles the operator programs for one (network, sag, attack) instance:
/// the binary-relaxed program used as the branch-and-bound node relaxation
/// and the fixed-configuration SOCP whose duals feed the Benders cut.
class OperatorProgramBuilder {
 public:
  OperatorProgramBuilder(const Network& net, double dv0, AttackVector d,
                         ProblemShape shape = {});

  const std::vector<BinaryInfo>& binaries() const { return binaries_; }

  /// Node relaxation with per-binary box bounds (kc block first, then kg).
  BuiltProgram relaxed(const std::vector<double>& lo, const std::vector<double>& hi) const;

  /// Fixed-configuration program: kappa folded into the right-hand sides,
  /// matching the worked standard form row for row. Throws when kappa does
  /// not respect the attack.
  BuiltProgram fixed(const ConfigurationVector& kappa) const;

  NetworkState extract_state(const BuiltProgram& bp, const ConicSolution& sol) const;
  OperatorResponse extract_response(const BuiltProgram& bp, const ConicSolution& sol,
                                    const ConfigurationVector* fixed_kappa = nullptr) const;

  const Network& network() const { return net_; }
  double dv0() const { return dv0_; }
  const AttackVector& attack() const { return d_; }
  const ProblemShape& shape() const { return shape_; }

 private:
  BuiltProgram build(bool kappa_variable, const ConfigurationVector* kappa,
                     const std::vector<double>* lo, const std::vector<double>* hi) const;

  const Network& net_;
  double dv0_;
  AttackVector d_;
  ProblemShape shape_;
  std::vector<BinaryInfo> binaries_;
};

/// (O-SOCP): the operator second-order cone program for a fixed attack and
/// configuration, in the standard form with attack coupling in B.
ConicProgram assemble_operator_socp(const Network& net, double dv0, const AttackVector& d,
                                    const ConfigurationVector& kappa,
                                    FlowModel flow = FlowModel::Npf);

} // namespace dnres
