#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dnres {

/// Per-node load parameters. Voltage bounds are squared magnitudes (pu^2).
struct LoadSpec {
  double pc_max = 0.0;   ///< nominal active demand (pu)
  double qc_max = 0.0;   ///< nominal reactive demand (pu)
  double beta_min = 0.0; ///< lower bound on the load-control fraction
  double v_min = 0.81;
  double v_max = 1.21;
  double cost_lc = 0.0; ///< $ per pu of controlled load
  double cost_ls = 0.0; ///< $ per pu of shed load (>= cost_lc)
};

/// Per-node distributed-generator parameters.
struct DgSpec {
  double pg_max = 0.0; ///< active capacity (pu)
  double eta = 0.0;    ///< max |reactive|/active ratio
  double v_min = 0.81;
  double v_max = 1.21;
};

/// Binary DG-disruption choice, indexed by node id (1..N).
/// Entries are meaningful only at nodes carrying a DG.
struct AttackVector {
  std::vector<uint8_t> d; // size N+1, index 0 unused

  AttackVector() = default;
  explicit AttackVector(int node_count) : d(node_count + 1, 0) {}

  int cardinality() const {
    int k = 0;
    for (uint8_t b : d) k += b;
    return k;
  }
  bool contains(const AttackVector& other) const; // support inclusion: other ⊆ this
  std::vector<int> support() const;
};

/// Substation voltage sag plus DG-disruption attack.
struct Scenario {
  double dv0 = 0.0; ///< substation squared-voltage drop (pu^2)
  AttackVector attack;
};

class validation_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Immutable radial grid: tree rooted at the substation (node 0), line
/// impedances on the edge (parent(i), i), optional load/DG per node.
class Network {
 public:
  /// Parses the JSON network document. Throws validation_error with the
  /// offending node/edge named on malformed or inconsistent input.
  static Network load(const std::string& json_text);
  /// One of {net24, net36, net118}: the homogeneous test feeders.
  static Network builtin(const std::string& name);
  static Network from_parents(const std::vector<int>& parent,
                              std::vector<double> r, std::vector<double> x);

  std::string to_json() const;

  int node_count() const { return n_; } ///< N, substation excluded
  int parent(int i) const { return parent_[i]; }
  double line_r(int i) const { return r_[i]; } ///< edge (parent(i), i)
  double line_x(int i) const { return x_[i]; }
  const std::optional<LoadSpec>& load(int i) const { return load_[i]; }
  const std::optional<DgSpec>& dg(int i) const { return dg_[i]; }
  void set_load(int i, std::optional<LoadSpec> s);
  void set_dg(int i, std::optional<DgSpec> s);

  double v_nom = 1.0;     ///< nominal squared voltage (pu^2)
  double cost_vr = 100.0; ///< $ per pu^2 of worst nodal voltage deviation
  double cost_ll = 100.0; ///< $ per pu of line losses

  const std::vector<int>& children(int i) const { return children_[i]; }
  int depth(int i) const { return depth_[i]; }
  /// Nodes ordered parents-before-children, starting at the first tier.
  const std::vector<int>& topo_order() const { return topo_; }

  /// Subtree D_i rooted at i, i included.
  std::vector<int> subtree(int i) const;
  /// (R_ij, X_ij): impedance summed over the edges shared by the two
  /// root paths, i.e. the root path of the deepest common ancestor.
  std::pair<double, double> common_impedance(int i, int j) const;
  /// No-Reverse-Power-Flow: every subtree's net consumption is nonnegative,
  /// both active and reactive. Arrays indexed by node id, entry 0 ignored.
  bool check_nrpf(std::span<const double> pt, std::span<const double> qt) const;
  /// Loss with every load and DG disconnected (the resilience normalizer).
  double max_loss() const;

  std::vector<int> dg_nodes() const;
  std::vector<int> load_nodes() const;

  int lca(int i, int j) const;
  void check_node(int i) const;

 private:
  Network() = default;
  void finalize(); // builds children/topo/depth, validates the tree

  int n_ = 0;
  std::vector<int> parent_;
  std::vector<double> r_, x_;
  std::vector<std::optional<LoadSpec>> load_;
  std::vector<std::optional<DgSpec>> dg_;
  std::vector<std::vector<int>> children_;
  std::vector<int> depth_;
  std::vector<int> topo_;
};

} // namespace dnres
