#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dnres/network.hpp"

namespace dnres {

/// Scenario configuration shared by all commands; a JSON config file carries
/// the same field names, with command-line flags taking precedence.
struct RunConfig {
  std::string network = "net24"; // built-in name or file path
  double dv0 = 0.0;
  std::optional<int> budget;
  std::optional<double> target_resilience; // percent in (0, 100]
  int m = 1;
  std::string epsilon = "variable"; // or "fixed:<value>"
  bool lpf = false;
  bool no_structural_cuts = false;
  uint64_t seed = 0;
  int permutations = 10;
  bool maxmin = false; // cascade: also compute the max-min curve
  std::string attack;  // operator: comma-separated DG node list
  std::vector<double> targets;
  std::vector<int> budgets;
  std::vector<int> m_values;
  std::string out;               // output path; empty = stdout
  std::string format = "csv";    // csv | json
  int threads = 0;               // 0 = hardware concurrency
  long iter_limit = 10000;

  static RunConfig from_json_file(const std::string& path);
  void merge_json(const std::string& text); // file fields fill unset defaults
};

Network load_network_arg(const std::string& arg);

int cmd_pf(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_operator(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gbd(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_cascade(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err);

} // namespace dnres
