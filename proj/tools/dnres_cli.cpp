// Command-line front end: power flow, operator response, min-cardinality
// attacks via the decomposition, cascade simulation, and table sweeps.

#include <CLI11.hpp>
#include <iostream>

#include "dnres/runconfig.hpp"

int main(int argc, char** argv) {
  CLI::App app{"radial distribution network resilience toolkit"};
  app.require_subcommand(1);

  dnres::RunConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override)");
    sub->add_option("--network", cfg.network, "built-in name (net24/net36/net118) or file path");
    sub->add_option("--dv0", cfg.dv0, "substation squared-voltage sag (pu^2)");
    sub->add_option("--out", cfg.out, "output path (default stdout)");
    sub->add_option("--format", cfg.format, "csv or json");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = auto)");
  };

  CLI::App* pf = app.add_subcommand("pf", "pre-contingency power flow (LPF and NPF)");
  add_common(pf);

  CLI::App* op = app.add_subcommand("operator", "optimal operator response to one attack");
  add_common(op);
  op->add_option("--attack", cfg.attack, "comma-separated DG node ids");
  op->add_flag("--lpf", cfg.lpf, "linear power flow model");
  op->add_flag("--no-structural-cuts", cfg.no_structural_cuts, "disable Prop. 6/7 cuts");

  CLI::App* gbd = app.add_subcommand("gbd", "min-cardinality / budget-k max-min attack search");
  add_common(gbd);
  int budget = -1;
  double target = -1.0;
  gbd->add_option("--budget", budget, "attack budget k");
  gbd->add_option("--target-resilience", target, "target resilience percent in (0,100]");
  gbd->add_option("--m", cfg.m, "criticality parameter");
  gbd->add_option("--epsilon", cfg.epsilon, "variable | fixed:<value>");
  gbd->add_flag("--lpf", cfg.lpf, "decompose the LPF/MILP family");
  gbd->add_flag("--no-structural-cuts", cfg.no_structural_cuts, "disable Prop. 6/7 cuts");
  gbd->add_option("--iter-limit", cfg.iter_limit, "iteration cap");

  CLI::App* cas = app.add_subcommand("cascade", "autonomous-disconnect cascade simulation");
  add_common(cas);
  cas->add_option("--permutations", cfg.permutations, "number of random permutations Z");
  cas->add_option("--seed", cfg.seed, "PRNG seed");
  cas->add_flag("--maxmin", cfg.maxmin, "also emit the max-min resilience curve");
  cas->add_option("--m", cfg.m, "criticality parameter for the max-min curve");

  CLI::App* sweep = app.add_subcommand("sweep", "table-style batch runs");
  add_common(sweep);
  sweep->add_option("--targets", cfg.targets, "resilience targets (percent)")->delimiter(',');
  sweep->add_option("--budgets", cfg.budgets, "attack budgets")->delimiter(',');
  sweep->add_option("--m", cfg.m, "criticality parameter");
  sweep->add_option("--m-values", cfg.m_values, "criticality parameters to sweep")->delimiter(',');
  sweep->add_flag("--lpf", cfg.lpf, "decompose the LPF/MILP family");
  sweep->add_option("--epsilon", cfg.epsilon, "variable | fixed:<value>");
  sweep->add_option("--iter-limit", cfg.iter_limit, "iteration cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  try {
    if (!config_path.empty()) {
      // file fills the fields, then re-parse so flags win
      cfg = dnres::RunConfig::from_json_file(config_path);
      app.clear();
      app.parse(argc, argv);
    }
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (budget >= 0) cfg.budget = budget;
  if (target >= 0.0) cfg.target_resilience = target;

  if (pf->parsed()) return dnres::cmd_pf(cfg, std::cout, std::cerr);
  if (op->parsed()) return dnres::cmd_operator(cfg, std::cout, std::cerr);
  if (gbd->parsed()) return dnres::cmd_gbd(cfg, std::cout, std::cerr);
  if (cas->parsed()) return dnres::cmd_cascade(cfg, std::cout, std::cerr);
  if (sweep->parsed()) return dnres::cmd_sweep(cfg, std::cout, std::cerr);
  return 2;
}
