#include "dnres/runconfig.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dnres/cascade.hpp"
#include "dnres/gbd.hpp"
#include "dnres/powerflow.hpp"

namespace dnres {

using nlohmann::json;

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw validation_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  cfg.merge_json(ss.str());
  return cfg;
}

void RunConfig::merge_json(const std::string& text) {
  json doc = json::parse(text);
  if (doc.contains("network")) network = doc["network"].get<std::string>();
  if (doc.contains("dv0")) dv0 = doc["dv0"].get<double>();
  if (doc.contains("budget")) budget = doc["budget"].get<int>();
  if (doc.contains("target_resilience")) target_resilience = doc["target_resilience"].get<double>();
  if (doc.contains("m")) m = doc["m"].get<int>();
  if (doc.contains("epsilon")) epsilon = doc["epsilon"].get<std::string>();
  if (doc.contains("lpf")) lpf = doc["lpf"].get<bool>();
  if (doc.contains("seed")) seed = doc["seed"].get<uint64_t>();
  if (doc.contains("permutations")) permutations = doc["permutations"].get<int>();
  if (doc.contains("maxmin")) maxmin = doc["maxmin"].get<bool>();
  if (doc.contains("attack")) attack = doc["attack"].get<std::string>();
  if (doc.contains("targets")) targets = doc["targets"].get<std::vector<double>>();
  if (doc.contains("budgets")) budgets = doc["budgets"].get<std::vector<int>>();
  if (doc.contains("m_values")) m_values = doc["m_values"].get<std::vector<int>>();
  if (doc.contains("out")) out = doc["out"].get<std::string>();
  if (doc.contains("format")) format = doc["format"].get<std::string>();
  if (doc.contains("threads")) threads = doc["threads"].get<int>();
  if (doc.contains("iter_limit")) iter_limit = doc["iter_limit"].get<long>();
}

Network load_network_arg(const std::string& arg) {
  if (arg == "net24" || arg == "net36" || arg == "net118") return Network::builtin(arg);
  std::ifstream in(arg);
  if (!in) throw validation_error("cannot open network file " + arg);
  std::stringstream ss;
  ss << in.rdbuf();
  return Network::load(ss.str());
}

namespace {

GbdConfig gbd_config(const RunConfig& cfg) {
  GbdConfig g;
  g.m = cfg.m;
  g.lpf_mode = cfg.lpf;
  g.use_structural_cuts = !cfg.no_structural_cuts;
  g.iter_limit = cfg.iter_limit;
  if (cfg.epsilon.rfind("fixed:", 0) == 0) {
    g.epsilon_mode = GbdConfig::EpsilonMode::fixed;
    g.epsilon_fixed = std::stod(cfg.epsilon.substr(6));
  } else if (cfg.epsilon != "variable") {
    throw validation_error("epsilon must be 'variable' or 'fixed:<value>'");
  }
  return g;
}

AttackVector parse_attack(const Network& net, const std::string& text) {
  AttackVector d(net.node_count());
  if (text.empty()) return d;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    int node = std::stoi(tok);
    net.check_node(node);
    if (!net.dg(node)) throw validation_error("node " + tok + " has no DG to disrupt");
    d.d[node] = 1;
  }
  return d;
}

struct OutputSink {
  std::ofstream file;
  std::ostream* os = nullptr;
  OutputSink(const RunConfig& cfg, std::ostream& fallback) {
    if (cfg.out.empty()) {
      os = &fallback;
    } else {
      file.open(cfg.out);
      if (!file) throw validation_error("cannot open output file " + cfg.out);
      os = &file;
    }
  }
  std::ostream& stream() { return *os; }
};

} // namespace

int cmd_pf(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    Network net = load_network_arg(cfg.network);
    const int n = net.node_count();
    Eigen::VectorXd pt = Eigen::VectorXd::Zero(n + 1), qt = Eigen::VectorXd::Zero(n + 1);
    for (int i = 1; i <= n; ++i) {
      if (net.load(i)) {
        pt[i] += net.load(i)->pc_max;
        qt[i] += net.load(i)->qc_max;
      }
      if (net.dg(i)) {
        pt[i] -= net.dg(i)->pg_max;
        qt[i] -= net.dg(i)->eta * net.dg(i)->pg_max;
      }
    }
    LpfSolution lpf = solve_lpf(net, cfg.dv0, pt, qt);
    BfsResult npf = solve_npf_bfs(net, cfg.dv0, pt, qt);
    bool nrpf = net.check_nrpf({pt.data(), size_t(n + 1)}, {qt.data(), size_t(n + 1)});
    if (!nrpf) err << "warning: NRPF violated; relaxation exactness not guaranteed\n";
    double tight = relaxation_tightness(net, npf.P, npf.Q, npf.ell, npf.v);

    OutputSink sink(cfg, out);
    if (cfg.format == "json") {
      json doc;
      doc["nrpf"] = nrpf;
      doc["tightness"] = tight;
      doc["iterations"] = npf.iterations;
      json nodes = json::array();
      for (int i = 1; i <= n; ++i)
        nodes.push_back({{"node", i},
                         {"pt", pt[i]},
                         {"qt", qt[i]},
                         {"v_lpf", lpf.v[i]},
                         {"v_npf", npf.v[i]},
                         {"P", npf.P[i]},
                         {"Q", npf.Q[i]},
                         {"ell", npf.ell[i]}});
      doc["nodes"] = nodes;
      sink.stream() << doc.dump(2) << "\n";
    } else {
      auto& os = sink.stream();
      os << "node,parent,pt,qt,P_lpf,Q_lpf,v_lpf,P_npf,Q_npf,ell,v_npf\n";
      os << std::setprecision(10);
      for (int i = 1; i <= n; ++i)
        os << i << ',' << net.parent(i) << ',' << pt[i] << ',' << qt[i] << ',' << lpf.P[i] << ','
           << lpf.Q[i] << ',' << lpf.v[i] << ',' << npf.P[i] << ',' << npf.Q[i] << ',' << npf.ell[i]
           << ',' << npf.v[i] << "\n";
      os << "# nrpf=" << (nrpf ? "true" : "false") << " tightness=" << tight
         << " sweep_iterations=" << npf.iterations << " min_v_npf=" << npf.v.tail(n).minCoeff()
         << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_operator(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    Network net = load_network_arg(cfg.network);
    AttackVector d = parse_attack(net, cfg.attack);
    OperatorOptimum op = cfg.lpf ? solve_milp_lpf(net, cfg.dv0, d, !cfg.no_structural_cuts)
                                 : solve_misocp(net, cfg.dv0, d, !cfg.no_structural_cuts);
    double lmax = net.max_loss();
    OutputSink sink(cfg, out);
    json doc;
    doc["attack"] = d.support();
    doc["loss"] = op.loss;
    doc["resilience"] = 100.0 * (1.0 - op.loss / lmax);
    doc["breakdown"] = {{"vr", op.breakdown.vr},
                        {"lc", op.breakdown.lc},
                        {"ls", op.breakdown.ls},
                        {"ll", op.breakdown.ll}};
    std::vector<int> shed, dg_off;
    for (int i = 1; i <= net.node_count(); ++i) {
      if (op.response.kc[i]) shed.push_back(i);
      if (op.response.kg[i]) dg_off.push_back(i);
    }
    doc["loads_shed"] = shed;
    doc["dgs_off"] = dg_off;
    doc["bnb_nodes"] = op.bnb_nodes;
    if (!cfg.lpf)
      doc["tightness"] = relaxation_tightness(net, op.state);
    sink.stream() << doc.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_gbd(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    Network net = load_network_arg(cfg.network);
    if (cfg.budget.has_value() == cfg.target_resilience.has_value())
      throw validation_error("provide exactly one of --budget / --target-resilience");
    GbdConfig g = gbd_config(cfg);
    double lmax = net.max_loss();
    OutputSink sink(cfg, out);
    if (cfg.target_resilience) {
      double r = *cfg.target_resilience;
      if (!(r > 0.0 && r <= 100.0)) throw validation_error("target resilience must be in (0,100]");
      double target = (1.0 - r / 100.0) * lmax;
      GbdResult res = run_min_cardinality(net, cfg.dv0, target, g);
      sink.stream() << res.to_json() << "\n";
      if (res.status == GbdStatus::Failure) return 3;
      if (res.status == GbdStatus::IterLimit) return 4;
      return 0;
    }
    MaxMinResult res = run_budget_k_maxmin(net, cfg.dv0, *cfg.budget, g);
    json doc;
    doc["budget"] = *cfg.budget;
    doc["attack"] = res.attack.support();
    doc["loss"] = res.loss;
    doc["resilience"] = res.resilience;
    sink.stream() << doc.dump(2) << "\n";
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_cascade(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    Network net = load_network_arg(cfg.network);
    if (cfg.permutations < 1) throw validation_error("permutations must be >= 1");
    RandomizedRun run =
        randomized_worst_case(net, cfg.dv0, cfg.permutations, cfg.seed, cfg.threads);
    OutputSink sink(cfg, out);
    sink.stream() << run.to_csv();
    if (cfg.maxmin) {
      GbdConfig g = gbd_config(cfg);
      const int nd = int(net.dg_nodes().size());
      Eigen::VectorXd lmm(nd);
      for (int k = 1; k <= nd; ++k)
        lmm[k - 1] = run_budget_k_maxmin(net, cfg.dv0, k, g).loss;
      double nominal = solve_misocp(net, cfg.dv0, AttackVector(net.node_count())).loss;
      auto curves = resilience_curves(run, lmm, nominal, net.max_loss());
      auto& os = sink.stream();
      os << "k,resilience_mm,resilience_ad,value_of_response\n";
      os << std::setprecision(10);
      for (const auto& p : curves)
        os << p.k << ',' << p.resilience_mm << ',' << p.resilience_ad << ','
           << p.value_of_response << "\n";
    }
    return 0;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    Network net = load_network_arg(cfg.network);
    double lmax = net.max_loss();
    OutputSink sink(cfg, out);
    auto& os = sink.stream();
    os << std::setprecision(8);
    if (!cfg.targets.empty()) {
      GbdConfig g = gbd_config(cfg);
      bool any_ok = false;
      os << "target,resilience,iterations,time_s,cardinality\n";
      for (double r : cfg.targets) {
        if (!(r > 0.0 && r <= 100.0)) throw validation_error("target resilience outside (0,100]");
        GbdResult res = run_min_cardinality(net, cfg.dv0, (1.0 - r / 100.0) * lmax, g);
        if (res.status == GbdStatus::Success) {
          any_ok = true;
          os << r << ',' << 100.0 * (1.0 - res.realized_loss / lmax) << ',' << res.iterations
             << ',' << res.wall_time << ',' << res.cardinality << "\n";
        } else {
          os << r << ','
             << (res.status == GbdStatus::Failure ? "Failure" : "IterLimit") << ','
             << res.iterations << ',' << res.wall_time << ",\n";
        }
      }
      return any_ok ? 0 : 3;
    }
    if (!cfg.budgets.empty()) {
      // Table-I style: brute-force baseline per budget, then the gap per m.
      std::vector<int> ms = cfg.m_values.empty() ? std::vector<int>{cfg.m} : cfg.m_values;
      os << "m,budget,resilience_brute,resilience,gap_percent,iterations,time_s,cardinality\n";
      for (int k : cfg.budgets) {
        MaxMinResult brute = brute_force_maxmin(net, cfg.dv0, k, !cfg.no_structural_cuts,
                                                cfg.threads);
        for (int m : ms) {
          RunConfig sub = cfg;
          sub.m = m;
          GbdConfig g = gbd_config(sub);
          auto t0 = std::chrono::steady_clock::now();
          GbdResult res = run_min_cardinality(net, cfg.dv0, std::max(brute.loss, 1e-9), g);
          double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          double gap = res.status == GbdStatus::Success
                           ? 100.0 * double(res.cardinality - k) / std::max(1, k)
                           : std::nan("");
          os << m << ',' << k << ',' << brute.resilience << ','
             << (res.status == GbdStatus::Success
                     ? 100.0 * (1.0 - res.realized_loss / lmax)
                     : std::nan(""))
             << ',' << gap << ',' << res.iterations << ',' << dt << ',' << res.cardinality
             << "\n";
        }
      }
      return 0;
    }
    throw validation_error("sweep needs --targets or --budgets");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

} // namespace dnres
