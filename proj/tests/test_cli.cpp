#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "dnres/runconfig.hpp"

using namespace dnres;

namespace {

std::string tmp_path(const std::string& name) { return "/tmp/dnres_test_" + name; }

// Tiny feeder whose eight attacks exhaust quickly: the failure-path fixture.
std::string six_node_file() {
  std::string path = tmp_path("six.json");
  std::ofstream f(path);
  f << R"({"v_nom": 1.0, "cost_vr": 100.0, "cost_ll": 100.0, "nodes": [
    {"id":1,"parent":0,"r":0.01,"x":0.02,"load":{"pc_max":0.4,"qc_max":0.1333333333,
     "beta_min":0.8,"v_min":0.9,"v_max":1.1,"cost_lc":250.0,"cost_ls":2500.0}},
    {"id":2,"parent":1,"r":0.01,"x":0.02,"dg":{"pg_max":0.3,"eta":0.3333333333,"v_min":0.92,"v_max":1.08}},
    {"id":3,"parent":2,"r":0.01,"x":0.02,"load":{"pc_max":0.4,"qc_max":0.1333333333,
     "beta_min":0.8,"v_min":0.9,"v_max":1.1,"cost_lc":250.0,"cost_ls":2500.0}},
    {"id":4,"parent":3,"r":0.01,"x":0.02,"dg":{"pg_max":0.3,"eta":0.3333333333,"v_min":0.92,"v_max":1.08}},
    {"id":5,"parent":4,"r":0.01,"x":0.02,"load":{"pc_max":0.4,"qc_max":0.1333333333,
     "beta_min":0.8,"v_min":0.9,"v_max":1.1,"cost_lc":250.0,"cost_ls":2500.0}},
    {"id":6,"parent":5,"r":0.01,"x":0.02,"dg":{"pg_max":0.3,"eta":0.3333333333,"v_min":0.92,"v_max":1.08}}
  ]})";
  f.close();
  return path;
}

} // namespace

TEST_CASE("pf command emits the per-node table and the health footer") {
  RunConfig cfg;
  cfg.network = "net24";
  std::ostringstream out, err;
  CHECK(cmd_pf(cfg, out, err) == 0);
  std::string text = out.str();
  CHECK(text.find("node,parent,pt,qt") == 0);
  CHECK(text.find("min_v_npf=0.95") != std::string::npos);
  CHECK(text.find("nrpf=false") != std::string::npos); // leaf DGs export at full output

  // the sag shifts the whole profile down
  RunConfig sag = cfg;
  sag.dv0 = 0.02;
  std::ostringstream out2;
  CHECK(cmd_pf(sag, out2, err) == 0);
  CHECK(out2.str().find("min_v_npf=0.93") != std::string::npos);
}

TEST_CASE("pf rejects malformed documents with exit 2") {
  std::ofstream f(tmp_path("bad.json"));
  f << "{ not json";
  f.close();
  RunConfig cfg;
  cfg.network = tmp_path("bad.json");
  std::ostringstream out, err;
  CHECK(cmd_pf(cfg, out, err) == 2);
  CHECK(err.str().find("error:") == 0);
}

TEST_CASE("operator command reports breakdown and tightness") {
  RunConfig cfg;
  cfg.network = "net24";
  cfg.attack = "8,16";
  cfg.dv0 = 0.01;
  std::ostringstream out, err;
  CHECK(cmd_operator(cfg, out, err) == 0);
  CHECK(out.str().find("\"resilience\"") != std::string::npos);
  CHECK(out.str().find("\"tightness\"") != std::string::npos);

  cfg.attack = "7"; // load node: no DG to disrupt
  std::ostringstream out2;
  CHECK(cmd_operator(cfg, out2, err) == 2);
}

TEST_CASE("gbd command: success, failure and config-error exit codes") {
  RunConfig cfg;
  cfg.network = "net24";
  cfg.target_resilience = 99.0;
  cfg.m = 1;
  std::ostringstream out, err;
  CHECK(cmd_gbd(cfg, out, err) == 0);
  CHECK(out.str().find("\"Success\"") != std::string::npos);

  RunConfig fail;
  fail.network = six_node_file();
  fail.dv0 = 0.02;
  fail.target_resilience = 30.0; // beyond the tiny feeder's worst loss
  fail.m = 2;
  std::ostringstream out2;
  CHECK(cmd_gbd(fail, out2, err) == 3);

  RunConfig both = cfg;
  both.budget = 1;
  std::ostringstream out3;
  CHECK(cmd_gbd(both, out3, err) == 2); // exactly one of budget/target

  RunConfig neither;
  neither.network = "net24";
  std::ostringstream out4;
  CHECK(cmd_gbd(neither, out4, err) == 2);
}

TEST_CASE("cascade command: deterministic CSV with the pinned header") {
  RunConfig cfg;
  cfg.network = "net24";
  cfg.permutations = 2;
  cfg.seed = 7;
  cfg.dv0 = 0.02;
  std::ostringstream out1, out2, err;
  CHECK(cmd_cascade(cfg, out1, err) == 0);
  CHECK(cmd_cascade(cfg, out2, err) == 0);
  CHECK(out1.str() == out2.str()); // byte-identical on the same seed
  CHECK(out1.str().find("k,perm_0,perm_1,worst") == 0);

  RunConfig bad = cfg;
  bad.permutations = 0;
  std::ostringstream out3;
  CHECK(cmd_cascade(bad, out3, err) == 2);
}

TEST_CASE("sweep command: pinned header, failure rows, empty-list error") {
  RunConfig cfg;
  cfg.network = six_node_file();
  cfg.dv0 = 0.02;
  cfg.targets = {90.0, 30.0};
  cfg.m = 1;
  std::ostringstream out, err;
  CHECK(cmd_sweep(cfg, out, err) == 0); // one row succeeded
  std::string text = out.str();
  CHECK(text.find("target,resilience,iterations,time_s,cardinality") == 0);
  CHECK(text.find("Failure") != std::string::npos);

  RunConfig empty;
  empty.network = "net24";
  std::ostringstream out2;
  CHECK(cmd_sweep(empty, out2, err) == 2);
}

TEST_CASE("config file fills fields and output lands in the file") {
  std::ofstream f(tmp_path("cfg.json"));
  f << R"({"network": "net24", "dv0": 0.01, "out": ")" << tmp_path("pf.csv") << R"("})";
  f.close();
  RunConfig cfg = RunConfig::from_json_file(tmp_path("cfg.json"));
  CHECK(cfg.network == "net24");
  CHECK(cfg.dv0 == 0.01);
  std::ostringstream out, err;
  CHECK(cmd_pf(cfg, out, err) == 0);
  std::ifstream check(tmp_path("pf.csv"));
  std::string line;
  std::getline(check, line);
  CHECK(line.find("node,parent") == 0);
}

TEST_CASE("the installed binary honors the exit-code contract") {
  // build tree layout: the binary sits next to the tests directory
  int rc = std::system("./build/dnres pf --network net24 > /dev/null 2>&1");
  CHECK(WEXITSTATUS(rc) == 0);
  rc = std::system("cd /root/proj && ./build/dnres pf --network /nonexistent.json > /dev/null 2>&1");
  CHECK(WEXITSTATUS(rc) == 2);
  rc = std::system("cd /root/proj && ./build/dnres gbd --network net24 > /dev/null 2>&1");
  CHECK(WEXITSTATUS(rc) == 2);
}
