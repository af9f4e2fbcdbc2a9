#include <catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "shorttime/runner.hpp"

using namespace shorttime;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> config_errors(const std::string& text, const std::string& kind) {
  try {
    (void)parse_config(text, kind);
  } catch (const ConfigError& e) {
    return e.messages();
  }
  return {};
}

bool any_contains(const std::vector<std::string>& v, const std::string& needle) {
  for (const auto& s : v) {
    if (s.find(needle) != std::string::npos) return true;
  }
  return false;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("shorttime_cli_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

EstimateReport point(long n, double ratio) {
  EstimateReport r;
  r.spec = "schrodinger";
  r.n = n;
  r.k = 1;
  r.max_ratio = ratio;
  return r;
}

// Runs the CLI binary; returns its exit status and captures stderr.
int run_cli(const std::string& args, std::string* err = nullptr) {
  const fs::path log = fs::temp_directory_path() / "shorttime_cli_test_stderr.txt";
  const std::string cmd = std::string(SHORTTIME_CLI_PATH) + " " + args + " > /dev/null 2> " + log.string();
  const int status = std::system(cmd.c_str());
  if (err) *err = slurp(log);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("minimal bilinear config gets documented defaults") {
  const auto c = parse_config(R"({"seed": 5})", "bilinear");
  CHECK(c.experiment == "bilinear");
  CHECK(c.seed == 5);
  CHECK(c.spec == "schrodinger");
  CHECK(c.sweep_n == std::vector<long>{16, 32, 64});
  CHECK(c.sweep_k == std::vector<long>{1});
  CHECK(c.trials == 100);
  CHECK(c.quadrature_nodes == 0);
  CHECK(c.lattice.modes == 0);
  CHECK_FALSE(c.ascent.enabled);
  CHECK(c.threads == 1);
  // the experiment key may come from the file instead of the command
  CHECK(parse_config(R"({"experiment": "bilinear", "seed": 5})") == c);
}

TEST_CASE("config errors") {
  SECTION("seed required") {
    CHECK(config_errors(R"({"trials": 10})", "bilinear") == std::vector<std::string>{"seed required"});
    CHECK(parse_config(R"({"trials": 10})", "bilinear", 9).seed == 9);
  }
  SECTION("every violation is listed, with suggestions") {
    const auto e = config_errors(R"({"trails": 3, "spec": "schrodinge", "sweep": {"N": [16, 24], "M": [1]},
                                     "quadrature": {"nodes": 10}})",
                                 "bilinear");
    CHECK(any_contains(e, "unknown key 'trails' (did you mean 'trials'?)"));
    CHECK(any_contains(e, "sweep.unknown key 'M'"));
    CHECK(any_contains(e, "seed required"));
    CHECK(e.size() == 3);  // structural errors stop before semantic checks
    const auto f = config_errors(R"({"seed": 1, "spec": "schrodinge", "sweep": {"N": [16, 24]},
                                     "quadrature": {"nodes": 10}, "trials": 0})",
                                 "bilinear");
    CHECK(any_contains(f, "unknown dispersion 'schrodinge'"));
    CHECK(any_contains(f, "band 24 is not a power of two"));
    CHECK(any_contains(f, "quadrature.nodes"));
    CHECK(any_contains(f, "trials: must be at least 1"));
  }
  SECTION("wrong types") {
    const auto e = config_errors(R"({"seed": -1, "trials": "many", "sweep": {"N": [16.5]}})", "bilinear");
    CHECK(any_contains(e, "seed: expected a nonnegative integer"));
    CHECK(any_contains(e, "trials: expected a nonnegative integer"));
    CHECK(any_contains(e, "sweep.N[0]: expected an integer"));
  }
  SECTION("band beyond Nyquist names the band and the limit") {
    const auto e = config_errors(R"({"seed": 1, "lattice": {"modes": 32}, "sweep": {"N": [4, 16]}})", "bilinear");
    REQUIRE(e.size() == 1);
    CHECK(any_contains(e, "band 16"));
    CHECK(any_contains(e, "Nyquist limit 16"));
    const auto f = config_errors(R"({"seed": 1, "lattice": {"modes": 64}, "flux": {"N": [8, 64]}})", "flux");
    CHECK(any_contains(f, "flux.N: band 64"));
    const auto g = config_errors(R"({"seed": 1, "lattice": {"modes": 256}})", "commutator");
    CHECK(any_contains(g, "beyond the Nyquist limit 128"));
  }
  SECTION("sections of other experiments are rejected") {
    const auto e = config_errors(R"({"seed": 1, "solver": {"dt": 0.1}})", "bilinear");
    CHECK(e == std::vector<std::string>{"'solver' is not used by experiment 'bilinear'"});
  }
  SECTION("sweeping N and K together") {
    const auto e = config_errors(R"({"seed": 1, "sweep": {"N": [32, 64], "K": [1, 2]}})", "bilinear");
    CHECK(any_contains(e, "sweep either N or K"));
  }
  SECTION("solver checks") {
    const auto e = config_errors(R"({"seed": 1, "solver": {"equation": "kdv", "dt": 0.3, "T": 1.0},
                                     "profile": {"bands": [64]}})",
                                 "evolve");
    CHECK(any_contains(e, "solver.equation"));
    CHECK(any_contains(e, "not a whole number of steps"));
    CHECK(any_contains(e, "beyond the dealiasing limit 85"));
  }
  SECTION("kind mismatch and unknown kind") {
    CHECK(any_contains(config_errors(R"({"experiment": "flux", "seed": 1})", "evolve"), "config says 'flux'"));
    CHECK(any_contains(config_errors(R"({"experiment": "evolv", "seed": 1})", ""), "did you mean 'evolve'"));
    CHECK(any_contains(config_errors("{", "evolve"), "not valid JSON"));
  }
}

TEST_CASE("config round trip") {
  const std::vector<std::pair<std::string, std::string>> cases{
      {"bilinear", R"({"seed": 3, "spec": "fractional:1.5", "lattice": {"modes": 256, "scale": 1.0},
                      "sweep": {"N": [64], "K": [1, 2, 4]}, "trials": 7, "quadrature": {"nodes": 65},
                      "ascent": {"restarts": 3, "coherent_start": true, "tol": 1e-9}, "threads": 2,
                      "output": "somewhere"})"},
      {"hhh", R"({"seed": 4, "spec": "airy", "sweep": {"N": [8, 16]}, "hhh": {"lambda": 3.5}})"},
      {"linear-strichartz", R"({"seed": 5, "spec": "zk", "sweep": {"N": [8]}, "trials": 2})"},
      {"evolve", R"({"seed": 6, "solver": {"equation": "zk", "dt": 0.001, "T": 0.01, "snapshot_every": 2},
                    "lattice": {"modes": 32},
                    "profile": {"kind": "modes", "modes": [{"k": [1, 2], "amplitude": 0.3, "phase": 0.1}]}})"},
      {"flux", R"({"seed": 7, "flux": {"N": [2, 4], "s": 1.25}, "profile": {"bands": [2], "sobolev_s": 1.25}})"},
      {"vnorm", R"({"seed": 8, "vnorm": {"p": [1, 2.5], "s": 0.5, "path": "/tmp/x", "max_band": 8},
                   "spec": "airy"})"},
      {"commutator", R"({"seed": 9, "commutator": {"N": 32, "N2": [1, 8], "cutoff": "smooth", "draws": 3},
                        "lattice": {"modes": 512}})"},
  };
  for (const auto& [kind, text] : cases) {
    INFO(kind);
    const ExperimentConfig c = parse_config(text, kind);
    const std::string once = config_to_json(c).dump();
    const ExperimentConfig d = parse_config(once, kind);
    CHECK(d == c);
    CHECK(config_to_json(d).dump() == once);
    CHECK(config_hash(d) == config_hash(c));
  }
  const auto a = parse_config(R"({"seed": 1, "threads": 1})", "commutator");
  const auto b = parse_config(R"({"seed": 1, "threads": 3, "output": "x"})", "commutator");
  const auto c = parse_config(R"({"seed": 2})", "commutator");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a) != config_hash(c));
}

TEST_CASE("plot data") {
  SECTION("four-point sweep: four data rows and a slope row") {
    std::vector<EstimateReport> rs;
    for (long n : {16L, 32L, 64L, 128L}) rs.push_back(point(n, 1.0 / std::sqrt(double(n))));
    const std::string s = emit_plotdata(rs, false).str();
    CHECK(s ==
          "kind,log2_band,log2_max_ratio\n"
          "data,4,-2\n"
          "data,5,-2.5\n"
          "data,6,-3\n"
          "data,7,-3.5\n"
          "slope,-0.5,0\n");
  }
  SECTION("single point: slope n/a") {
    CHECK(emit_plotdata({point(16, 0.5)}, false).str() == "kind,log2_band,log2_max_ratio\ndata,4,-1\nslope,n/a,n/a\n");
  }
  SECTION("K sweep uses K") {
    auto r = point(64, 2.0);
    r.k = 8;
    CHECK(emit_plotdata({r}, true).str().find("data,3,1\n") != std::string::npos);
  }
  SECTION("empty report") { CHECK_THROWS_AS(emit_plotdata({}, false), Error); }
}

TEST_CASE("runs are deterministic across thread counts") {
  const std::vector<std::pair<std::string, std::vector<std::string>>> cases{
      {R"({"experiment": "bilinear", "seed": 11, "sweep": {"N": [8, 16]}, "trials": 6,
           "ascent": {"restarts": 2}})",
       {"trials.csv", "summary.csv", "plotdata.csv", "report.json"}},
      {R"({"experiment": "flux", "seed": 12, "lattice": {"modes": 32}, "profile": {"bands": [1, 2], "amplitude": 0.1},
           "solver": {"dt": 0.001, "T": 0.01, "snapshot_every": 1}, "flux": {"N": [1, 2, 4]}})",
       {"flux.csv", "energy.csv", "report.json"}},
      {R"({"experiment": "commutator", "seed": 13, "commutator": {"N": 16, "N2": [1, 2, 4], "draws": 3},
           "lattice": {"modes": 256}})",
       {"commutator.csv", "commutator_draws.csv", "report.json"}},
  };
  for (const auto& [text, files] : cases) {
    auto c = parse_config(text);
    INFO(c.experiment);
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    c.threads = 1;
    (void)run(c, a);
    c.threads = 3;
    (void)run(c, b);
    for (const auto& f : files) {
      INFO(f);
      REQUIRE(fs::exists(a / f));
      CHECK(slurp(a / f) == slurp(b / f));
    }
    auto ma = nlohmann::json::parse(slurp(a / "manifest.json"));
    auto mb = nlohmann::json::parse(slurp(b / "manifest.json"));
    CHECK(ma["config_hash"] == mb["config_hash"]);
    for (auto* m : {&ma, &mb}) {
      m->erase("timing");
      m->erase("threads");
    }
    CHECK(ma == mb);
  }
}

TEST_CASE("evolve writes snapshots and a conservation log") {
  const fs::path d = scratch("evolve");
  auto c = parse_config(R"({"seed": 2, "lattice": {"modes": 32}, "profile": {"bands": [1, 2]},
                            "solver": {"dt": 0.01, "T": 0.05, "snapshot_every": 2}})",
                        "evolve");
  const auto res = run(c, d);
  const auto path = read_path(d / "snapshots");
  CHECK(path.times == std::vector<double>{0.0, 0.02, 0.04, 0.05});
  const std::string log = slurp(d / "conservation.csv");
  CHECK(log.rfind("step,time,mean,l2,drift,hermitian_defect\n0,0,0,", 0) == 0);
  CHECK(res.report["snapshots"] == 4);
  CHECK(std::find(res.outputs.begin(), res.outputs.end(), "manifest.json") != res.outputs.end());

  // the snapshots feed a vnorm run
  const fs::path v = scratch("vnorm");
  nlohmann::json vc = {{"seed", 1}, {"spec", "fractional:2"}, {"vnorm", {{"p", {1.0, 2.0}}, {"path", (d / "snapshots").string()}, {"max_band", 1}}}};
  const auto vres = run(parse_config(vc.dump(), "vnorm"), v);
  CHECK(vres.report["samples"] == 4);
  CHECK(slurp(v / "vnorm.csv").rfind("quantity,param,N,value\nv_p,1,all,", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const fs::path d = scratch("exit");
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream(d / name) << text;
    return (d / name).string();
  };
  std::string err;
  SECTION("success") {
    const auto cfg = write("ok.json", R"({"seed": 1, "commutator": {"N": 16, "N2": [1, 2], "draws": 2},
                                          "lattice": {"modes": 256}})");
    CHECK(run_cli("commutator --config " + cfg + " --out " + (d / "out").string(), &err) == 0);
    CHECK(fs::exists(d / "out" / "commutator.csv"));
    CHECK(fs::exists(d / "out" / "manifest.json"));
  }
  SECTION("config error lists every violation as JSON") {
    const auto cfg = write("bad.json", R"({"trails": 1, "sweep": {"N": [16]}})");
    CHECK(run_cli("bilinear --config " + cfg + " --out " + (d / "out").string(), &err) == 2);
    const auto j = nlohmann::json::parse(err);
    CHECK(j["error"]["kind"] == "config");
    CHECK(j["error"]["exit_code"] == 2);
    CHECK(j["error"]["messages"].size() == 2);
  }
  SECTION("--seed supplies the seed") {
    const auto cfg = write("noseed.json", R"({"commutator": {"N": 16, "N2": [1], "draws": 1}, "lattice": {"modes": 256}})");
    CHECK(run_cli("commutator --config " + cfg + " --out " + (d / "o2").string(), &err) == 2);
    CHECK(run_cli("commutator --config " + cfg + " --seed 4 --threads 2 --out " + (d / "o2").string(), &err) == 0);
    const auto m = nlohmann::json::parse(slurp(d / "o2" / "manifest.json"));
    CHECK(m["config"]["seed"] == 4);
    CHECK(m["threads"] == 2);
  }
  SECTION("missing output directory, unknown flag") {
    const auto cfg = write("c.json", R"({"seed": 1})");
    CHECK(run_cli("commutator --config " + cfg, &err) == 2);
    CHECK(run_cli("commutator --config " + cfg + " --bogus 1", &err) == 2);
    CHECK(run_cli("commutator --config " + (d / "missing.json").string() + " --out x", &err) == 2);
  }
  SECTION("runtime error") {
    const auto cfg = write("rt.json", R"({"seed": 1, "spec": "airy", "vnorm": {"path": "/nonexistent/path"}})");
    CHECK(run_cli("vnorm --config " + cfg + " --out " + (d / "o3").string(), &err) == 3);
    CHECK(nlohmann::json::parse(err)["error"]["kind"] == "runtime");
  }
  SECTION("blow-up guard") {
    const auto cfg = write("bu.json", R"({"seed": 1, "lattice": {"modes": 64},
                                          "profile": {"bands": [4, 8], "amplitude": 1e4},
                                          "solver": {"dt": 0.01, "T": 1.0}})");
    CHECK(run_cli("evolve --config " + cfg + " --out " + (d / "o4").string(), &err) == 4);
    CHECK(nlohmann::json::parse(err)["error"]["kind"] == "blow_up");
  }
}

TEST_CASE("sample configs parse") {
  int seen = 0;
  for (const auto& e : fs::directory_iterator(SHORTTIME_CONFIG_DIR)) {
    if (e.path().extension() != ".json") continue;
    INFO(e.path().filename().string());
    std::ifstream f(e.path());
    std::stringstream ss;
    ss << f.rdbuf();
    CHECK_NOTHROW(parse_config(ss.str()));
    ++seen;
  }
  CHECK(seen == 8);
}
