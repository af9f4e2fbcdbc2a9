#pragma once

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fftw3.h>
#include <json.hpp>

#include "shorttime/energy.hpp"
#include "shorttime/estimate.hpp"
#include "shorttime/experiment.hpp"
#include "shorttime/parallel.hpp"
#include "shorttime/solver.hpp"
#include "shorttime/table.hpp"
#include "shorttime/variation.hpp"

namespace shorttime {

inline constexpr const char* kToolName = "shorttime_cli";
inline constexpr const char* kToolVersion = "0.1.0";

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3, exit_blow_up = 4 };

// log2(band) against log2(max_ratio), one "data" row per report, then one
// "slope" row holding the fitted slope and intercept ("n/a" below two points).
[[nodiscard]] inline CsvTable emit_plotdata(const std::vector<EstimateReport>& reports, bool sweep_k) {
  if (reports.empty()) throw Error("plotdata: empty report");
  CsvTable t({"kind", "log2_band", "log2_max_ratio"});
  std::vector<double> x, y;
  for (const auto& r : reports) {
    const double lx = std::log2(static_cast<double>(sweep_k ? r.k : r.n));
    const double ly = std::log2(r.max_ratio);
    t.add({"data", fmt17(lx), fmt17(ly)});
    if (r.max_ratio > 0.0) {
      x.push_back(lx);
      y.push_back(ly);
    }
  }
  const auto slope = fit_slope(x, y);
  if (!slope) {
    t.add({"slope", "n/a", "n/a"});
  } else {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      mx += x[i];
      my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    t.add({"slope", fmt17(*slope), fmt17(my - *slope * mx)});
  }
  return t;
}

struct RunResult {
  nlohmann::json report;
  std::vector<std::string> outputs;  // relative to the output directory
};

namespace detail {

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << j.dump(2) << '\n';
}

struct Outputs {
  std::filesystem::path dir;
  std::vector<std::string> names;
  void table(const std::string& name, const CsvTable& t) {
    t.write(dir / name);
    names.push_back(name);
  }
  void json(const std::string& name, const nlohmann::json& j) {
    write_json(dir / name, j);
    names.push_back(name);
  }
};

[[nodiscard]] inline TorusLattice estimate_lattice(const ExperimentConfig& c, int dim, long n) {
  return c.lattice.modes == 0 ? band_lattice(dim, n, c.lattice.scale)
                              : make_lattice(dim, c.lattice.modes, c.lattice.scale);
}

[[nodiscard]] inline QuadratureRule estimate_quadrature(const ExperimentConfig& c, const DispersionSpec& spec,
                                                        long n) {
  const std::size_t m = c.quadrature_nodes == 0 ? default_node_count(n) : c.quadrature_nodes;
  return simpson_rule(m, window(spec, n).delta);
}

inline CsvTable summary_table(const std::vector<EstimateReport>& reports) {
  CsvTable t({"spec", "N", "K", "trials", "max_ratio", "ascent_ratio", "theoretical_factor", "normalized_constant"});
  for (const auto& r : reports) {
    t.add({r.spec, std::to_string(r.n), std::to_string(r.k), std::to_string(r.trials), fmt17(r.max_ratio),
           r.ascent_ratio ? fmt17(*r.ascent_ratio) : "", fmt17(r.theoretical_factor), fmt17(r.normalized_constant)});
  }
  return t;
}

inline RunResult run_estimate(const ExperimentConfig& c, Outputs& out) {
  const DispersionSpec spec = dispersion_from_name(c.spec);
  const int dim = spec_dim(spec, c.lattice.dim);
  struct Cell {
    long n, k;
  };
  std::vector<Cell> cells;
  for (long n : c.sweep_n) {
    if (c.experiment == "bilinear") {
      for (long k : c.sweep_k) cells.push_back({n, k});
    } else {
      cells.push_back({n, c.experiment == "hhh" ? n : 0});
    }
  }
  // Cells run side by side when there are enough of them to fill the pool,
  // otherwise one at a time with the pool inside each cell.
  const bool outer = cells.size() >= c.threads && c.threads > 1;
  const unsigned inner = outer ? 1u : c.threads;
  std::vector<EstimateReport> reports(cells.size());
  parallel_for(cells.size(), outer ? c.threads : 1u, [&](std::size_t i) {
    const auto [n, k] = cells[i];
    const QuadratureRule quad = estimate_quadrature(c, spec, n);
    if (c.experiment == "hhh") {
      reports[i] = hhh_separated_ratio(spec, n, c.trials, c.seed, quad, c.hhh_lambda, inner);
      return;
    }
    const TorusLattice lat = estimate_lattice(c, dim, n);
    if (c.experiment == "linear-strichartz") {
      EstimateReport r;
      r.spec = spec.name;
      r.n = n;
      r.trials = c.trials;
      r.ratios.assign(c.trials, 0.0);
      const EuclideanWindow win = window(spec, n);
      if (!band_resolved(lat, n)) throw BandError("band N=" + std::to_string(n) + " is not resolved by the lattice");
      parallel_for(c.trials, inner, [&](std::size_t t) {
        const FourierField u = random_field(lat, BandProjector::sharp(n), derive_seed(c.seed, t), false, false);
        r.ratios[t] = linear_strichartz_norm(u, spec, win, quad);
      });
      r.finalize();
      reports[i] = std::move(r);
      return;
    }
    EstimateReport r = monte_carlo_ratio(spec, lat, n, k, c.trials, c.seed, quad, inner);
    if (c.ascent.enabled) {
      AscentOptions opt;
      opt.restarts = c.ascent.restarts;
      opt.pool = c.ascent.pool == 0 ? c.trials : c.ascent.pool;
      opt.max_rounds = c.ascent.max_rounds;
      opt.power_iters = c.ascent.power_iters;
      opt.tol = c.ascent.tol;
      opt.power_tol = c.ascent.power_tol;
      opt.coherent_start = c.ascent.coherent_start;
      opt.threads = inner;
      if (outer) opt.cache_bytes /= c.threads;
      r.ascent_ratio = extremizer_ascent(spec, lat, n, k, quad, c.seed, opt).ratio;
      r.finalize();
    }
    reports[i] = std::move(r);
  });
  const bool sweep_k = c.experiment == "bilinear" && c.sweep_k.size() > 1;
  const auto slope = attach_slope(reports, sweep_k);

  CsvTable trials = trial_table();
  for (const auto& r : reports) append_trial_rows(trials, r);
  out.table("trials.csv", trials);
  out.table("summary.csv", summary_table(reports));
  out.table("plotdata.csv", emit_plotdata(reports, sweep_k));
  RunResult res;
  res.report["experiment"] = c.experiment;
  res.report["spec"] = spec.name;
  res.report["dim"] = dim;
  res.report["sweep"] = sweep_k ? "K" : "N";
  res.report["slope"] = slope ? nlohmann::json(*slope) : nlohmann::json(nullptr);
  res.report["reports"] = nlohmann::json::array();
  for (const auto& r : reports) res.report["reports"].push_back(report_to_json(r));
  return res;
}

[[nodiscard]] inline NonlinearForm form_of(const ExperimentConfig& c) {
  return c.solver.form == "divergence" ? NonlinearForm::divergence : NonlinearForm::product;
}

struct SolvedPath {
  EquationSpec eq;
  FourierField initial;
  EvolveResult result;
};

inline SolvedPath solve(const ExperimentConfig& c) {
  const EquationSpec eq = equation_from_name(c.solver.equation);
  const TorusLattice lat = make_lattice(eq.dim(), c.lattice.modes, c.lattice.scale);
  FourierField u0 = initial_data(lat, c.profile);
  EvolveResult r = evolve(u0, eq, c.solver.T, c.solver.dt, c.solver.snapshot_every, form_of(c));
  return {eq, std::move(u0), std::move(r)};
}

inline CsvTable conservation_table(const EvolveResult& r) {
  CsvTable t({"step", "time", "mean", "l2", "drift", "hermitian_defect"});
  for (const auto& row : r.log) {
    t.add({std::to_string(row.step), fmt17(row.time), fmt17(row.mean), fmt17(row.l2), fmt17(row.drift),
           fmt17(row.hermitian_defect)});
  }
  return t;
}

inline nlohmann::json solve_summary(const ExperimentConfig& c, const SolvedPath& s) {
  nlohmann::json j;
  j["equation"] = s.eq.name();
  j["lattice"] = {{"dim", s.eq.dim()}, {"modes", c.lattice.modes}, {"scale", c.lattice.scale}};
  j["dt"] = c.solver.dt;
  j["T"] = c.solver.T;
  j["snapshots"] = s.result.path.size();
  j["initial_l2"] = s.result.log.front().l2;
  j["final_l2"] = s.result.log.back().l2;
  j["max_drift"] = s.result.max_drift;
  j["initial_hs"] = sobolev_norm(s.initial, c.profile.sobolev_s);
  return j;
}

inline RunResult run_evolve(const ExperimentConfig& c, Outputs& out) {
  const SolvedPath s = solve(c);
  write_path(out.dir / "snapshots", s.result.path);
  out.names.push_back("snapshots/");
  out.table("conservation.csv", conservation_table(s.result));
  return {solve_summary(c, s), {}};
}

inline RunResult run_flux(const ExperimentConfig& c, Outputs& out) {
  const SolvedPath s = solve(c);
  const auto& path = s.result.path;
  std::vector<FluxRecord> recs(c.flux.n.size());
  parallel_for(recs.size(), c.threads, [&](std::size_t i) { recs[i] = flux_decompose(path, s.eq, c.flux.n[i], c.flux.s); });
  CsvTable flux({"N", "s", "weight", "high_low_high", "high_high_high", "high_high_low", "total", "direct_total",
                 "increment", "reconstruction"});
  for (const auto& r : recs) {
    flux.add({std::to_string(r.n), fmt17(r.s), fmt17(r.weight), fmt17(r.flux[0]), fmt17(r.flux[1]),
              fmt17(r.flux[2]), fmt17(r.total), fmt17(r.direct_total), fmt17(r.increment), fmt17(r.reconstruction)});
  }
  out.table("flux.csv", flux);

  SampledPath<FourierField> first;
  first.push(path.times.front(), path.values.front());
  SampledPath<FourierField> last;
  last.push(path.times.back(), path.values.back());
  const EnergyLedger led = e_s_norm(path, c.flux.s);
  const EnergyLedger led0 = e_s_norm(first, c.flux.s);
  const EnergyLedger led1 = e_s_norm(last, c.flux.s);
  CsvTable energy({"N", "weight", "initial", "final", "sup"});
  for (const auto& [n, e] : led.entries) {
    energy.add({std::to_string(n), fmt17(std::pow(static_cast<double>(n), 2.0 * c.flux.s)), fmt17(led0.entries.at(n)),
                fmt17(led1.entries.at(n)), fmt17(e)});
  }
  out.table("energy.csv", energy);
  RunResult res{solve_summary(c, s), {}};
  res.report["s"] = c.flux.s;
  res.report["e_s_initial"] = led0.total;
  res.report["e_s_final"] = led1.total;
  res.report["e_s_path"] = led.total;
  res.report["e_s_increment"] = led.total - led0.total;
  return res;
}

inline RunResult run_vnorm(const ExperimentConfig& c, Outputs& out) {
  RunResult res;
  SampledPath<FourierField> path;
  DispersionSpec spec;
  if (!c.vnorm.path.empty()) {
    path = read_path(c.vnorm.path);
    spec = dispersion_from_name(c.spec);
    res.report["source"] = c.vnorm.path;
  } else {
    SolvedPath s = solve(c);
    res.report = solve_summary(c, s);
    res.report["source"] = "solver";
    spec = s.eq.linear;
    path = std::move(s.result.path);
  }
  CsvTable t({"quantity", "param", "N", "value"});
  res.report["v_p"] = nlohmann::json::array();
  for (double p : c.vnorm.p) {
    const double v = v_p_norm(path, p);
    t.add({"v_p", fmt17(p), "all", fmt17(v)});
    res.report["v_p"].push_back({{"p", p}, {"value", v}});
  }
  const EnergyLedger led = e_s_norm(path, c.vnorm.s);
  for (const auto& [n, e] : led.entries) t.add({"e_s_sup", fmt17(c.vnorm.s), std::to_string(n), fmt17(e)});
  t.add({"e_s", fmt17(c.vnorm.s), "all", fmt17(led.total)});
  std::optional<long> max_band;
  if (c.vnorm.max_band != 0) max_band.emplace(c.vnorm.max_band);
  const ShorttimeV2Result v2 = shorttime_v2(path, spec, c.vnorm.s, max_band);
  for (const auto& [n, e] : v2.per_dyad) t.add({"shorttime_v2_sq", fmt17(c.vnorm.s), std::to_string(n), fmt17(e)});
  t.add({"shorttime_v2", fmt17(c.vnorm.s), "all", fmt17(v2.value)});
  out.table("vnorm.csv", t);
  res.report["spec"] = spec.name;
  res.report["samples"] = path.size();
  res.report["e_s"] = led.total;
  res.report["shorttime_v2"] = v2.value;
  return res;
}

// Real mean-free Gaussian data on |k| < 4N, unit L2 norm.
[[nodiscard]] inline FourierField commutator_data(const TorusLattice& lat, long n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> c(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (std::abs(lat.mode(i)[0]) < 4 * n) c[i] = {g(rng), g(rng)};
  }
  FourierField f(lat, std::move(c), true, true);
  return f.scaled(1.0 / f.norm());
}

// Each (cutoff, N2) cell is evaluated on `draws` independent fields (draw d
// seeded with derive_seed(seed, d)); the reported ratio is their mean.
inline RunResult run_commutator(const ExperimentConfig& c, Outputs& out) {
  const auto& m = c.commutator;
  const TorusLattice lat = make_lattice(1, c.lattice.modes, c.lattice.scale);
  std::vector<FourierField> data;
  for (std::size_t d = 0; d < m.draws; ++d) data.push_back(commutator_data(lat, m.n, derive_seed(c.seed, d)));
  std::vector<CutoffKind> kinds;
  if (m.cutoff != "smooth") kinds.push_back(CutoffKind::sharp);
  if (m.cutoff != "sharp") kinds.push_back(CutoffKind::smooth);
  struct Cell {
    CutoffKind kind;
    long n2;
    std::size_t draw;
  };
  std::vector<Cell> cells;
  for (auto k : kinds)
    for (long n2 : m.n2)
      for (std::size_t d = 0; d < m.draws; ++d) cells.push_back({k, n2, d});
  std::vector<CommutatorResult> rs(cells.size());
  parallel_for(cells.size(), c.threads, [&](std::size_t i) {
    rs[i] = commutator_residual(data[cells[i].draw], m.n, cells[i].n2, cells[i].kind);
  });
  auto name = [](CutoffKind k) { return k == CutoffKind::sharp ? "sharp" : "smooth"; };
  CsvTable draws({"cutoff", "N", "N2", "draw", "ratio", "residual_norm", "derivative_norm", "low_sup"});
  for (std::size_t i = 0; i < cells.size(); ++i) {
    draws.add({name(cells[i].kind), std::to_string(m.n), std::to_string(cells[i].n2), std::to_string(cells[i].draw),
               fmt17(rs[i].ratio), fmt17(rs[i].residual_norm), fmt17(rs[i].derivative_norm), fmt17(rs[i].low_sup)});
  }
  CsvTable summary({"cutoff", "N", "N2", "mean_ratio", "min_ratio", "max_ratio"});
  RunResult res;
  res.report["N"] = m.n;
  res.report["draws"] = m.draws;
  for (auto k : kinds) {
    double lo = 1e300, hi = 0.0;
    nlohmann::json per = nlohmann::json::array();
    for (long n2 : m.n2) {
      double sum = 0.0, dmin = 1e300, dmax = 0.0;
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (cells[i].kind != k || cells[i].n2 != n2) continue;
        sum += rs[i].ratio;
        dmin = std::min(dmin, rs[i].ratio);
        dmax = std::max(dmax, rs[i].ratio);
      }
      const double mean = sum / static_cast<double>(m.draws);
      summary.add({name(k), std::to_string(m.n), std::to_string(n2), fmt17(mean), fmt17(dmin), fmt17(dmax)});
      per.push_back({{"N2", n2}, {"mean_ratio", mean}});
      lo = std::min(lo, mean);
      hi = std::max(hi, mean);
    }
    res.report[name(k)] = {{"ratios", per}, {"min_ratio", lo}, {"max_ratio", hi}, {"spread", lo > 0.0 ? hi / lo : 0.0}};
  }
  out.table("commutator.csv", summary);
  out.table("commutator_draws.csv", draws);
  return res;
}

[[nodiscard]] inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

// Runs one experiment into `dir`: report.json, the experiment's tables and
// manifest.json. Tables and report depend only on the config (not on
// threads); the manifest adds timing.
inline RunResult run(const ExperimentConfig& c, const std::filesystem::path& dir) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(dir);
  detail::Outputs out{dir, {}};
  RunResult res;
  const std::string& k = c.experiment;
  if (k == "bilinear" || k == "hhh" || k == "linear-strichartz") res = detail::run_estimate(c, out);
  else if (k == "evolve") res = detail::run_evolve(c, out);
  else if (k == "flux") res = detail::run_flux(c, out);
  else if (k == "vnorm") res = detail::run_vnorm(c, out);
  else if (k == "commutator") res = detail::run_commutator(c, out);
  else throw ConfigError({"experiment: unknown kind '" + k + "'"});
  res.report["experiment"] = k;
  res.report["seed"] = c.seed;
  out.json("report.json", res.report);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  nlohmann::json man;
  man["tool"] = kToolName;
  man["versions"] = {{"shorttime", kToolVersion}, {"fftw", std::string(fftw_version)}, {"compiler", std::string(__VERSION__)}};
  man["config_hash"] = config_hash(c);
  man["config"] = config_to_json(c, false);
  man["threads"] = c.threads;
  man["timing"] = {{"timestamp", detail::utc_timestamp()}, {"wall_time_seconds", wall}};
  man["outputs"] = out.names;
  detail::write_json(dir / "manifest.json", man);
  res.outputs = out.names;
  res.outputs.push_back("manifest.json");
  return res;
}

// Structured error record written to stderr by the CLI.
[[nodiscard]] inline nlohmann::json error_report(const std::string& kind, int code,
                                                 const std::vector<std::string>& messages) {
  return {{"error", {{"kind", kind}, {"exit_code", code}, {"messages", messages}}}};
}

}  // namespace shorttime
