#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "shorttime/dispersion.hpp"
#include "shorttime/errors.hpp"
#include "shorttime/estimate.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/solver.hpp"

namespace shorttime {

// Every violation found while validating a config, not just the first.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> messages)
      : Error(join(messages)), messages_(std::move(messages)) {}
  [[nodiscard]] const std::vector<std::string>& messages() const { return messages_; }

 private:
  static std::string join(const std::vector<std::string>& m) {
    std::string s;
    for (const auto& x : m) s += (s.empty() ? "" : "; ") + x;
    return s;
  }
  std::vector<std::string> messages_;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"bilinear", "hhh", "linear-strichartz", "vnorm", "evolve", "flux",
                                          "commutator"};
  return k;
}

struct LatticeConfig {
  int dim = 0;             // 0: the dispersion's own dimension (1 if any)
  std::size_t modes = 0;   // 0: smallest lattice resolving each band
  double scale = 1.0;
  friend bool operator==(const LatticeConfig&, const LatticeConfig&) = default;
};

struct AscentConfig {
  bool enabled = false;
  std::size_t restarts = 8;
  std::size_t pool = 0;
  std::size_t max_rounds = 100;
  std::size_t power_iters = 50;
  double tol = 1e-8;
  double power_tol = 1e-10;
  bool coherent_start = false;
  friend bool operator==(const AscentConfig&, const AscentConfig&) = default;
};

struct SolverConfig {
  std::string equation = "gbo:2";
  double dt = 1e-4;
  double T = 1.0;
  std::size_t snapshot_every = 100;
  std::string form = "product";
  friend bool operator==(const SolverConfig&, const SolverConfig&) = default;
};

struct VnormConfig {
  std::vector<double> p{2.0};
  double s = 0.0;
  std::string path;  // snapshot directory; empty: evolve from solver + profile
  long max_band = 0;  // 0: every dyad with content
  friend bool operator==(const VnormConfig&, const VnormConfig&) = default;
};

struct FluxConfig {
  std::vector<long> n{1, 2, 4, 8};
  double s = 0.0;
  friend bool operator==(const FluxConfig&, const FluxConfig&) = default;
};

struct CommutatorConfig {
  long n = 64;
  std::vector<long> n2{1, 2, 4, 8, 16};
  std::string cutoff = "both";
  // independent random fields; ratios are averaged over them
  std::size_t draws = 32;
  friend bool operator==(const CommutatorConfig&, const CommutatorConfig&) = default;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::string spec = "schrodinger";
  LatticeConfig lattice;
  std::vector<long> sweep_n{16, 32, 64};
  std::vector<long> sweep_k{1};
  std::size_t trials = 100;
  std::size_t quadrature_nodes = 0;  // 0: max(129, 8N + 1)
  AscentConfig ascent;
  std::optional<double> hhh_lambda;  // default N/4
  SolverConfig solver;
  ProfileSpec profile;
  VnormConfig vnorm;
  FluxConfig flux;
  CommutatorConfig commutator;
  // Run settings; they do not change results and are left out of the hash.
  std::string output;
  unsigned threads = 1;

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

namespace detail {

[[nodiscard]] inline std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

[[nodiscard]] inline std::string suggestion(const std::string& key, const std::vector<std::string>& known) {
  std::string best;
  std::size_t bd = 3;
  for (const auto& k : known) {
    const std::size_t d = edit_distance(key, k);
    if (d < bd) {
      bd = d;
      best = k;
    }
  }
  return best.empty() ? "" : " (did you mean '" + best + "'?)";
}

// Typed field access that records violations instead of throwing.
class Reader {
 public:
  std::vector<std::string> errors;

  void keys(const nlohmann::json& obj, const std::string& where, const std::vector<std::string>& allowed) {
    for (const auto& [k, v] : obj.items()) {
      if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
        errors.push_back(where + "unknown key '" + k + "'" + suggestion(k, allowed));
      }
    }
  }

  bool section(const nlohmann::json& root, const std::string& key, const nlohmann::json*& out) {
    out = nullptr;
    if (!root.contains(key)) return false;
    if (!root.at(key).is_object()) {
      errors.push_back(key + ": expected an object");
      return false;
    }
    out = &root.at(key);
    return true;
  }

  template <class T>
  void get(const nlohmann::json& obj, const std::string& key, T& out, const std::string& where) {
    if (!obj.contains(key)) return;
    const nlohmann::json& v = obj.at(key);
    const std::string name = where + key;
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) return fail(name, "a boolean", v);
      out = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) return fail(name, "a string", v);
      out = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) return fail(name, "a number", v);
      out = v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)) {
        return fail(name, "a nonnegative integer", v);
      }
      out = static_cast<T>(v.get<std::uint64_t>());
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) return fail(name, "an integer", v);
      out = static_cast<T>(v.get<long long>());
    } else {
      // vectors
      if (!v.is_array()) return fail(name, "an array", v);
      T tmp;
      using E = typename T::value_type;
      for (std::size_t i = 0; i < v.size(); ++i) {
        const auto& e = v[i];
        if constexpr (std::is_floating_point_v<E>) {
          if (!e.is_number()) return fail(name + "[" + std::to_string(i) + "]", "a number", e);
          tmp.push_back(e.get<E>());
        } else {
          if (!e.is_number_integer()) return fail(name + "[" + std::to_string(i) + "]", "an integer", e);
          tmp.push_back(static_cast<E>(e.get<long long>()));
        }
      }
      out = std::move(tmp);
    }
  }

 private:
  void fail(const std::string& name, const char* want, const nlohmann::json& got) {
    errors.push_back(name + ": expected " + std::string(want) + ", got " + got.dump());
  }
};

}  // namespace detail

// Sections and top-level keys each experiment reads; anything else is an error.
[[nodiscard]] inline std::vector<std::string> allowed_keys(const std::string& kind) {
  std::vector<std::string> k{"experiment", "seed", "output", "threads"};
  auto add = [&k](std::initializer_list<const char*> more) {
    for (const char* m : more) k.emplace_back(m);
  };
  if (kind == "bilinear") add({"spec", "lattice", "sweep", "trials", "quadrature", "ascent"});
  if (kind == "hhh") add({"spec", "sweep", "trials", "quadrature", "hhh"});
  if (kind == "linear-strichartz") add({"spec", "lattice", "sweep", "trials", "quadrature"});
  if (kind == "vnorm") add({"spec", "lattice", "solver", "profile", "vnorm"});
  if (kind == "evolve") add({"lattice", "solver", "profile"});
  if (kind == "flux") add({"lattice", "solver", "profile", "flux"});
  if (kind == "commutator") add({"lattice", "commutator"});
  return k;
}

// Defaults that depend on the experiment kind.
inline void apply_kind_defaults(ExperimentConfig& c) {
  if (c.experiment == "evolve" || c.experiment == "flux" || c.experiment == "vnorm") {
    if (c.lattice.modes == 0) c.lattice.modes = 256;
  }
  if (c.experiment == "commutator" && c.lattice.modes == 0) c.lattice.modes = 1024;
}

[[nodiscard]] inline std::optional<DispersionSpec> try_spec(const std::string& name) {
  try {
    return dispersion_from_name(name);
  } catch (const Error&) {
    return std::nullopt;
  }
}

// Semantic checks on a fully populated config; appends to errors.
inline void validate(const ExperimentConfig& c, std::vector<std::string>& errors) {
  const std::string& kind = c.experiment;
  auto dyadic_list = [&](const std::vector<long>& v, const std::string& name) {
    if (v.empty()) errors.push_back(name + ": must not be empty");
    std::set<long> seen;
    for (long n : v) {
      if (!is_dyadic(n)) errors.push_back(name + ": band " + std::to_string(n) + " is not a power of two");
      if (!seen.insert(n).second) errors.push_back(name + ": band " + std::to_string(n) + " listed twice");
    }
  };
  if (c.threads == 0) errors.push_back("threads: must be at least 1");
  if (kind == "bilinear" || kind == "hhh" || kind == "linear-strichartz") {
    const auto spec = try_spec(c.spec);
    if (!spec) errors.push_back("spec: unknown dispersion '" + c.spec + "'");
    dyadic_list(c.sweep_n, "sweep.N");
    if (c.trials == 0) errors.push_back("trials: must be at least 1");
    if (c.quadrature_nodes != 0 && (c.quadrature_nodes < 9 || c.quadrature_nodes % 2 == 0)) {
      errors.push_back("quadrature.nodes: must be 0 (automatic) or an odd number >= 9");
    }
    if (!(c.lattice.scale > 0.0)) errors.push_back("lattice.scale: must be positive");
    int dim = 1;
    if (spec) {
      try {
        dim = spec_dim(*spec, c.lattice.dim);
      } catch (const Error& e) {
        errors.push_back(std::string("lattice.dim: ") + e.what());
      }
    }
    if (c.lattice.dim < 0 || c.lattice.dim > 2) errors.push_back("lattice.dim: must be 0, 1 or 2");
    if (kind == "hhh" && dim != 1) errors.push_back("hhh: only 1-D dispersions are supported");
    if (kind == "hhh") {
      for (long n : c.sweep_n) {
        if (n < 8) errors.push_back("sweep.N: hhh needs N >= 8, got " + std::to_string(n));
      }
      if (c.hhh_lambda && !(*c.hhh_lambda >= 0.0)) errors.push_back("hhh.lambda: must be nonnegative");
    }
    if (kind == "bilinear") {
      dyadic_list(c.sweep_k, "sweep.K");
      if (c.sweep_n.size() > 1 && c.sweep_k.size() > 1) {
        errors.push_back("sweep: sweep either N or K, not both (got " + std::to_string(c.sweep_n.size()) + " N and " +
                         std::to_string(c.sweep_k.size()) + " K values)");
      }
      for (long n : c.sweep_n) {
        for (long k : c.sweep_k) {
          if (is_dyadic(n) && is_dyadic(k) && 4 * k > n) {
            errors.push_back("sweep: K=" + std::to_string(k) + " is not <= N/4 for N=" + std::to_string(n));
          }
        }
      }
      if (c.ascent.enabled && c.ascent.restarts == 0 && !c.ascent.coherent_start) {
        errors.push_back("ascent: needs restarts >= 1 or coherent_start");
      }
    }
    if (c.lattice.modes != 0 && kind != "hhh") {
      if (!is_power_of_two(c.lattice.modes) || c.lattice.modes < 4) {
        errors.push_back("lattice.modes: must be 0 or a power of two >= 4");
      } else {
        const TorusLattice lat = make_lattice(dim, c.lattice.modes, c.lattice.scale);
        for (long n : c.sweep_n) {
          if (is_dyadic(n) && !band_resolved(lat, n)) {
            errors.push_back("sweep.N: band " + std::to_string(n) + " reaches |xi| = " + std::to_string(2 * n) +
                             ", beyond the Nyquist limit " + fmt17(lat.resolved_radius()) + " of a " +
                             std::to_string(c.lattice.modes) + "-mode lattice");
          }
        }
      }
    }
  }
  if (kind == "evolve" || kind == "flux" || kind == "vnorm") {
    std::optional<EquationSpec> eq;
    try {
      eq = equation_from_name(c.solver.equation);
    } catch (const Error& e) {
      errors.push_back(std::string("solver.equation: ") + e.what());
    }
    const bool needs_solver = kind != "vnorm" || c.vnorm.path.empty();
    if (needs_solver) {
      if (!(c.solver.dt > 0.0)) errors.push_back("solver.dt: must be positive");
      if (!(c.solver.T >= 0.0)) errors.push_back("solver.T: must be nonnegative");
      if (c.solver.dt > 0.0 && c.solver.T >= 0.0) {
        const double r = c.solver.T / c.solver.dt;
        if (std::abs(r - std::round(r)) > 1e-9 * std::max(1.0, r)) {
          errors.push_back("solver.T: " + fmt17(c.solver.T) + " is not a whole number of steps dt = " +
                           fmt17(c.solver.dt));
        }
      }
      if (c.solver.snapshot_every == 0) errors.push_back("solver.snapshot_every: must be at least 1");
      if (c.solver.form != "product" && c.solver.form != "divergence") {
        errors.push_back("solver.form: expected 'product' or 'divergence', got '" + c.solver.form + "'");
      }
      if (!is_power_of_two(c.lattice.modes) || c.lattice.modes < 8) {
        errors.push_back("lattice.modes: must be a power of two >= 8");
      }
      if (!(c.lattice.scale > 0.0)) errors.push_back("lattice.scale: must be positive");
      if (eq && c.lattice.dim != 0 && c.lattice.dim != eq->dim()) {
        errors.push_back("lattice.dim: " + eq->name() + " runs on " + std::to_string(eq->dim()) + "-D lattices");
      }
      const auto& p = c.profile;
      if (p.kind != "random" && p.kind != "modes" && p.kind != "bump") {
        errors.push_back("profile.kind: expected 'random', 'modes' or 'bump', got '" + p.kind + "'");
      }
      if (!(p.amplitude > 0.0)) errors.push_back("profile.amplitude: must be positive");
      const long keep = (static_cast<long>(c.lattice.modes) - 1) / 3;
      if (p.kind == "random") {
        dyadic_list(p.bands, "profile.bands");
        for (long n : p.bands) {
          if (is_dyadic(n) && 2 * n - 1 > keep) {
            errors.push_back("profile.bands: band " + std::to_string(n) + " reaches |k| = " + std::to_string(2 * n - 1) +
                             ", beyond the dealiasing limit " + std::to_string(keep));
          }
        }
      }
      if (p.kind == "modes") {
        if (p.modes.empty()) errors.push_back("profile.modes: must not be empty");
        for (const auto& m : p.modes) {
          if (std::abs(m.k[0]) > keep || std::abs(m.k[1]) > keep) {
            errors.push_back("profile.modes: mode (" + std::to_string(m.k[0]) + ", " + std::to_string(m.k[1]) +
                             ") is beyond the dealiasing limit " + std::to_string(keep));
          }
        }
      }
      if (p.kind == "bump" && !(p.width > 0.0)) errors.push_back("profile.width: must be positive");
    }
    if (kind == "flux") {
      dyadic_list(c.flux.n, "flux.N");
      if (is_power_of_two(c.lattice.modes) && c.lattice.modes >= 8 && c.lattice.scale > 0.0) {
        const TorusLattice lat = make_lattice(eq ? eq->dim() : 1, c.lattice.modes, c.lattice.scale);
        for (long n : c.flux.n) {
          if (is_dyadic(n) && !band_resolved(lat, n)) {
            errors.push_back("flux.N: band " + std::to_string(n) + " reaches |xi| = " + std::to_string(2 * n) +
                             ", beyond the Nyquist limit " + fmt17(lat.resolved_radius()) + " of a " +
                             std::to_string(c.lattice.modes) + "-mode lattice");
          }
        }
      }
      if (c.solver.dt > 0.0 && c.solver.T / c.solver.dt / static_cast<double>(std::max<std::size_t>(1, c.solver.snapshot_every)) < 2.0) {
        errors.push_back("flux: the path needs at least 3 snapshots (T / (dt * snapshot_every) >= 2)");
      }
    }
    if (kind == "vnorm") {
      if (c.vnorm.p.empty()) errors.push_back("vnorm.p: must not be empty");
      for (double p : c.vnorm.p) {
        if (!(p >= 1.0)) errors.push_back("vnorm.p: exponent " + fmt17(p) + " is below 1");
      }
      if (c.vnorm.max_band != 0 && !is_dyadic(c.vnorm.max_band)) {
        errors.push_back("vnorm.max_band: must be 0 or a power of two");
      }
      if (!c.vnorm.path.empty() && !try_spec(c.spec)) errors.push_back("spec: unknown dispersion '" + c.spec + "'");
    }
  }
  if (kind == "commutator") {
    const auto& m = c.commutator;
    if (!is_dyadic(m.n)) errors.push_back("commutator.N: must be a power of two");
    dyadic_list(m.n2, "commutator.N2");
    for (long n2 : m.n2) {
      if (is_dyadic(n2) && 4 * n2 > m.n) {
        errors.push_back("commutator.N2: " + std::to_string(n2) + " is not <= N/4 = " + std::to_string(m.n / 4));
      }
    }
    if (m.cutoff != "sharp" && m.cutoff != "smooth" && m.cutoff != "both") {
      errors.push_back("commutator.cutoff: expected 'sharp', 'smooth' or 'both', got '" + m.cutoff + "'");
    }
    if (m.draws == 0) errors.push_back("commutator.draws: must be at least 1");
    if (c.lattice.dim != 0 && c.lattice.dim != 1) errors.push_back("lattice.dim: commutator runs on 1-D lattices");
    if (!is_power_of_two(c.lattice.modes) || c.lattice.modes < 8) {
      errors.push_back("lattice.modes: must be a power of two >= 8");
    } else if (is_dyadic(m.n)) {
      long top = 0;
      for (long n2 : m.n2) top = std::max(top, n2);
      const double reach = 4.0 * static_cast<double>(m.n) + 2.0 * static_cast<double>(top);
      const double nyq = static_cast<double>(c.lattice.modes / 2) / c.lattice.scale;
      if (reach > nyq) {
        errors.push_back("commutator.N: products reach |xi| = " + fmt17(reach) + ", beyond the Nyquist limit " +
                         fmt17(nyq) + " of a " + std::to_string(c.lattice.modes) + "-mode lattice");
      }
    }
  }
}

// Parses a JSON config. `kind` (from the command line) fills in or must
// match the "experiment" key. Throws ConfigError listing every violation.
// A seed override (--seed) replaces the file's seed and makes it optional.
[[nodiscard]] inline ExperimentConfig parse_config(const std::string& text, const std::string& kind = "",
                                                   std::optional<std::uint64_t> seed_override = std::nullopt) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"config must be a JSON object"});
  detail::Reader rd;
  ExperimentConfig c;
  rd.get(root, "experiment", c.experiment, "");
  if (!kind.empty()) {
    if (!c.experiment.empty() && c.experiment != kind) {
      rd.errors.push_back("experiment: config says '" + c.experiment + "' but the command is '" + kind + "'");
    }
    c.experiment = kind;
  }
  const auto& kinds = experiment_kinds();
  if (std::find(kinds.begin(), kinds.end(), c.experiment) == kinds.end()) {
    rd.errors.push_back(c.experiment.empty() ? "experiment: required"
                                             : "experiment: unknown kind '" + c.experiment + "'" +
                                                   detail::suggestion(c.experiment, kinds));
    throw ConfigError(rd.errors);
  }
  const std::vector<std::string> top = allowed_keys(c.experiment);
  std::vector<std::string> all_top{"experiment", "seed", "output", "threads", "spec", "lattice", "sweep", "trials",
                                   "quadrature", "ascent", "hhh", "solver", "profile", "vnorm", "flux", "commutator"};
  for (const auto& [k, v] : root.items()) {
    if (std::find(top.begin(), top.end(), k) != top.end()) continue;
    if (std::find(all_top.begin(), all_top.end(), k) != all_top.end()) {
      rd.errors.push_back("'" + k + "' is not used by experiment '" + c.experiment + "'");
    } else {
      rd.errors.push_back("unknown key '" + k + "'" + detail::suggestion(k, top));
    }
  }
  if (seed_override) {
    c.seed = *seed_override;
  } else if (!root.contains("seed")) {
    rd.errors.push_back("seed required");
  } else {
    rd.get(root, "seed", c.seed, "");
  }
  rd.get(root, "spec", c.spec, "");
  rd.get(root, "trials", c.trials, "");
  rd.get(root, "output", c.output, "");
  rd.get(root, "threads", c.threads, "");
  const nlohmann::json* s = nullptr;
  if (rd.section(root, "lattice", s)) {
    rd.keys(*s, "lattice.", {"dim", "modes", "scale"});
    rd.get(*s, "dim", c.lattice.dim, "lattice.");
    rd.get(*s, "modes", c.lattice.modes, "lattice.");
    rd.get(*s, "scale", c.lattice.scale, "lattice.");
  }
  if (rd.section(root, "sweep", s)) {
    if (c.experiment == "bilinear") {
      rd.keys(*s, "sweep.", {"N", "K"});
      rd.get(*s, "K", c.sweep_k, "sweep.");
    } else {
      rd.keys(*s, "sweep.", {"N"});
    }
    rd.get(*s, "N", c.sweep_n, "sweep.");
  }
  if (rd.section(root, "quadrature", s)) {
    rd.keys(*s, "quadrature.", {"nodes"});
    rd.get(*s, "nodes", c.quadrature_nodes, "quadrature.");
  }
  if (rd.section(root, "ascent", s)) {
    rd.keys(*s, "ascent.",
            {"enabled", "restarts", "pool", "max_rounds", "power_iters", "tol", "power_tol", "coherent_start"});
    auto& a = c.ascent;
    a.enabled = true;
    rd.get(*s, "enabled", a.enabled, "ascent.");
    rd.get(*s, "restarts", a.restarts, "ascent.");
    rd.get(*s, "pool", a.pool, "ascent.");
    rd.get(*s, "max_rounds", a.max_rounds, "ascent.");
    rd.get(*s, "power_iters", a.power_iters, "ascent.");
    rd.get(*s, "tol", a.tol, "ascent.");
    rd.get(*s, "power_tol", a.power_tol, "ascent.");
    rd.get(*s, "coherent_start", a.coherent_start, "ascent.");
  }
  if (rd.section(root, "hhh", s)) {
    rd.keys(*s, "hhh.", {"lambda"});
    if (s->contains("lambda") && !s->at("lambda").is_null()) {
      double l = 0.0;
      rd.get(*s, "lambda", l, "hhh.");
      c.hhh_lambda = l;
    }
  }
  if (rd.section(root, "solver", s)) {
    rd.keys(*s, "solver.", {"equation", "dt", "T", "snapshot_every", "form"});
    rd.get(*s, "equation", c.solver.equation, "solver.");
    rd.get(*s, "dt", c.solver.dt, "solver.");
    rd.get(*s, "T", c.solver.T, "solver.");
    rd.get(*s, "snapshot_every", c.solver.snapshot_every, "solver.");
    rd.get(*s, "form", c.solver.form, "solver.");
  }
  if (rd.section(root, "profile", s)) {
    rd.keys(*s, "profile.", {"kind", "bands", "modes", "width", "amplitude", "sobolev_s"});
    auto& p = c.profile;
    rd.get(*s, "kind", p.kind, "profile.");
    rd.get(*s, "bands", p.bands, "profile.");
    rd.get(*s, "width", p.width, "profile.");
    rd.get(*s, "amplitude", p.amplitude, "profile.");
    rd.get(*s, "sobolev_s", p.sobolev_s, "profile.");
    if (s->contains("modes")) {
      const auto& ms = s->at("modes");
      if (!ms.is_array()) {
        rd.errors.push_back("profile.modes: expected an array");
      } else {
        for (std::size_t i = 0; i < ms.size(); ++i) {
          const std::string w = "profile.modes[" + std::to_string(i) + "].";
          if (!ms[i].is_object()) {
            rd.errors.push_back(w.substr(0, w.size() - 1) + ": expected an object");
            continue;
          }
          rd.keys(ms[i], w, {"k", "amplitude", "phase"});
          ModeAmplitude m;
          std::vector<long> k;
          rd.get(ms[i], "k", k, w);
          if (k.empty() || k.size() > 2) {
            rd.errors.push_back(w + "k: expected 1 or 2 integers");
          } else {
            m.k = {k[0], k.size() == 2 ? k[1] : 0};
          }
          rd.get(ms[i], "amplitude", m.amplitude, w);
          rd.get(ms[i], "phase", m.phase, w);
          p.modes.push_back(m);
        }
      }
    }
  }
  if (rd.section(root, "vnorm", s)) {
    rd.keys(*s, "vnorm.", {"p", "s", "path", "max_band"});
    rd.get(*s, "p", c.vnorm.p, "vnorm.");
    rd.get(*s, "s", c.vnorm.s, "vnorm.");
    rd.get(*s, "path", c.vnorm.path, "vnorm.");
    rd.get(*s, "max_band", c.vnorm.max_band, "vnorm.");
  }
  if (rd.section(root, "flux", s)) {
    rd.keys(*s, "flux.", {"N", "s"});
    rd.get(*s, "N", c.flux.n, "flux.");
    rd.get(*s, "s", c.flux.s, "flux.");
  }
  if (rd.section(root, "commutator", s)) {
    rd.keys(*s, "commutator.", {"N", "N2", "cutoff", "draws"});
    rd.get(*s, "N", c.commutator.n, "commutator.");
    rd.get(*s, "N2", c.commutator.n2, "commutator.");
    rd.get(*s, "cutoff", c.commutator.cutoff, "commutator.");
    rd.get(*s, "draws", c.commutator.draws, "commutator.");
  }
  c.profile.seed = c.seed;
  apply_kind_defaults(c);
  if (rd.errors.empty()) validate(c, rd.errors);
  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return c;
}

// Canonical JSON form holding exactly the keys the experiment reads, with
// defaults filled in. parse_config(config_to_json(c).dump()) == c.
[[nodiscard]] inline nlohmann::json config_to_json(const ExperimentConfig& c, bool run_settings = true) {
  using nlohmann::json;
  json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  if (run_settings) {
    j["threads"] = c.threads;
    if (!c.output.empty()) j["output"] = c.output;
  }
  const auto keys = allowed_keys(c.experiment);
  auto has = [&keys](const char* k) { return std::find(keys.begin(), keys.end(), k) != keys.end(); };
  if (has("spec")) j["spec"] = c.spec;
  if (has("lattice")) j["lattice"] = {{"dim", c.lattice.dim}, {"modes", c.lattice.modes}, {"scale", c.lattice.scale}};
  if (has("sweep")) {
    j["sweep"] = {{"N", c.sweep_n}};
    if (c.experiment == "bilinear") j["sweep"]["K"] = c.sweep_k;
  }
  if (has("trials")) j["trials"] = c.trials;
  if (has("quadrature")) j["quadrature"] = {{"nodes", c.quadrature_nodes}};
  if (has("ascent")) {
    const auto& a = c.ascent;
    j["ascent"] = {{"enabled", a.enabled},         {"restarts", a.restarts}, {"pool", a.pool},
                   {"max_rounds", a.max_rounds},   {"power_iters", a.power_iters}, {"tol", a.tol},
                   {"power_tol", a.power_tol},     {"coherent_start", a.coherent_start}};
  }
  if (has("hhh")) j["hhh"] = {{"lambda", c.hhh_lambda ? json(*c.hhh_lambda) : json(nullptr)}};
  if (has("solver")) {
    j["solver"] = {{"equation", c.solver.equation}, {"dt", c.solver.dt}, {"T", c.solver.T},
                   {"snapshot_every", c.solver.snapshot_every}, {"form", c.solver.form}};
  }
  if (has("profile")) {
    const auto& p = c.profile;
    json modes = json::array();
    for (const auto& m : p.modes) modes.push_back({{"k", {m.k[0], m.k[1]}}, {"amplitude", m.amplitude}, {"phase", m.phase}});
    j["profile"] = {{"kind", p.kind},   {"bands", p.bands},         {"modes", modes},
                    {"width", p.width}, {"amplitude", p.amplitude}, {"sobolev_s", p.sobolev_s}};
  }
  if (has("vnorm")) {
    j["vnorm"] = {{"p", c.vnorm.p}, {"s", c.vnorm.s}, {"path", c.vnorm.path}, {"max_band", c.vnorm.max_band}};
  }
  if (has("flux")) j["flux"] = {{"N", c.flux.n}, {"s", c.flux.s}};
  if (has("commutator")) {
    j["commutator"] = {{"N", c.commutator.n},
                         {"N2", c.commutator.n2},
                         {"cutoff", c.commutator.cutoff},
                         {"draws", c.commutator.draws}};
  }
  return j;
}

// 64-bit FNV-1a.
[[nodiscard]] inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

// Hash of the canonical config without run settings (threads, output).
[[nodiscard]] inline std::string config_hash(const ExperimentConfig& c) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(config_to_json(c, false).dump())));
  return buf;
}

}  // namespace shorttime
