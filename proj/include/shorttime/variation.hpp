#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "shorttime/dispersion.hpp"
#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/snapshot.hpp"

namespace shorttime {

// Samples v(t_0), ..., v(t_M) of a path with strictly increasing times.
// V is double for scalar fixtures or FourierField.
template <class V>
struct SampledPath {
  std::vector<double> times;
  std::vector<V> values;

  [[nodiscard]] std::size_t size() const { return times.size(); }

  void push(double t, V v) {
    if (!times.empty() && !(t > times.back())) throw SamplingError("path times must increase strictly");
    if constexpr (std::is_same_v<V, FourierField>) {
      if (!values.empty()) FourierField::check_same(values.front(), v);
    }
    times.push_back(t);
    values.push_back(std::move(v));
  }

  void validate() const {
    if (times.size() != values.size()) throw SamplingError("path has mismatched times and values");
    for (std::size_t i = 1; i < times.size(); ++i) {
      if (!(times[i] > times[i - 1])) throw SamplingError("path times must increase strictly");
    }
  }
};

[[nodiscard]] inline double increment_norm(double a, double b) { return std::abs(b - a); }

[[nodiscard]] inline double increment_norm(const FourierField& a, const FourierField& b) {
  FourierField::check_same(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.lattice().size(); ++i) s += std::norm(b[i] - a[i]);
  return std::sqrt(s);
}

// sup over subsequences i_0 < ... < i_m of sum_k |v_{i_k} - v_{i_{k-1}}|^p,
// before the 1/p power. Dynamic programming over the sample DAG: best[i] is
// the largest left-to-right sum of a chain ending at i. Rounding is
// monotone, so this equals the maximum over every chain's floating-point sum.
template <class V>
[[nodiscard]] double v_p_sum(const std::vector<V>& values, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw SamplingError("p-variation needs p in [1, inf)");
  if (values.size() < 2) throw SamplingError("p-variation needs at least 2 samples");
  const std::size_t m = values.size();
  std::vector<double> best(m, 0.0);
  double top = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    double b = 0.0;
    for (std::size_t j = 0; j < i; ++j) {
      b = std::max(b, best[j] + std::pow(increment_norm(values[j], values[i]), p));
    }
    best[i] = b;
    top = std::max(top, b);
  }
  return top;
}

template <class V>
[[nodiscard]] double v_p_norm(const SampledPath<V>& path, double p) {
  path.validate();
  return std::pow(v_p_sum(path.values, p), 1.0 / p);
}

struct EnergyLedger {
  double s = 0.0;
  // dyad N -> max over samples of ||P_N u(t)||^2
  std::map<long, double> entries;
  double total = 0.0;
};

// Squared norm of every sharp dyadic piece of a field, keyed by dyad.
[[nodiscard]] inline std::map<long, double> dyadic_energies(const FourierField& f) {
  const TorusLattice& lat = f.lattice();
  std::map<long, double> out;
  for (long n : dyadic_bands(lat)) out[n] = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (f[i] == cplx{}) continue;
    out[dyad_of_sq(lat.modulus_sq(i))] += std::norm(f[i]);
  }
  return out;
}

[[nodiscard]] inline EnergyLedger e_s_norm(const SampledPath<FourierField>& path, double s) {
  path.validate();
  if (path.size() == 0) throw SamplingError("energy ledger needs a nonempty path");
  EnergyLedger led;
  led.s = s;
  for (const auto& v : path.values) {
    for (const auto& [n, e] : dyadic_energies(v)) {
      auto [it, fresh] = led.entries.emplace(n, e);
      if (!fresh) it->second = std::max(it->second, e);
    }
  }
  for (const auto& [n, e] : led.entries) led.total += std::pow(static_cast<double>(n), 2.0 * s) * e;
  return led;
}

struct ShorttimeV2Result {
  double value = 0.0;
  // dyad N -> max over windows of ||twisted restriction||_{V^2}^2
  std::map<long, double> per_dyad;
  std::map<long, std::size_t> windows;
};

// Left-aligned tiling of [t_0, t_end] by windows of length delta; each window
// is [a, a + delta) except the last, which also takes its right endpoint.
// Returns, per window, the indices of the samples it contains.
[[nodiscard]] inline std::vector<std::vector<std::size_t>> tile_samples(const std::vector<double>& times,
                                                                        double delta) {
  const double t0 = times.front();
  const double span = times.back() - t0;
  std::size_t count = 1;
  if (span > 0.0) count = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(span / delta - 1e-9)));
  std::vector<std::vector<std::size_t>> out(count);
  for (std::size_t i = 0; i < times.size(); ++i) {
    std::size_t w = static_cast<std::size_t>(std::floor((times[i] - t0) / delta + 1e-9));
    out[std::min(w, count - 1)].push_back(i);
  }
  return out;
}

// (sum_N N^{2s} max_windows ||t -> e^{-it phi} P_N u(t)||_{V^2}^2)^{1/2}, a
// computable V^2 stand-in for the shorttime U^2 energy. Windows have the
// Euclidean length of each dyad; a zero sample at each window's left edge
// encodes the vanishing-from-the-left convention. Dyads with no content on
// the path are skipped; `max_band` caps the dyads considered.
[[nodiscard]] inline ShorttimeV2Result shorttime_v2(const SampledPath<FourierField>& path,
                                                    const DispersionSpec& spec, double s,
                                                    std::optional<long> max_band = std::nullopt) {
  path.validate();
  if (path.size() == 0) throw SamplingError("shorttime V^2 needs a nonempty path");
  const TorusLattice& lat = path.values.front().lattice();
  spec.check_lattice(lat);
  const EnergyLedger led = e_s_norm(path, 0.0);
  ShorttimeV2Result res;
  double total = 0.0;
  for (const auto& [n, energy] : led.entries) {
    if (energy == 0.0) continue;
    if (max_band && n > *max_band) continue;
    const double delta = window(spec, n).delta;
    const auto tiles = tile_samples(path.times, delta);
    const BandProjector p = BandProjector::sharp(n);
    double worst = 0.0;
    for (const auto& idx : tiles) {
      if (idx.size() < 3) {
        throw SamplingError("window of band N=" + std::to_string(n) + " holds " + std::to_string(idx.size()) +
                            " samples; at least 3 are required");
      }
      std::vector<FourierField> seq;
      seq.reserve(idx.size() + 1);
      seq.push_back(FourierField::zeros(lat));
      for (std::size_t i : idx) seq.push_back(propagate(project(path.values[i], p), spec, -path.times[i]));
      worst = std::max(worst, v_p_sum(seq, 2.0));
    }
    res.per_dyad[n] = worst;
    res.windows[n] = tiles.size();
    total += std::pow(static_cast<double>(n), 2.0 * s) * worst;
  }
  res.value = std::sqrt(total);
  return res;
}

// A path on disk: a directory holding one field snapshot per sample and a
// manifest path.json {"times": [...], "snapshots": ["snap_00000.json", ...]}.
inline void write_path(const std::filesystem::path& dir, const SampledPath<FourierField>& path) {
  path.validate();
  std::filesystem::create_directories(dir);
  nlohmann::json man;
  man["times"] = path.times;
  auto names = nlohmann::json::array();
  for (std::size_t i = 0; i < path.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "snap_%05zu.json", i);
    write_field(dir / name, path.values[i]);
    names.push_back(name);
  }
  man["snapshots"] = names;
  std::ofstream f(dir / "path.json");
  if (!f) throw Error("cannot write " + (dir / "path.json").string());
  f << man.dump(1) << '\n';
}

[[nodiscard]] inline SampledPath<FourierField> read_path(const std::filesystem::path& dir) {
  std::ifstream f(dir / "path.json");
  if (!f) throw SamplingError("no path manifest in " + dir.string());
  nlohmann::json man;
  try {
    f >> man;
    const auto times = man.at("times").get<std::vector<double>>();
    const auto names = man.at("snapshots").get<std::vector<std::string>>();
    if (times.size() != names.size()) throw SamplingError("manifest lists different numbers of times and snapshots");
    SampledPath<FourierField> path;
    for (std::size_t i = 0; i < times.size(); ++i) path.push(times[i], read_field(dir / names[i]));
    return path;
  } catch (const nlohmann::json::exception& e) {
    throw SamplingError(std::string("malformed path manifest: ") + e.what());
  }
}

}  // namespace shorttime
