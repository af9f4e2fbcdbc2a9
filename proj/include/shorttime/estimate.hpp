#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "shorttime/bilinear.hpp"
#include "shorttime/dispersion.hpp"
#include "shorttime/multipliers.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/quadrature.hpp"
#include "shorttime/table.hpp"

namespace shorttime {

struct EstimateReport {
  std::string spec;
  long n = 0;
  long k = 0;
  std::size_t trials = 0;
  std::vector<double> ratios;
  double max_ratio = 0.0;
  // Best value found by extremizer ascent, when one was run.
  std::optional<double> ascent_ratio;
  double theoretical_factor = 1.0;
  double normalized_constant = 0.0;
  std::optional<double> slope;

  // Recomputes max_ratio (over trials and ascent) and the normalized constant.
  void finalize() {
    max_ratio = 0.0;
    for (double r : ratios) max_ratio = std::max(max_ratio, r);
    if (ascent_ratio) max_ratio = std::max(max_ratio, *ascent_ratio);
    normalized_constant = max_ratio / theoretical_factor;
  }
};

// K^((n-1)/2) / N^((alpha-1)/2)
[[nodiscard]] inline double theoretical_factor(const DispersionSpec& spec, int dim, long n, long k) {
  return std::pow(static_cast<double>(k), 0.5 * (dim - 1)) /
         std::pow(static_cast<double>(n), 0.5 * (spec.alpha - 1.0));
}

// Smallest lattice (power of two, >= 8 modes) on which band N is fully resolved.
[[nodiscard]] inline TorusLattice band_lattice(int dim, long n, double scale = 1.0) {
  std::size_t m = 8;
  while (static_cast<double>(m / 2) < 2.0 * static_cast<double>(n) * scale) m *= 2;
  return make_lattice(dim, m, scale);
}

[[nodiscard]] inline int spec_dim(const DispersionSpec& spec, int requested) {
  if (spec.dim != 0 && requested != 0 && spec.dim != requested) {
    throw LatticeError("dispersion '" + spec.name + "' is " + std::to_string(spec.dim) + "-D");
  }
  if (spec.dim != 0) return spec.dim;
  return requested == 0 ? 1 : requested;
}

// Least-squares slope of y against x; nullopt with fewer than two points.
[[nodiscard]] inline std::optional<double> fit_slope(const std::vector<double>& x,
                                                     const std::vector<double>& y) {
  if (x.size() != y.size()) throw Error("fit_slope: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  return sxy / sxx;
}

struct BandPair {
  TorusLattice lattice;
  long n = 0;
  long k = 0;
  std::vector<std::size_t> high;
  std::vector<std::size_t> low;
};

inline BandPair make_band_pair(const TorusLattice& lat, long n, long k) {
  if (!is_dyadic(n) || !is_dyadic(k)) throw BandError("bands must be dyadic");
  if (4 * k > n) throw BandError("need K <= N/4, got N=" + std::to_string(n) + " K=" + std::to_string(k));
  if (!band_resolved(lat, n)) {
    throw BandError("band N=" + std::to_string(n) + " exceeds the resolved radius " +
                    fmt17(lat.resolved_radius()) + " of the lattice");
  }
  BandPair p{lat, n, k, support_of(lat, BandProjector::sharp(n)), support_of(lat, BandProjector::sharp(k))};
  if (p.high.empty() || p.low.empty()) throw BandError("empty band on this lattice");
  return p;
}

// Trial i draws u1 with seed derive_seed(seed, 2i) and u2 with 2i + 1.
[[nodiscard]] inline std::pair<FourierField, FourierField> trial_fields(const BandPair& bp,
                                                                        std::uint64_t seed,
                                                                        std::size_t trial) {
  return {random_field(bp.lattice, BandProjector::sharp(bp.n), derive_seed(seed, 2 * trial), false, false),
          random_field(bp.lattice, BandProjector::sharp(bp.k), derive_seed(seed, 2 * trial + 1), false, false)};
}

[[nodiscard]] inline double pair_ratio(const BilinearEngine& e, const std::vector<cplx>& a1,
                                       const std::vector<cplx>& a2) {
  double n1 = 0.0;
  double n2 = 0.0;
  for (const cplx& c : a1) n1 += std::norm(c);
  for (const cplx& c : a2) n2 += std::norm(c);
  if (n1 == 0.0 || n2 == 0.0) return 0.0;
  return std::sqrt(e.norm_sq(a1, a2) / (n1 * n2));
}

// Per-trial ratios ||U1 U2|| / (||u1|| ||u2||) for random unit fields in bands
// N and K on the given lattice; trials run in parallel, results keyed by index.
[[nodiscard]] inline EstimateReport monte_carlo_ratio(const DispersionSpec& spec,
                                                      const TorusLattice& lat, long n, long k,
                                                      std::size_t trials, std::uint64_t seed,
                                                      const QuadratureRule& quad, unsigned threads = 1) {
  const BandPair bp = make_band_pair(lat, n, k);
  const EuclideanWindow win = window(spec, n);
  if (std::abs(quad.delta - win.delta) > 1e-12 * win.delta) {
    throw SamplingError("quadrature interval does not match the window length");
  }
  const BilinearEngine engine(lat, spec, quad, bp.high, bp.low, true, 1);
  EstimateReport r;
  r.spec = spec.name;
  r.n = n;
  r.k = k;
  r.trials = trials;
  r.ratios.assign(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t i) {
    auto [u1, u2] = trial_fields(bp, seed, i);
    r.ratios[i] = pair_ratio(engine, gather(u1, bp.high), gather(u2, bp.low));
  });
  r.theoretical_factor = theoretical_factor(spec, lat.dim, n, k);
  r.finalize();
  return r;
}

struct AscentOptions {
  std::size_t restarts = 8;
  // Random candidates scored before ascent; the best `restarts` are refined.
  // 0 means pool = restarts.
  std::size_t pool = 0;
  std::size_t max_rounds = 100;
  double tol = 1e-8;
  std::size_t power_iters = 50;
  double power_tol = 1e-10;
  // Adds a start from both bands' point-concentrated profiles (all
  // coefficients equal).
  bool coherent_start = false;
  unsigned threads = 1;
  std::size_t cache_bytes = std::size_t{1} << 30;
};

struct AscentResult {
  FourierField u1;
  FourierField u2;
  double ratio = 0.0;
  std::vector<double> start_ratios;
  std::vector<double> final_ratios;
  std::size_t rounds = 0;
};

namespace detail {

inline double normalize(std::vector<cplx>& a) {
  double s = 0.0;
  for (const cplx& c : a) s += std::norm(c);
  s = std::sqrt(s);
  if (s > 0.0) {
    for (cplx& c : a) c /= s;
  }
  return s;
}

inline double inner_re(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (std::conj(a[i]) * b[i]).real();
  return s;
}

// Power iteration on the engine's normal operator starting from unit x;
// returns the best Rayleigh quotient seen and leaves its vector in x.
inline double power_iterate(const BilinearEngine& e, std::vector<cplx>& x, std::size_t iters,
                            double tol) {
  std::vector<cplx> y = e.normal_apply(x);
  double best = inner_re(x, y);
  std::vector<cplx> best_x = x;
  double prev = best;
  for (std::size_t it = 0; it < iters; ++it) {
    if (normalize(y) == 0.0) break;
    x = y;
    y = e.normal_apply(x);
    const double lambda = inner_re(x, y);
    if (lambda > best) {
      best = lambda;
      best_x = x;
    }
    if (lambda - prev <= tol * std::abs(lambda)) break;
    prev = lambda;
  }
  x = std::move(best_x);
  return best;
}

}  // namespace detail

struct AscentStart {
  std::vector<cplx> a1;
  std::vector<cplx> a2;
};

// Alternating maximization of ||U1 U2|| / (||u1|| ||u2||) over the engine's
// supports: with one argument fixed the map x -> U_fixed U_x is linear, and
// its top singular direction is found by power iteration on the normal
// operator. Each round improves both arguments in turn; the value never
// decreases, and the best pair over all starts is returned.
[[nodiscard]] inline AscentResult extremizer_ascent(BilinearEngine& engine,
                                                    std::vector<AscentStart> starts,
                                                    const AscentOptions& opt = {}) {
  if (starts.empty()) throw Error("extremizer needs at least one start");
  AscentResult res;
  std::vector<cplx> best1;
  std::vector<cplx> best2;
  double best_sq = -1.0;
  for (AscentStart& s : starts) {
    const double r0 = pair_ratio(engine, s.a1, s.a2);
    detail::normalize(s.a1);
    detail::normalize(s.a2);
    double val = r0 * r0;
    res.start_ratios.push_back(r0);
    for (std::size_t round = 0; round < opt.max_rounds; ++round) {
      ++res.rounds;
      const double prev = val;
      engine.fix(1, s.a2, opt.cache_bytes);
      std::vector<cplx> x = s.a1;
      const double v1 = detail::power_iterate(engine, x, opt.power_iters, opt.power_tol);
      if (v1 > val) {
        s.a1 = std::move(x);
        val = v1;
      }
      engine.fix(0, s.a1, opt.cache_bytes);
      x = s.a2;
      const double v2 = detail::power_iterate(engine, x, opt.power_iters, opt.power_tol);
      if (v2 > val) {
        s.a2 = std::move(x);
        val = v2;
      }
      if (val - prev <= opt.tol * prev) break;
    }
    res.final_ratios.push_back(val == r0 * r0 ? r0 : std::sqrt(val));
    if (val > best_sq) {
      best_sq = val;
      best1 = s.a1;
      best2 = s.a2;
    }
  }
  res.ratio = *std::max_element(res.final_ratios.begin(), res.final_ratios.end());
  const TorusLattice& lat = engine.lattice();
  res.u1 = scatter(lat, engine.support(0).flat, best1);
  res.u2 = scatter(lat, engine.support(1).flat, best2);
  return res;
}

// Band version: scores `pool` random pairs drawn exactly as monte_carlo_ratio
// draws its trials, then refines the best `restarts` of them (plus the
// coherent start when requested). With pool equal to the Monte-Carlo trial
// count the result is never below that run's max_ratio.
[[nodiscard]] inline AscentResult extremizer_ascent(const DispersionSpec& spec,
                                                    const TorusLattice& lat, long n, long k,
                                                    const QuadratureRule& quad, std::uint64_t seed,
                                                    const AscentOptions& opt = {}) {
  const BandPair bp = make_band_pair(lat, n, k);
  BilinearEngine engine(lat, spec, quad, bp.high, bp.low, true, opt.threads);
  const std::size_t pool = std::max(opt.pool == 0 ? opt.restarts : opt.pool, opt.restarts);
  std::vector<std::pair<double, AscentStart>> cands(pool);
  parallel_for(pool, opt.threads, [&](std::size_t i) {
    auto [u1, u2] = trial_fields(bp, seed, i);
    AscentStart s{gather(u1, bp.high), gather(u2, bp.low)};
    const double r = pair_ratio(engine, s.a1, s.a2);
    cands[i] = {r, std::move(s)};
  });
  std::stable_sort(cands.begin(), cands.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<AscentStart> starts;
  for (std::size_t i = 0; i < opt.restarts; ++i) starts.push_back(std::move(cands[i].second));
  if (opt.coherent_start) {
    starts.push_back({std::vector<cplx>(bp.high.size(), cplx{1.0, 0.0}),
                      std::vector<cplx>(bp.low.size(), cplx{1.0, 0.0})});
  }
  return extremizer_ascent(engine, std::move(starts), opt);
}

// Shorttime norm of the separated product S_{>lambda}(U1 U2) for two fields on
// a 1-D lattice, by direct pair sums at each quadrature node.
class SeparatedEngine {
 public:
  SeparatedEngine(const TorusLattice& lat, const DispersionSpec& spec, QuadratureRule quad,
                  std::span<const std::size_t> s1, std::span<const std::size_t> s2, double lambda)
      : quad_(std::move(quad)), n1_(s1.size()), n2_(s2.size()) {
    if (lat.dim != 1) throw LatticeError("separated products are implemented for 1-D lattices");
    spec.check_lattice(lat);
    for (std::size_t i = 0; i < s1.size(); ++i) p1_.push_back(spec.phase(lat, s1[i]));
    for (std::size_t j = 0; j < s2.size(); ++j) p2_.push_back(spec.phase(lat, s2[j]));
    const long h = lat.nyquist();
    for (std::size_t i = 0; i < s1.size(); ++i) {
      const double m1 = std::abs(lat.frequency(s1[i])[0]);
      for (std::size_t j = 0; j < s2.size(); ++j) {
        const double m2 = std::abs(lat.frequency(s2[j])[0]);
        if (!(std::abs(m1 - m2) > lambda)) continue;
        const long out = lat.mode(s1[i])[0] + lat.mode(s2[j])[0];
        if (out < -h || out >= h) {
          throw AliasingError("separated product reaches mode " + std::to_string(out) +
                              " beyond Nyquist " + std::to_string(h));
        }
        pairs_.push_back({i, j, static_cast<std::size_t>(out + h)});
      }
    }
    width_ = static_cast<std::size_t>(2 * h);
  }

  [[nodiscard]] double norm_sq(std::span<const cplx> a1, std::span<const cplx> a2) const {
    std::vector<cplx> e1(n1_);
    std::vector<cplx> e2(n2_);
    std::vector<cplx> out(width_);
    double s = 0.0;
    for (std::size_t j = 0; j < quad_.size(); ++j) {
      const double t = quad_.nodes[j];
      for (std::size_t i = 0; i < n1_; ++i) e1[i] = a1[i] * unit_phase(t, p1_[i]);
      for (std::size_t i = 0; i < n2_; ++i) e2[i] = a2[i] * unit_phase(t, p2_[i]);
      std::fill(out.begin(), out.end(), cplx{});
      for (const Pair& p : pairs_) out[p.out] += e1[p.i] * e2[p.j];
      double m = 0.0;
      for (const cplx& c : out) m += std::norm(c);
      s += quad_.weights[j] * m;
    }
    return s;
  }

 private:
  struct Pair {
    std::size_t i;
    std::size_t j;
    std::size_t out;
  };
  QuadratureRule quad_;
  std::size_t n1_;
  std::size_t n2_;
  std::vector<double> p1_;
  std::vector<double> p2_;
  std::vector<Pair> pairs_;
  std::size_t width_ = 0;
};

// High x High interactions with separated output: u1, u2 random unit fields
// in band N on a 1-D lattice large enough to hold their products; ratios are
// reported against N^{-(alpha-1)/2}. lambda defaults to N/4.
[[nodiscard]] inline EstimateReport hhh_separated_ratio(const DispersionSpec& spec, long n,
                                                        std::size_t trials, std::uint64_t seed,
                                                        const QuadratureRule& quad,
                                                        std::optional<double> lambda = std::nullopt,
                                                        unsigned threads = 1) {
  if (n < 8 || !is_dyadic(n)) throw BandError("hhh needs a dyadic N >= 8");
  const TorusLattice lat = band_lattice(1, 2 * n);
  const EuclideanWindow win = window(spec, n);
  if (std::abs(quad.delta - win.delta) > 1e-12 * win.delta) {
    throw SamplingError("quadrature interval does not match the window length");
  }
  const auto sup = support_of(lat, BandProjector::sharp(n));
  const SeparatedEngine engine(lat, spec, quad, sup, sup, lambda.value_or(static_cast<double>(n) / 4.0));
  EstimateReport r;
  r.spec = spec.name;
  r.n = n;
  r.k = n;
  r.trials = trials;
  r.ratios.assign(trials, 0.0);
  parallel_for(trials, threads, [&](std::size_t i) {
    const auto a1 = gather(random_field(lat, BandProjector::sharp(n), derive_seed(seed, 2 * i), false, false), sup);
    const auto a2 = gather(random_field(lat, BandProjector::sharp(n), derive_seed(seed, 2 * i + 1), false, false), sup);
    r.ratios[i] = std::sqrt(engine.norm_sq(a1, a2));
  });
  r.theoretical_factor = std::pow(static_cast<double>(n), -0.5 * (spec.alpha - 1.0));
  r.finalize();
  return r;
}

// Fits log2(max_ratio) against log2 of the swept band (N or K) and stores the
// slope on every report.
inline std::optional<double> attach_slope(std::vector<EstimateReport>& reports, bool sweep_k) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& r : reports) {
    if (!(r.max_ratio > 0.0)) continue;
    x.push_back(std::log2(static_cast<double>(sweep_k ? r.k : r.n)));
    y.push_back(std::log2(r.max_ratio));
  }
  const auto s = fit_slope(x, y);
  for (auto& r : reports) r.slope = s;
  return s;
}

[[nodiscard]] inline nlohmann::json report_to_json(const EstimateReport& r) {
  nlohmann::json j;
  j["spec"] = r.spec;
  j["N"] = r.n;
  j["K"] = r.k;
  j["trials"] = r.trials;
  j["ratios"] = r.ratios;
  j["max_ratio"] = r.max_ratio;
  j["ascent_ratio"] = r.ascent_ratio ? nlohmann::json(*r.ascent_ratio) : nlohmann::json(nullptr);
  j["theoretical_factor"] = r.theoretical_factor;
  j["normalized_constant"] = r.normalized_constant;
  j["slope"] = r.slope ? nlohmann::json(*r.slope) : nlohmann::json(nullptr);
  return j;
}

[[nodiscard]] inline EstimateReport report_from_json(const nlohmann::json& j) {
  EstimateReport r;
  r.spec = j.at("spec").get<std::string>();
  r.n = j.at("N").get<long>();
  r.k = j.at("K").get<long>();
  r.trials = j.at("trials").get<std::size_t>();
  r.ratios = j.at("ratios").get<std::vector<double>>();
  r.max_ratio = j.at("max_ratio").get<double>();
  if (!j.at("ascent_ratio").is_null()) r.ascent_ratio = j.at("ascent_ratio").get<double>();
  r.theoretical_factor = j.at("theoretical_factor").get<double>();
  r.normalized_constant = j.at("normalized_constant").get<double>();
  if (!j.at("slope").is_null()) r.slope = j.at("slope").get<double>();
  return r;
}

// One row per trial: spec, N, K, trial index, ratio.
inline void append_trial_rows(CsvTable& t, const EstimateReport& r) {
  for (std::size_t i = 0; i < r.ratios.size(); ++i) {
    t.add({r.spec, std::to_string(r.n), std::to_string(r.k), std::to_string(i), fmt17(r.ratios[i])});
  }
}

[[nodiscard]] inline CsvTable trial_table() { return CsvTable({"spec", "N", "K", "trial", "ratio"}); }

}  // namespace shorttime
