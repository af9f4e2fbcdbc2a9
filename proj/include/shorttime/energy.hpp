#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "shorttime/bilinear.hpp"
#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/solver.hpp"
#include "shorttime/variation.hpp"

namespace shorttime {

// Cumulative integral of uniformly sampled values, evaluated at the last
// sample: composite Simpson, with a 3/8 panel at the end for an odd number
// of intervals.
[[nodiscard]] inline double integrate_uniform(const std::vector<double>& f, double h) {
  const std::size_t m = f.size();
  if (m < 3) throw SamplingError("time quadrature needs at least 3 samples");
  std::size_t intervals = m - 1;
  double acc = 0.0;
  std::size_t simpson_end = intervals % 2 == 0 ? intervals : intervals - 3;
  for (std::size_t i = 0; i + 2 <= simpson_end; i += 2) acc += h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]);
  if (intervals % 2 == 1) {
    const std::size_t i = simpson_end;
    acc += 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]);
  }
  return acc;
}

enum class InteractionClass { high_low_high = 0, high_high_high = 1, high_high_low = 2 };

inline const char* class_name(InteractionClass c) {
  switch (c) {
    case InteractionClass::high_low_high:
      return "high_low_high";
    case InteractionClass::high_high_high:
      return "high_high_high";
    case InteractionClass::high_high_low:
      return "high_high_low";
  }
  return "?";
}

// Inputs are split as u = u_L + u_M + u_H relative to the output dyad N:
// L holds dyads <= N/4, H dyads >= 4N, M the rest. A term of the expanded
// nonlinearity is classed by its two highest inputs: both H is
// high_high_low, second highest L is high_low_high, anything else
// high_high_high. Every term lands in exactly one class.
[[nodiscard]] inline InteractionClass classify(std::vector<int> levels) {
  std::sort(levels.begin(), levels.end(), std::greater<>());
  if (levels[0] == 2 && levels[1] == 2) return InteractionClass::high_high_low;
  if (levels[1] == 0) return InteractionClass::high_low_high;
  return InteractionClass::high_high_high;
}

struct FluxRecord {
  long n = 0;
  double s = 0.0;
  double weight = 1.0;  // N^{2s}
  std::vector<double> times;
  // 2 <P_N u, P_N(class part of the nonlinearity)> at every snapshot
  std::array<std::vector<double>, 3> integrand;
  std::vector<double> direct_integrand;
  std::array<double, 3> flux{};  // time integrals, unweighted
  double total = 0.0;            // sum of the class fluxes
  double direct_total = 0.0;     // integral of the undecomposed integrand
  double reconstruction = 0.0;   // max_t |sum of class integrands - direct|
  double increment = 0.0;        // ||P_N u(T)||^2 - ||P_N u(0)||^2
};

namespace detail {

[[nodiscard]] inline double real_inner(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
  return s;
}

}  // namespace detail

// Frequency-localized flux F_N(t) = 2 int_0^t <P_N u, P_N NL(u)> ds on a
// uniformly sampled solution path, split into interaction classes.
[[nodiscard]] inline FluxRecord flux_decompose(const SampledPath<FourierField>& path, const EquationSpec& eq,
                                               long n, double s) {
  path.validate();
  if (path.size() < 3) throw SamplingError("flux needs a path with at least 3 snapshots");
  const double h = path.times[1] - path.times[0];
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (std::abs(path.times[i] - path.times[i - 1] - h) > 1e-9 * h) {
      throw SamplingError("flux needs uniformly spaced snapshots");
    }
  }
  const TorusLattice& lat = path.values.front().lattice();
  eq.check_lattice(lat);
  if (!is_dyadic(n)) throw BandError("flux band must be a power of two");
  const BandProjector pn = BandProjector::sharp(n);
  pn.check(lat);

  // level of each mode: 0 low, 1 middle, 2 high
  std::vector<int> level(lat.size(), 1);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const long d = dyad_of_sq(lat.modulus_sq(i));
    if (4 * d <= n) level[i] = 0;
    else if (d >= 4 * n) level[i] = 2;
  }
  std::vector<double> chi(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) chi[i] = pn.symbol(lat, i);

  FluxRecord rec;
  rec.n = n;
  rec.s = s;
  rec.weight = std::pow(static_cast<double>(n), 2.0 * s);
  rec.times = path.times;
  NonlinearEngine engine(lat, eq);
  const std::size_t k = static_cast<std::size_t>(eq.k);
  const std::size_t terms = static_cast<std::size_t>(std::pow(3.0, static_cast<double>(k)));
  for (const FourierField& u : path.values) {
    const std::vector<cplx> c = u.coeff_vector();
    std::array<std::vector<cplx>, 3> parts;
    for (auto& p : parts) p.assign(c.size(), cplx{});
    for (std::size_t i = 0; i < c.size(); ++i) parts[static_cast<std::size_t>(level[i])][i] = c[i];
    std::vector<cplx> pu(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) pu[i] = chi[i] * c[i];

    std::array<std::vector<cplx>, 3> cls;
    for (auto& v : cls) v.assign(c.size(), cplx{});
    std::vector<int> lv(k);
    std::vector<const std::vector<cplx>*> in(k);
    for (std::size_t t = 0; t < terms; ++t) {
      std::size_t code = t;
      bool empty = false;
      for (std::size_t j = 0; j < k; ++j) {
        lv[j] = static_cast<int>(code % 3);
        code /= 3;
        in[j] = &parts[static_cast<std::size_t>(lv[j])];
      }
      for (std::size_t j = 0; j < k && !empty; ++j) {
        empty = std::all_of(in[j]->begin(), in[j]->end(), [](const cplx& v) { return v == cplx{}; });
      }
      if (empty) continue;
      const std::vector<cplx> term = engine.multilinear(in);
      auto& dst = cls[static_cast<std::size_t>(classify(lv))];
      for (std::size_t i = 0; i < c.size(); ++i) dst[i] += term[i];
    }
    double sum = 0.0;
    for (std::size_t q = 0; q < 3; ++q) {
      std::vector<cplx> proj(c.size());
      for (std::size_t i = 0; i < c.size(); ++i) proj[i] = chi[i] * cls[q][i];
      const double g = 2.0 * detail::real_inner(pu, proj);
      rec.integrand[q].push_back(g);
      sum += g;
    }
    const std::vector<cplx> full = engine.evaluate(c);
    std::vector<cplx> proj(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) proj[i] = chi[i] * full[i];
    const double direct = 2.0 * detail::real_inner(pu, proj);
    rec.direct_integrand.push_back(direct);
    rec.reconstruction = std::max(rec.reconstruction, std::abs(sum - direct));
  }
  for (std::size_t q = 0; q < 3; ++q) {
    rec.flux[q] = integrate_uniform(rec.integrand[q], h);
    rec.total += rec.flux[q];
  }
  rec.direct_total = integrate_uniform(rec.direct_integrand, h);
  rec.increment = project(path.values.back(), pn).norm_sq() - project(path.values.front(), pn).norm_sq();
  return rec;
}

enum class CutoffKind { sharp, smooth };

[[nodiscard]] inline BandProjector cutoff(CutoffKind kind, long n) {
  return kind == CutoffKind::sharp ? BandProjector::sharp(n) : BandProjector::smooth(n);
}

struct CommutatorResult {
  FourierField residual;
  double residual_norm = 0.0;
  double derivative_norm = 0.0;  // ||d_x u~||
  double low_sup = 0.0;          // grid max of |P_{N2} u|
  double ratio = 0.0;
};

// residual = P_N(d_x u~ . P_{N2} u) - P_N(d_x u~) . P_{N2} u with
// u~ = P_{N/2} u + P_N u + P_{2N} u (sharp pieces), evaluated pair by pair
// as sum [chi_N(xi1 + xi2) - chi_N(xi1)] f(xi1) g(xi2) with f = d_x u~ and
// g = P_{N2} u. The residual must fit on u's lattice.
[[nodiscard]] inline CommutatorResult commutator_residual(const FourierField& u, long n, long n2,
                                                          CutoffKind kind) {
  const TorusLattice& lat = u.lattice();
  if (!u.real_symmetric()) throw SolverError("commutator needs a real field");
  if (!is_dyadic(n) || !is_dyadic(n2) || 4 * n2 > n) {
    throw BandError("commutator needs dyadic N2 <= N/4, got N = " + std::to_string(n) +
                    ", N2 = " + std::to_string(n2));
  }
  // u~ reaches |xi| < 4N, P_{N2} u reaches |xi| < 2 N2 (smooth or sharp)
  const double reach = 4.0 * static_cast<double>(n) + 2.0 * static_cast<double>(n2);
  if (!(reach <= lat.resolved_radius())) {
    throw BandError("commutator band overflow: products reach |xi| = " + std::to_string(reach) +
                    " beyond the lattice's resolved radius " + std::to_string(lat.resolved_radius()));
  }
  std::vector<cplx> ut(lat.size()), low(lat.size());
  const BandProjector pn = cutoff(kind, n);
  const BandProjector plow = cutoff(kind, n2);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    const long d = dyad_of_sq(lat.modulus_sq(i));
    if (d == n / 2 || d == n || d == 2 * n) ut[i] = u[i];
    low[i] = plow.symbol(lat, i) * u[i];
  }
  const FourierField f = derivative(FourierField(lat, ut, true, u.mean_zero()), 0);
  const FourierField g(lat, low, true, false);
  std::vector<double> chi(lat.size());
  for (std::size_t i = 0; i < lat.size(); ++i) chi[i] = pn.symbol(lat, i);

  std::vector<cplx> r(lat.size());
  const std::vector<std::size_t> sf = nonzero_modes(f), sg = nonzero_modes(g);
  for (std::size_t a : sf) {
    const Mode k1 = lat.mode(a);
    for (std::size_t b : sg) {
      const Mode k2 = lat.mode(b);
      const std::size_t out = lat.flat_index({k1[0] + k2[0], k1[1] + k2[1]});
      const double diff = chi[out] - chi[a];
      if (diff != 0.0) r[out] += diff * (f[a] * g[b]);
    }
  }
  CommutatorResult res;
  res.residual = FourierField(lat, std::move(r), true, false);
  res.residual_norm = res.residual.norm();
  res.derivative_norm = f.norm();
  for (const cplx& v : synthesize(g).values) res.low_sup = std::max(res.low_sup, std::abs(v.real()));
  const double denom = static_cast<double>(n2) / static_cast<double>(n) * res.derivative_norm * res.low_sup;
  res.ratio = denom > 0.0 ? res.residual_norm / denom : 0.0;
  return res;
}

// E^s ledger of the difference v = u_a - u_b of two solutions sampled at
// the same times.
[[nodiscard]] inline EnergyLedger difference_ledger(const SampledPath<FourierField>& a,
                                                    const SampledPath<FourierField>& b, double s) {
  if (a.times != b.times) throw SamplingError("difference ledger needs paths with identical times");
  SampledPath<FourierField> v;
  for (std::size_t i = 0; i < a.size(); ++i) v.push(a.times[i], a.values[i] - b.values[i]);
  return e_s_norm(v, s);
}

}  // namespace shorttime
