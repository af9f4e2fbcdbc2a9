#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/lattice.hpp"
#include "shorttime/projector.hpp"

namespace shorttime {

using Matrix2 = std::array<std::array<double, 2>, 2>;

// Dispersion relation phi for the abstract equation i u_t + phi(grad/i) u = 0;
// the free flow multiplies c(k) by exp(i t phi(xi)).
struct DispersionSpec {
  std::string name;
  int dim = 0;  // 0: any dimension
  double alpha = 2.0;
  bool sum_type = false;
  // Spread allowed between max and min of |grad phi| / N^(alpha-1) on a band.
  double order_constant = 4.0;
  std::function<double(const Frequency&, int)> symbol;
  std::function<Frequency(const Frequency&, int)> group_velocity;
  // 1-D profile mu0 with phi(xi) = sum_i mu0(xi_i); set for sum-type specs.
  std::function<double(double)> profile;
  // Coordinate map A for the symmetrized ZK relation.
  std::optional<Matrix2> transform;
  double transform_scale = 1.0;

  [[nodiscard]] double phase(const TorusLattice& lat, std::size_t flat) const {
    return symbol(lat.frequency(flat), lat.dim);
  }

  void check_lattice(const TorusLattice& lat) const {
    if (dim != 0 && dim != lat.dim) {
      throw LatticeError("dispersion '" + name + "' needs a " + std::to_string(dim) +
                         "-D lattice, got " + std::to_string(lat.dim) + "-D");
    }
  }
};

namespace detail {

inline DispersionSpec sum_type_spec(std::string name, int dim, double alpha, double c,
                                    std::function<double(double)> mu0,
                                    std::function<double(double)> dmu0) {
  DispersionSpec s;
  s.name = std::move(name);
  s.dim = dim;
  s.alpha = alpha;
  s.sum_type = true;
  s.order_constant = c;
  s.profile = mu0;
  s.symbol = [mu0](const Frequency& xi, int d) {
    double v = mu0(xi[0]);
    if (d == 2) v += mu0(xi[1]);
    return v;
  };
  s.group_velocity = [dmu0](const Frequency& xi, int d) {
    return Frequency{dmu0(xi[0]), d == 2 ? dmu0(xi[1]) : 0.0};
  };
  return s;
}

inline std::mutex& registry_mutex() {
  static std::mutex m;
  return m;
}

inline std::map<std::string, DispersionSpec>& registry() {
  static std::map<std::string, DispersionSpec> r;
  return r;
}

}  // namespace detail

// 4^(-1/3)
inline const double zk_mu = std::cbrt(0.25);

[[nodiscard]] inline DispersionSpec schrodinger() {
  return detail::sum_type_spec(
      "schrodinger", 0, 2.0, 4.0, [](double x) { return -(x * x); },
      [](double x) { return -2.0 * x; });
}

// phi = -xi |xi|^(a-1); a = 2 is Benjamin-Ono.
[[nodiscard]] inline DispersionSpec fractional_1d(double a) {
  if (!(a > 1.0) || !std::isfinite(a)) throw Error("fractional order must exceed 1");
  char buf[64];
  std::snprintf(buf, sizeof buf, "fractional:%g", a);
  return detail::sum_type_spec(
      buf, 1, a, std::max(4.0, std::pow(2.0, a - 1.0)),
      [a](double x) {
        const double m = std::abs(x);
        return -x * (a == 2.0 ? m : std::pow(m, a - 1.0));
      },
      [a](double x) {
        const double m = std::abs(x);
        return -a * (a == 2.0 ? m : std::pow(m, a - 1.0));
      });
}

[[nodiscard]] inline DispersionSpec airy() {
  return detail::sum_type_spec(
      "airy", 1, 3.0, 4.0, [](double x) { return x * x * x; },
      [](double x) { return 3.0 * x * x; });
}

// k1^3 + 3 k1 k2^2. |grad phi| lies in [3|k|^2, 3 sqrt 2 |k|^2], so the band
// spread is just under 4 sqrt 2; the declared constant is 6.
[[nodiscard]] inline DispersionSpec zk() {
  DispersionSpec s;
  s.name = "zk";
  s.dim = 2;
  s.alpha = 3.0;
  s.sum_type = false;
  s.order_constant = 6.0;
  s.symbol = [](const Frequency& k, int) { return k[0] * k[0] * k[0] + 3.0 * k[0] * k[1] * k[1]; };
  s.group_velocity = [](const Frequency& k, int) {
    return Frequency{3.0 * (k[0] * k[0] + k[1] * k[1]), 6.0 * k[0] * k[1]};
  };
  return s;
}

// k1^3 + k2^3, reached from zk through k = A k', A = mu [[1, 1], [1, -1]].
// |grad chi| ranges over [3|k|^2 / sqrt 2, 3|k|^2], so its band spread is
// just under 4 sqrt 2; the declared constant is 6.
[[nodiscard]] inline DispersionSpec zk_symmetrized() {
  DispersionSpec s = detail::sum_type_spec(
      "zk-sym", 2, 3.0, 6.0, [](double x) { return x * x * x; },
      [](double x) { return 3.0 * x * x; });
  s.transform = Matrix2{{{zk_mu, zk_mu}, {zk_mu, -zk_mu}}};
  s.transform_scale = zk_mu;
  return s;
}

// Adds a numeric-callback relation selectable by name. Built-in names are
// reserved.
inline void register_dispersion(DispersionSpec spec) {
  if (spec.name.empty() || !spec.symbol || !spec.group_velocity) {
    throw Error("custom dispersion needs a name, a symbol and a group velocity");
  }
  if (!(spec.alpha > 1.0)) throw Error("dispersion order must exceed 1");
  if (spec.name == "schrodinger" || spec.name == "airy" || spec.name == "zk" ||
      spec.name == "zk-sym" || spec.name.rfind("fractional:", 0) == 0) {
    throw Error("'" + spec.name + "' is a built-in dispersion name");
  }
  std::lock_guard lock(detail::registry_mutex());
  detail::registry()[spec.name] = std::move(spec);
}

// "schrodinger", "fractional:a", "airy", "zk", "zk-sym", or a registered name.
[[nodiscard]] inline DispersionSpec dispersion_from_name(const std::string& name) {
  if (name == "schrodinger") return schrodinger();
  if (name == "airy") return airy();
  if (name == "zk") return zk();
  if (name == "zk-sym") return zk_symmetrized();
  if (name.rfind("fractional:", 0) == 0) {
    const std::string arg = name.substr(11);
    std::size_t used = 0;
    double a = 0.0;
    try {
      a = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw Error("bad fractional order in '" + name + "'");
    return fractional_1d(a);
  }
  std::lock_guard lock(detail::registry_mutex());
  auto it = detail::registry().find(name);
  if (it == detail::registry().end()) throw Error("unknown dispersion '" + name + "'");
  return it->second;
}

[[nodiscard]] inline std::vector<std::string> builtin_dispersion_names() {
  return {"schrodinger", "fractional:a", "airy", "zk", "zk-sym"};
}

struct EuclideanWindow {
  long n = 1;
  double alpha = 2.0;
  double delta = 1.0;
};

[[nodiscard]] inline EuclideanWindow window(const DispersionSpec& spec, long n) {
  if (!is_dyadic(n)) throw BandError("window needs a dyadic N, got " + std::to_string(n));
  return {n, spec.alpha, std::pow(static_cast<double>(n), -(spec.alpha - 1.0))};
}

// phi at every lattice mode, transform order.
[[nodiscard]] inline std::vector<double> phase_table(const DispersionSpec& spec,
                                                     const TorusLattice& lat) {
  spec.check_lattice(lat);
  std::vector<double> out(lat.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = spec.phase(lat, i);
  return out;
}

// exp(i t phi) with the argument formed and reduced in extended precision, so
// large phases keep the group law to rounding level.
[[nodiscard]] inline cplx unit_phase(double t, double phi) {
  constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
  long double a = static_cast<long double>(t) * static_cast<long double>(phi);
  a = std::fmod(a, two_pi);
  const double r = static_cast<double>(a);
  return {std::cos(r), std::sin(r)};
}

[[nodiscard]] inline FourierField propagate(const FourierField& field, const DispersionSpec& spec,
                                            double t) {
  const TorusLattice& lat = field.lattice();
  spec.check_lattice(lat);
  std::vector<cplx> c = field.coeff_vector();
  if (t != 0.0) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (c[i] != cplx{}) c[i] *= unit_phase(t, spec.phase(lat, i));
    }
  }
  // e^{it phi(-k)} = conj(e^{it phi(k)}) only for odd phi; realness survives
  // for odd symbols, so keep the flag exactly when phi is odd on the lattice.
  bool odd = field.real_symmetric() && t != 0.0;
  for (std::size_t i = 0; odd && i < c.size(); ++i) {
    if (lat.on_nyquist(i)) continue;
    odd = spec.phase(lat, lat.negated(i)) == -spec.phase(lat, i);
  }
  const bool real = field.real_symmetric() && (t == 0.0 || odd);
  return FourierField(lat, std::move(c), real, field.mean_zero());
}

struct OrderRatios {
  double min_ratio = 0.0;
  double max_ratio = 0.0;
};

// Extremes of |grad phi| / N^(alpha-1) over the nonzero frequencies of the
// sharp band N on the given lattice.
[[nodiscard]] inline OrderRatios order_check(const DispersionSpec& spec, long n,
                                             const TorusLattice& lat) {
  spec.check_lattice(lat);
  const BandProjector p = BandProjector::sharp(n);
  p.check(lat);
  const double scale = std::pow(static_cast<double>(n), spec.alpha - 1.0);
  OrderRatios r{std::numeric_limits<double>::infinity(), 0.0};
  bool any = false;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (p.symbol(lat, i) == 0.0 || lat.modulus_sq(i) == 0.0) continue;
    const Frequency g = spec.group_velocity(lat.frequency(i), lat.dim);
    const double v = std::sqrt(g[0] * g[0] + g[1] * g[1]) / scale;
    r.min_ratio = std::min(r.min_ratio, v);
    r.max_ratio = std::max(r.max_ratio, v);
    any = true;
  }
  if (!any) throw BandError("band N=" + std::to_string(n) + " has no nonzero frequencies");
  return r;
}

// Reference lattice: unit scale, just large enough to hold [N, 2N) on every axis.
[[nodiscard]] inline OrderRatios order_check(const DispersionSpec& spec, long n) {
  std::size_t m = 8;
  while (static_cast<double>(m / 2) < 2.0 * static_cast<double>(n)) m *= 2;
  return order_check(spec, n, make_lattice(spec.dim == 0 ? 1 : spec.dim, m));
}

struct IdentityCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};

// phi_zk(A k') against k1'^3 + k2'^3.
[[nodiscard]] inline IdentityCheck zk_symmetrize_check(const Frequency& kp) {
  const Frequency k{zk_mu * (kp[0] + kp[1]), zk_mu * (kp[0] - kp[1])};
  return {zk().symbol(k, 2), kp[0] * kp[0] * kp[0] + kp[1] * kp[1] * kp[1]};
}

// Lattice carrying A^{-1}(Z^2) for a raw ZK lattice with M modes: raw mode
// (k1, k2) sits at integer index (k1 + k2, k1 - k2) with scale 2 mu, so its
// physical frequency is exactly A^{-1} k.
[[nodiscard]] inline TorusLattice zk_symmetrized_lattice(const TorusLattice& raw) {
  if (raw.dim != 2 || raw.scale[0] != 1.0 || raw.scale[1] != 1.0) {
    throw LatticeError("ZK symmetrization expects a unit-scale 2-D lattice");
  }
  return make_lattice(2, 2 * raw.modes, 2.0 * zk_mu);
}

// Moves a raw ZK field to symmetrized coordinates. Coefficients are carried
// unchanged, so norms and convolution structure are preserved.
[[nodiscard]] inline FourierField zk_symmetrize(const FourierField& raw) {
  const TorusLattice sym = zk_symmetrized_lattice(raw.lattice());
  std::vector<cplx> c(sym.size());
  for (std::size_t i = 0; i < raw.lattice().size(); ++i) {
    if (raw[i] == cplx{}) continue;
    const Mode k = raw.lattice().mode(i);
    c[sym.flat_index({k[0] + k[1], k[0] - k[1]})] = raw[i];
  }
  return FourierField(sym, std::move(c), raw.real_symmetric(), raw.mean_zero());
}

}  // namespace shorttime
