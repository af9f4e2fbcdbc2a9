#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "shorttime/dispersion.hpp"
#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/multipliers.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/variation.hpp"

namespace shorttime {

enum class EquationFamily { gbo, zk, zk_symmetrized };

// Evolution u_t + L u = u^{k-1} (d . grad) u, with L the skew operator whose
// free flow is exp(i t phi). gbo: phi = -xi|xi|^{a-1}, d = (1); a = 2 is
// u_t + H u_xx = u^{k-1} u_x. zk: u_t + u_xxx + 3 u_xyy = u u_x. zk-sym:
// u_t + u_xxx + u_yyy = u (u_x + u_y).
struct EquationSpec {
  EquationFamily family = EquationFamily::gbo;
  int k = 2;
  double a = 2.0;
  DispersionSpec linear;
  std::array<double, 2> direction{1.0, 0.0};
  // Drops the nonlinearity; the flow is then exactly propagate.
  bool linear_only = false;

  [[nodiscard]] int dim() const { return family == EquationFamily::gbo ? 1 : 2; }

  [[nodiscard]] std::string name() const {
    switch (family) {
      case EquationFamily::gbo: {
        std::string s = "gbo:" + std::to_string(k);
        if (a != 2.0) {
          char buf[32];
          std::snprintf(buf, sizeof buf, ":%g", a);
          s += buf;
        }
        return s;
      }
      case EquationFamily::zk:
        return "zk";
      case EquationFamily::zk_symmetrized:
        return "zk-sym";
    }
    return "?";
  }

  void check_lattice(const TorusLattice& lat) const {
    if (lat.dim != dim()) {
      throw LatticeError(name() + " needs a " + std::to_string(dim()) + "-D lattice, got " +
                         std::to_string(lat.dim) + "-D");
    }
    linear.check_lattice(lat);
  }
};

[[nodiscard]] inline EquationSpec gbo_equation(int k, double a = 2.0) {
  if (k < 2) throw SolverError("gbo needs k >= 2, got " + std::to_string(k));
  EquationSpec e;
  e.family = EquationFamily::gbo;
  e.k = k;
  e.a = a;
  e.linear = fractional_1d(a);
  return e;
}

[[nodiscard]] inline EquationSpec zk_equation() {
  EquationSpec e;
  e.family = EquationFamily::zk;
  e.linear = zk();
  return e;
}

[[nodiscard]] inline EquationSpec zk_symmetrized_equation() {
  EquationSpec e;
  e.family = EquationFamily::zk_symmetrized;
  e.linear = zk_symmetrized();
  e.direction = {1.0, 1.0};
  return e;
}

// "gbo:K", "gbo:K:A", "zk", "zk-sym".
[[nodiscard]] inline EquationSpec equation_from_name(const std::string& name) {
  if (name == "zk") return zk_equation();
  if (name == "zk-sym") return zk_symmetrized_equation();
  if (name.rfind("gbo:", 0) == 0) {
    int k = 0;
    double a = 2.0;
    char tail = 0;
    const int got = std::sscanf(name.c_str() + 4, "%d:%lf%c", &k, &a, &tail);
    if (got == 1 || got == 2) return gbo_equation(k, a);
  }
  throw SolverError("unknown equation '" + name + "' (expected gbo:K, gbo:K:A, zk or zk-sym)");
}

// 2/3 rule: keep modes with |k_i| <= (M-1)/3 on every axis, so a product of
// two kept fields aliases only onto discarded modes.
[[nodiscard]] inline std::vector<char> dealias_mask(const TorusLattice& lat) {
  const long keep = (static_cast<long>(lat.modes) - 1) / 3;
  std::vector<char> m(lat.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Mode k = lat.mode(i);
    bool in = std::abs(k[0]) <= keep;
    if (lat.dim == 2) in = in && std::abs(k[1]) <= keep;
    m[i] = in ? 1 : 0;
  }
  return m;
}

enum class NonlinearForm { product, divergence };

// Pseudospectral evaluation of the nonlinearity on the lattice grid. Every
// physical product is followed by the dealiasing mask; u^{k-1} is built by
// repeated dealiased products.
class NonlinearEngine {
 public:
  NonlinearEngine(const TorusLattice& lat, const EquationSpec& eq)
      : lat_(lat), eq_(eq), mask_(dealias_mask(lat)), dmult_(lat.size()), neg_(lat.size()) {
    eq.check_lattice(lat);
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const Frequency f = lat.frequency(i);
      double d = eq.direction[0] * f[0];
      if (lat.dim == 2) d += eq.direction[1] * f[1];
      dmult_[i] = lat.on_nyquist(i) ? cplx{} : cplx{0.0, d};
      neg_[i] = lat.negated(i);
    }
    inv_size_ = 1.0 / static_cast<double>(lat.size());
  }

  [[nodiscard]] const TorusLattice& lattice() const { return lat_; }
  [[nodiscard]] const std::vector<char>& mask() const { return mask_; }

  // Full nonlinearity of a real coefficient vector.
  [[nodiscard]] std::vector<cplx> evaluate(const std::vector<cplx>& u,
                                           NonlinearForm form = NonlinearForm::product) {
    if (eq_.linear_only) return std::vector<cplx>(u.size());
    to_physical(u, false, phys_u_);
    if (form == NonlinearForm::product) {
      power_into(phys_u_, eq_.k - 1, acc_);
      to_physical(u, true, work_);
      multiply(acc_, work_);
      return finish(work_, false);
    }
    power_into(phys_u_, eq_.k - 1, acc_);
    multiply(acc_, phys_u_, work_);
    std::vector<cplx> c = finish(work_, true);
    const double inv_k = 1.0 / static_cast<double>(eq_.k);
    for (cplx& v : c) v *= inv_k;
    return c;
  }

  // Product form with k distinct inputs: D(...D(D(a_1 a_2) a_3)... (d.grad) a_k).
  // Multilinear, and equal to evaluate(u) when every input is u.
  [[nodiscard]] std::vector<cplx> multilinear(const std::vector<const std::vector<cplx>*>& inputs) {
    if (inputs.size() != static_cast<std::size_t>(eq_.k)) throw SolverError("multilinear: need k inputs");
    if (eq_.linear_only) return std::vector<cplx>(lat_.size());
    to_physical(*inputs[0], false, acc_);
    for (std::size_t j = 1; j + 1 < inputs.size(); ++j) {
      to_physical(*inputs[j], false, work_);
      multiply(acc_, work_);
      std::vector<cplx> c = finish(work_, false, false);
      to_physical(c, false, acc_);
    }
    to_physical(*inputs.back(), true, work_);
    multiply(acc_, work_);
    return finish(work_, false);
  }

 private:
  // Real part of the synthesis of c (or of its directional derivative).
  void to_physical(const std::vector<cplx>& c, bool differentiate, CVec& out) const {
    out.assign(c.begin(), c.end());
    if (differentiate) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] *= dmult_[i];
    }
    fft_backward(out, lat_.dim, lat_.modes);
    for (cplx& v : out) v = {v.real(), 0.0};
  }

  // out = u^p with a dealiased product after every multiplication.
  void power_into(const CVec& u, int p, CVec& out) {
    out = u;
    for (int j = 1; j < p; ++j) {
      CVec prod(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) prod[i] = {out[i].real() * u[i].real(), 0.0};
      std::vector<cplx> c = finish(prod, false, false);
      to_physical(c, false, out);
    }
  }

  static void multiply(const CVec& a, CVec& b) {
    for (std::size_t i = 0; i < a.size(); ++i) b[i] = {a[i].real() * b[i].real(), 0.0};
  }
  static void multiply(const CVec& a, const CVec& b, CVec& out) {
    out.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = {a[i].real() * b[i].real(), 0.0};
  }

  // Forward transform of real samples, dealias, Hermitian average, and
  // optionally differentiate; the derivative output has its mean forced to 0.
  std::vector<cplx> finish(CVec& phys, bool differentiate, bool zero_mean = true) {
    fft_forward(phys, lat_.dim, lat_.modes);
    std::vector<cplx> c(phys.size());
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!mask_[i]) continue;
      c[i] = phys[i] * inv_size_;
      if (differentiate) c[i] *= dmult_[i];
    }
    for (std::size_t i = 0; i < c.size(); ++i) {
      const std::size_t j = neg_[i];
      if (j < i) continue;
      if (j == i) {
        c[i] = {c[i].real(), 0.0};
        continue;
      }
      const cplx v = 0.5 * (c[i] + std::conj(c[j]));
      c[i] = v;
      c[j] = std::conj(v);
    }
    if (zero_mean) c[0] = cplx{};
    return c;
  }

  TorusLattice lat_;
  EquationSpec eq_;
  std::vector<char> mask_;
  std::vector<cplx> dmult_;
  std::vector<std::size_t> neg_;
  double inv_size_ = 1.0;
  CVec phys_u_, acc_, work_;
};

[[nodiscard]] inline FourierField nonlinearity(const FourierField& u, const EquationSpec& eq,
                                               NonlinearForm form = NonlinearForm::product) {
  if (!u.real_symmetric()) throw SolverError("nonlinearity needs a real (Hermitian) field");
  NonlinearEngine engine(u.lattice(), eq);
  return FourierField(u.lattice(), engine.evaluate(u.coeff_vector(), form), true, true);
}

struct SolverState {
  double time = 0.0;
  FourierField field;
  double initial_mean = 0.0;
  double initial_l2 = 0.0;
  double dt = 0.0;
  std::vector<char> mask;
  // Largest |xi| in the initial support; enters the step-size guard.
  double guard_modulus = 0.0;
  std::size_t steps = 0;
};

constexpr double kStepGuard = 10.0;
constexpr double kBlowUpFactor = 1e6;

[[nodiscard]] inline SolverState make_state(const FourierField& u0, const EquationSpec& eq, double dt) {
  eq.check_lattice(u0.lattice());
  if (!u0.real_symmetric()) throw SolverError("initial data must be real");
  if (u0[0] != cplx{}) throw SolverError("initial data must have zero mean");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw SolverError("dt must be positive");
  SolverState s;
  s.field = u0;
  s.dt = dt;
  s.mask = dealias_mask(u0.lattice());
  s.initial_mean = std::abs(u0[0]);
  s.initial_l2 = u0.norm();
  const TorusLattice& lat = u0.lattice();
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (u0[i] == cplx{}) continue;
    if (!s.mask[i]) throw SolverError("initial data has modes outside the dealiasing mask");
    s.guard_modulus = std::max(s.guard_modulus, lat.modulus(i));
  }
  const double g = dt * std::pow(s.guard_modulus, eq.linear.alpha);
  if (g > kStepGuard) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "step guard violated: dt * N_max^alpha = %.6g > %.6g (N_max = %.6g)", g,
                  kStepGuard, s.guard_modulus);
    throw SolverError(buf);
  }
  return s;
}

// Exact linear flow plus classical RK4 on the twisted variable
// w(s) = exp(-s L) u(t + s) (integrating-factor Runge-Kutta).
class LawsonRK4 {
 public:
  LawsonRK4(const TorusLattice& lat, const EquationSpec& eq, double dt,
            NonlinearForm form = NonlinearForm::product)
      : nl_(lat, eq), form_(form), dt_(dt), half_(lat.size()), full_(lat.size()) {
    for (std::size_t i = 0; i < lat.size(); ++i) {
      const double phi = eq.linear.phase(lat, i);
      half_[i] = unit_phase(0.5 * dt, phi);
      full_[i] = unit_phase(dt, phi);
    }
  }

  void advance(std::vector<cplx>& u) {
    const std::size_t n = u.size();
    const double h = dt_;
    const std::vector<cplx> k1 = nl_.evaluate(u, form_);
    std::vector<cplx> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = half_[i] * (u[i] + 0.5 * h * k1[i]);
    const std::vector<cplx> k2 = nl_.evaluate(tmp, form_);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = half_[i] * u[i] + 0.5 * h * k2[i];
    const std::vector<cplx> k3 = nl_.evaluate(tmp, form_);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = full_[i] * u[i] + h * (half_[i] * k3[i]);
    const std::vector<cplx> k4 = nl_.evaluate(tmp, form_);
    for (std::size_t i = 0; i < n; ++i) {
      u[i] = full_[i] * u[i] + (h / 6.0) * (full_[i] * k1[i] + 2.0 * (half_[i] * (k2[i] + k3[i])) + k4[i]);
    }
  }

  [[nodiscard]] double dt() const { return dt_; }

 private:
  NonlinearEngine nl_;
  NonlinearForm form_;
  double dt_;
  std::vector<cplx> half_, full_;
};

[[nodiscard]] inline SolverState step(const SolverState& state, const EquationSpec& eq) {
  const double g = state.dt * std::pow(state.guard_modulus, eq.linear.alpha);
  if (g > kStepGuard) throw SolverError("step guard violated: dt * N_max^alpha > 10");
  LawsonRK4 rk(state.field.lattice(), eq, state.dt);
  std::vector<cplx> c = state.field.coeff_vector();
  rk.advance(c);
  SolverState next = state;
  next.field = FourierField(state.field.lattice(), std::move(c), true, true);
  next.steps = state.steps + 1;
  next.time = static_cast<double>(next.steps) * state.dt;
  return next;
}

struct ConservationRow {
  std::size_t step = 0;
  double time = 0.0;
  double mean = 0.0;
  double l2 = 0.0;
  double drift = 0.0;
  double hermitian_defect = 0.0;
};

struct EvolveResult {
  SampledPath<FourierField> path;
  std::vector<ConservationRow> log;
  double max_drift = 0.0;
};

// Largest |c(-k) - conj(c(k))| of a raw coefficient vector.
[[nodiscard]] inline double raw_hermitian_defect(const TorusLattice& lat, const std::vector<cplx>& c) {
  double d = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (lat.on_nyquist(i)) {
      d = std::max(d, std::abs(c[i]));
      continue;
    }
    d = std::max(d, std::abs(c[lat.negated(i)] - std::conj(c[i])));
  }
  return d;
}

// Snapshots at every snapshot_every-th step and at T. T must be a whole
// number of steps.
[[nodiscard]] inline EvolveResult evolve(const FourierField& initial, const EquationSpec& eq, double T,
                                         double dt, std::size_t snapshot_every = 1,
                                         NonlinearForm form = NonlinearForm::product) {
  if (!(T >= 0.0) || !std::isfinite(T)) throw SolverError("T must be finite and nonnegative");
  if (snapshot_every == 0) throw SolverError("snapshot_every must be positive");
  const SolverState s0 = make_state(initial, eq, dt);
  const double ratio = T / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  if (std::abs(ratio - static_cast<double>(steps)) > 1e-9 * std::max(1.0, ratio)) {
    throw SolverError("T is not a whole number of steps dt");
  }
  const TorusLattice& lat = initial.lattice();
  EvolveResult res;
  const double l2_0 = s0.initial_l2;
  auto record = [&](std::size_t i, const std::vector<cplx>& c) {
    ConservationRow row;
    row.step = i;
    row.time = static_cast<double>(i) * dt;
    row.mean = std::abs(c[0]);
    double n2 = 0.0;
    for (const cplx& v : c) n2 += std::norm(v);
    row.l2 = std::sqrt(n2);
    row.drift = l2_0 > 0.0 ? std::abs(n2 - l2_0 * l2_0) / (l2_0 * l2_0) : 0.0;
    row.hermitian_defect = raw_hermitian_defect(lat, c);
    res.max_drift = std::max(res.max_drift, row.drift);
    res.log.push_back(row);
    res.path.push(row.time, FourierField(lat, c, true, true));
  };
  std::vector<cplx> c = initial.coeff_vector();
  record(0, c);
  if (steps == 0) return res;
  LawsonRK4 rk(lat, eq, dt, form);
  for (std::size_t i = 1; i <= steps; ++i) {
    rk.advance(c);
    double n2 = 0.0;
    for (const cplx& v : c) n2 += std::norm(v);
    if (!std::isfinite(n2) || std::sqrt(n2) > kBlowUpFactor * l2_0) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "blow-up guard: |u| = %.6g exceeds %.0e x initial %.6g at t = %.6g",
                    std::sqrt(n2), kBlowUpFactor, l2_0, static_cast<double>(i) * dt);
      throw BlowUpError(buf);
    }
    if (i % snapshot_every == 0 || i == steps) record(i, c);
  }
  return res;
}

// ||u||_{H^s}^2 = sum <xi>^{2s} |c|^2.
[[nodiscard]] inline double sobolev_norm(const FourierField& u, double s) {
  const TorusLattice& lat = u.lattice();
  double acc = 0.0;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (u[i] == cplx{}) continue;
    acc += std::pow(1.0 + lat.modulus_sq(i), s) * std::norm(u[i]);
  }
  return std::sqrt(acc);
}

struct ModeAmplitude {
  Mode k{0, 0};
  double amplitude = 1.0;
  double phase = 0.0;

  friend bool operator==(const ModeAmplitude&, const ModeAmplitude&) = default;
};

// Initial data shapes, scaled to ||u||_{H^s} = amplitude after projection to
// the dealiasing mask and removal of the mean.
//   random: Gaussian coefficients on the listed sharp bands (seeded)
//   modes:  sum of amplitude * cos(k.x + phase)
//   bump:   sech^2(|x - center| / width), center of the torus
struct ProfileSpec {
  std::string kind = "random";
  std::vector<long> bands{1, 2, 4};
  std::uint64_t seed = 0;
  std::vector<ModeAmplitude> modes;
  double width = 0.5;
  double amplitude = 0.01;
  double sobolev_s = 1.0;

  friend bool operator==(const ProfileSpec&, const ProfileSpec&) = default;
};

[[nodiscard]] inline FourierField initial_data(const TorusLattice& lat, const ProfileSpec& p) {
  std::vector<cplx> c(lat.size());
  if (p.kind == "random") {
    if (p.bands.empty()) throw SolverError("random profile needs at least one band");
    for (std::size_t b = 0; b < p.bands.size(); ++b) {
      const FourierField f = random_field(lat, BandProjector::sharp(p.bands[b]), derive_seed(p.seed, b), true, true);
      for (std::size_t i = 0; i < c.size(); ++i) c[i] += f[i];
    }
  } else if (p.kind == "modes") {
    if (p.modes.empty()) throw SolverError("modes profile needs at least one mode");
    for (const ModeAmplitude& m : p.modes) {
      Mode k = m.k;
      if (lat.dim == 1) k[1] = 0;
      if (!lat.contains(k)) throw LatticeError("profile mode outside the lattice");
      const cplx v = 0.5 * m.amplitude * std::polar(1.0, m.phase);
      c[lat.flat_index(k)] += v;
      c[lat.flat_index({-k[0], -k[1]})] += std::conj(v);
    }
  } else if (p.kind == "bump") {
    if (!(p.width > 0.0)) throw SolverError("bump width must be positive");
    const std::size_t n = lat.modes;
    SpatialSamples s{lat.dim, n, CVec(lat.size())};
    const double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t j = 0; j < lat.size(); ++j) {
      const std::size_t j0 = lat.dim == 1 ? j : j / n;
      double r2 = 0.0;
      const double x0 = two_pi * lat.scale[0] * (static_cast<double>(j0) / static_cast<double>(n) - 0.5);
      r2 += x0 * x0;
      if (lat.dim == 2) {
        const double x1 = two_pi * lat.scale[1] * (static_cast<double>(j % n) / static_cast<double>(n) - 0.5);
        r2 += x1 * x1;
      }
      const double sech = 1.0 / std::cosh(std::sqrt(r2) / p.width);
      s.values[j] = {sech * sech, 0.0};
    }
    c = analyze(s, lat).coeff_vector();
  } else {
    throw SolverError("unknown profile kind '" + p.kind + "' (expected random, modes or bump)");
  }
  const std::vector<char> mask = dealias_mask(lat);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!mask[i]) c[i] = cplx{};
  }
  FourierField u(lat, std::move(c), true, true);
  const double h = sobolev_norm(u, p.sobolev_s);
  if (h == 0.0) throw SolverError("profile is zero after dealiasing and mean removal");
  return u.scaled(p.amplitude / h);
}

}  // namespace shorttime
