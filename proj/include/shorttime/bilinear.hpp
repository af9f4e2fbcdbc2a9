#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "shorttime/dispersion.hpp"
#include "shorttime/errors.hpp"
#include "shorttime/fft.hpp"
#include "shorttime/field.hpp"
#include "shorttime/parallel.hpp"
#include "shorttime/quadrature.hpp"

namespace shorttime {

// Modes carried by one argument of a bilinear form, with their grid slots and
// dispersion phases.
struct WaveSupport {
  std::vector<std::size_t> flat;
  std::vector<std::size_t> slot;
  std::vector<double> phase;
  long reach = 0;  // max |k| over axes and modes

  [[nodiscard]] std::size_t size() const { return flat.size(); }
};

[[nodiscard]] inline std::vector<std::size_t> nonzero_modes(const FourierField& f) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.lattice().size(); ++i) {
    if (f[i] != cplx{}) out.push_back(i);
  }
  return out;
}

[[nodiscard]] inline std::vector<cplx> gather(const FourierField& f, std::span<const std::size_t> flat) {
  std::vector<cplx> out(flat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) out[i] = f[flat[i]];
  return out;
}

[[nodiscard]] inline FourierField scatter(const TorusLattice& lat, std::span<const std::size_t> flat,
                                          std::span<const cplx> values) {
  std::vector<cplx> c(lat.size());
  for (std::size_t i = 0; i < flat.size(); ++i) c[flat[i]] = values[i];
  return FourierField(lat, std::move(c));
}

// Evaluates sum_j w_j mean_x |U1(t_j) U2(t_j)|^2 for free waves U = e^{it phi} u
// on a common spatial grid, plus the pieces needed for power iteration on one
// argument with the other held fixed.
//
// Grid: with zero padding, the smallest 2^a 3^b 5^c size holding the product
// spectrum unaliased (> 2(r1 + r2)); without it, the lattice itself, and a
// product reaching past Nyquist is an AliasingError.
class BilinearEngine {
 public:
  // Work is split into this many contiguous node blocks whatever the thread
  // count, so sums are associated identically for every run.
  static constexpr std::size_t kBlocks = 16;

  BilinearEngine(const TorusLattice& lattice, const DispersionSpec& spec, QuadratureRule quad,
                 std::span<const std::size_t> support1, std::span<const std::size_t> support2,
                 bool zero_pad, unsigned threads = 1)
      : lattice_(lattice), quad_(std::move(quad)), threads_(threads) {
    spec.check_lattice(lattice);
    WaveSupport s1 = build(lattice, spec, support1);
    WaveSupport s2 = build(lattice, spec, support2);
    const long reach = s1.reach + s2.reach;
    if (zero_pad) {
      n_ = next_fast_size(static_cast<std::size_t>(2 * reach + 1));
      n_ = std::max(n_, lattice.modes);
    } else {
      if (reach >= lattice.nyquist()) {
        throw AliasingError("product reaches mode " + std::to_string(reach) + " past Nyquist " +
                            std::to_string(lattice.nyquist() - 1) + "; enable zero padding");
      }
      n_ = lattice.modes;
    }
    points_ = lattice.dim == 1 ? n_ : n_ * n_;
    for (WaveSupport* s : {&s1, &s2}) {
      s->slot.resize(s->size());
      for (std::size_t i = 0; i < s->size(); ++i) s->slot[i] = grid_slot(lattice, s->flat[i], n_);
    }
    sup_[0] = std::move(s1);
    sup_[1] = std::move(s2);
  }

  [[nodiscard]] const TorusLattice& lattice() const { return lattice_; }
  [[nodiscard]] std::size_t grid() const { return n_; }
  [[nodiscard]] const QuadratureRule& quadrature() const { return quad_; }
  [[nodiscard]] const WaveSupport& support(int side) const { return sup_[side]; }

  // Free wave of `side` at time t on the grid.
  void synthesize_at(int side, std::span<const cplx> a, double t, CVec& buf) const {
    const WaveSupport& s = sup_[side];
    buf.assign(points_, cplx{});
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (a[i] != cplx{}) buf[s.slot[i]] = a[i] * unit_phase(t, s.phase[i]);
    }
    fft_backward(buf, lattice_.dim, n_);
  }

  [[nodiscard]] double norm_sq(std::span<const cplx> a1, std::span<const cplx> a2) const {
    check_sizes(a1, a2);
    return blocked_sum([&](std::size_t j, CVec& b1, CVec& b2) {
      synthesize_at(0, a1, quad_.nodes[j], b1);
      synthesize_at(1, a2, quad_.nodes[j], b2);
      double s = 0.0;
      for (std::size_t x = 0; x < points_; ++x) s += std::norm(b1[x] * b2[x]);
      return s / static_cast<double>(points_);
    });
  }

  // sum_j w_j max_x |U(t_j)|^2 on this engine's grid.
  [[nodiscard]] double linear_sq(int side, std::span<const cplx> a) const {
    return blocked_sum([&](std::size_t j, CVec& b, CVec&) {
      synthesize_at(side, a, quad_.nodes[j], b);
      double m = 0.0;
      for (const cplx& v : b) m = std::max(m, std::norm(v));
      return m;
    });
  }

  // Holds argument `side` fixed for subsequent normal_apply calls on the
  // other one. |U_fixed(t_j)|^2 is cached when it fits in cache_bytes.
  void fix(int side, std::span<const cplx> a, std::size_t cache_bytes = std::size_t{1} << 30) {
    fixed_side_ = side;
    fixed_.assign(a.begin(), a.end());
    weights_.clear();
    const std::size_t need = quad_.size() * points_ * sizeof(double);
    if (need > cache_bytes) return;
    weights_.resize(quad_.size() * points_);
    parallel_for(quad_.size(), threads_, [&](std::size_t j) {
      CVec b;
      synthesize_at(side, fixed_, quad_.nodes[j], b);
      double* w = weights_.data() + j * points_;
      for (std::size_t x = 0; x < points_; ++x) w[x] = std::norm(b[x]);
    });
  }

  // Normal operator of x -> U_fixed * U_x from L^2 coefficients to L^2(dt, dx):
  // sum_j w_j e^{-i t_j phi} P_supp analyze(|U_fixed(t_j)|^2 U_x(t_j)).
  // <x, normal_apply(x)> equals norm_sq with the fixed argument.
  [[nodiscard]] std::vector<cplx> normal_apply(std::span<const cplx> x) const {
    if (fixed_side_ < 0) throw Error("normal_apply needs a fixed argument");
    const int side = 1 - fixed_side_;
    const WaveSupport& s = sup_[side];
    if (x.size() != s.size()) throw LatticeError("coefficient vector does not match support");
    std::vector<std::vector<cplx>> partial(kBlocks, std::vector<cplx>(s.size()));
    const std::size_t m = quad_.size();
    const double inv = 1.0 / static_cast<double>(points_);
    parallel_for(kBlocks, threads_, [&](std::size_t blk) {
      CVec b;
      CVec f;
      std::vector<double> wtmp;
      std::vector<cplx>& acc = partial[blk];
      for (std::size_t j = block_begin(blk, m); j < block_begin(blk + 1, m); ++j) {
        const double t = quad_.nodes[j];
        const double* w = nullptr;
        if (!weights_.empty()) {
          w = weights_.data() + j * points_;
        } else {
          synthesize_at(fixed_side_, fixed_, t, f);
          wtmp.resize(points_);
          for (std::size_t p = 0; p < points_; ++p) wtmp[p] = std::norm(f[p]);
          w = wtmp.data();
        }
        synthesize_at(side, x, t, b);
        for (std::size_t p = 0; p < points_; ++p) b[p] *= w[p];
        fft_forward(b, lattice_.dim, n_);
        const double wq = quad_.weights[j] * inv;
        for (std::size_t i = 0; i < s.size(); ++i) {
          acc[i] += wq * b[s.slot[i]] * std::conj(unit_phase(t, s.phase[i]));
        }
      }
    });
    std::vector<cplx> out(s.size());
    for (const auto& p : partial) {
      for (std::size_t i = 0; i < out.size(); ++i) out[i] += p[i];
    }
    return out;
  }

 private:
  static WaveSupport build(const TorusLattice& lat, const DispersionSpec& spec,
                           std::span<const std::size_t> flat) {
    WaveSupport s;
    s.flat.assign(flat.begin(), flat.end());
    s.phase.resize(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
      s.phase[i] = spec.phase(lat, flat[i]);
      const Mode k = lat.mode(flat[i]);
      for (int a = 0; a < lat.dim; ++a) s.reach = std::max(s.reach, std::abs(k[a]));
    }
    return s;
  }

  static std::size_t block_begin(std::size_t blk, std::size_t m) { return blk * m / kBlocks; }

  void check_sizes(std::span<const cplx> a1, std::span<const cplx> a2) const {
    if (a1.size() != sup_[0].size() || a2.size() != sup_[1].size()) {
      throw LatticeError("coefficient vectors do not match supports");
    }
  }

  // sum_j w_j g(j), associated by fixed node blocks.
  template <class G>
  double blocked_sum(G&& g) const {
    const std::size_t m = quad_.size();
    std::vector<double> partial(kBlocks, 0.0);
    parallel_for(kBlocks, threads_, [&](std::size_t blk) {
      CVec b1;
      CVec b2;
      double s = 0.0;
      for (std::size_t j = block_begin(blk, m); j < block_begin(blk + 1, m); ++j) {
        s += quad_.weights[j] * g(j, b1, b2);
      }
      partial[blk] = s;
    });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
  }

  TorusLattice lattice_;
  QuadratureRule quad_;
  unsigned threads_ = 1;
  std::size_t n_ = 0;
  std::size_t points_ = 0;
  WaveSupport sup_[2];
  int fixed_side_ = -1;
  std::vector<cplx> fixed_;
  std::vector<double> weights_;
};

// ||e^{it phi} u1 * e^{it phi} u2||_{L^2([0, delta]; L^2)} by quadrature in t.
// The quadrature must cover [0, window.delta].
[[nodiscard]] inline double shorttime_bilinear_norm(const FourierField& u1, const FourierField& u2,
                                                    const DispersionSpec& spec,
                                                    const EuclideanWindow& win,
                                                    const QuadratureRule& quad,
                                                    bool zero_pad = false, unsigned threads = 1) {
  FourierField::check_same(u1, u2);
  if (std::abs(quad.delta - win.delta) > 1e-12 * win.delta) {
    throw SamplingError("quadrature interval does not match the window length");
  }
  const auto s1 = nonzero_modes(u1);
  const auto s2 = nonzero_modes(u2);
  if (s1.empty() || s2.empty()) return 0.0;
  BilinearEngine e(u1.lattice(), spec, quad, s1, s2, zero_pad, threads);
  return std::sqrt(e.norm_sq(gather(u1, s1), gather(u2, s2)));
}

// ||e^{it phi} u||_{L^2([0, delta]; L^inf)} with L^inf taken as the max over
// an n-point grid per axis (n = 0: the lattice grid).
[[nodiscard]] inline double linear_strichartz_norm(const FourierField& u, const DispersionSpec& spec,
                                                   const EuclideanWindow& win,
                                                   const QuadratureRule& quad, std::size_t n = 0) {
  spec.check_lattice(u.lattice());
  if (std::abs(quad.delta - win.delta) > 1e-12 * win.delta) {
    throw SamplingError("quadrature interval does not match the window length");
  }
  const TorusLattice& lat = u.lattice();
  if (n == 0) n = lat.modes;
  if (n < lat.modes) throw LatticeError("evaluation grid smaller than the lattice");
  const auto sup = nonzero_modes(u);
  if (sup.empty()) return 0.0;
  std::vector<std::size_t> slot(sup.size());
  std::vector<double> phase(sup.size());
  for (std::size_t i = 0; i < sup.size(); ++i) {
    slot[i] = grid_slot(lat, sup[i], n);
    phase[i] = spec.phase(lat, sup[i]);
  }
  CVec buf;
  const std::size_t points = lat.dim == 1 ? n : n * n;
  double s = 0.0;
  for (std::size_t j = 0; j < quad.size(); ++j) {
    buf.assign(points, cplx{});
    for (std::size_t i = 0; i < sup.size(); ++i) buf[slot[i]] = u[sup[i]] * unit_phase(quad.nodes[j], phase[i]);
    fft_backward(buf, lat.dim, n);
    double m = 0.0;
    for (const cplx& v : buf) m = std::max(m, std::norm(v));
    s += quad.weights[j] * m;
  }
  return std::sqrt(s);
}

}  // namespace shorttime
