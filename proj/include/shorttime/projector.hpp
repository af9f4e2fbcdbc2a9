#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/lattice.hpp"

namespace shorttime {

// Dyad N with N^2 <= r2 < 4N^2 (N = 1 for r2 < 4), decided on the squared
// modulus so integer lattices never round across a band edge.
[[nodiscard]] inline long dyad_of_sq(double r2) {
  if (r2 < 4.0) return 1;
  int e = 0;
  std::frexp(r2, &e);  // r2 in [2^(e-1), 2^e)
  return 1L << ((e - 1) / 2);
}

[[nodiscard]] inline bool is_dyadic(long n) { return n >= 1 && (n & (n - 1)) == 0; }

// Smallest dyad strictly above every frequency modulus on the lattice. Every
// dyadic family runs from 1 to this value; its sharp band is empty.
[[nodiscard]] inline long top_dyad(const TorusLattice& lattice) {
  long d = 1;
  const double r = lattice.max_modulus();
  while (static_cast<double>(d) <= r) d *= 2;
  return d;
}

[[nodiscard]] inline std::vector<long> dyadic_bands(const TorusLattice& lattice) {
  std::vector<long> out;
  for (long n = 1; n <= top_dyad(lattice); n *= 2) out.push_back(n);
  return out;
}

namespace detail {

inline double smooth_step_f(double x) { return x > 0.0 ? std::exp(-1.0 / x) : 0.0; }

}  // namespace detail

// C-infinity cutoff: 1 on [0, 1/2], 0 on [1, inf).
[[nodiscard]] inline double cutoff_profile(double r) {
  if (r <= 0.5) return 1.0;
  if (r >= 1.0) return 0.0;
  const double x = (1.0 - r) / 0.5;
  const double a = detail::smooth_step_f(x);
  const double b = detail::smooth_step_f(1.0 - x);
  return a / (a + b);
}

// Smooth Littlewood-Paley symbol at modulus r. Supported in (N/2, 2N),
// peaks at r = N, and telescopes: sum over N <= D equals cutoff(r / 2D).
[[nodiscard]] inline double smooth_dyadic_symbol(long n, double r) {
  if (n == 1) return cutoff_profile(r / 2.0);
  const double nn = static_cast<double>(n);
  return cutoff_profile(r / (2.0 * nn)) - cutoff_profile(r / nn);
}

// Half-open interval of physical frequencies on one axis: [lo, hi), or
// (lo, hi] when open_left is set (used for the mirrored negative half).
struct AxisInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool open_left = false;

  [[nodiscard]] bool contains(double x) const {
    return open_left ? (x > lo && x <= hi) : (x >= lo && x < hi);
  }
  friend bool operator==(const AxisInterval&, const AxisInterval&) = default;
};

enum class BandKind { sharp_dyadic, smooth_dyadic, interval, separation };

class BandProjector {
 public:
  [[nodiscard]] static BandProjector sharp(long n) {
    if (!is_dyadic(n)) throw BandError("dyadic band must be a power of two, got " + std::to_string(n));
    BandProjector p;
    p.kind_ = BandKind::sharp_dyadic;
    p.band_ = n;
    return p;
  }

  [[nodiscard]] static BandProjector smooth(long n) {
    BandProjector p = sharp(n);
    p.kind_ = BandKind::smooth_dyadic;
    return p;
  }

  // Box of per-axis intervals, optionally intersected with a sharp dyadic band.
  [[nodiscard]] static BandProjector interval(std::vector<AxisInterval> axes,
                                              std::optional<long> parent_band = std::nullopt) {
    if (axes.empty() || axes.size() > 2) throw BandError("interval projector needs 1 or 2 axes");
    if (parent_band && !is_dyadic(*parent_band)) throw BandError("parent band must be dyadic");
    BandProjector p;
    p.kind_ = BandKind::interval;
    p.axes_ = std::move(axes);
    p.band_ = parent_band.value_or(0);
    return p;
  }

  [[nodiscard]] static BandProjector separation(double lambda) {
    if (!(lambda >= 0.0)) throw BandError("separation threshold must be nonnegative");
    BandProjector p;
    p.kind_ = BandKind::separation;
    p.separation_ = lambda;
    return p;
  }

  [[nodiscard]] BandKind kind() const { return kind_; }
  [[nodiscard]] long band() const { return band_; }
  [[nodiscard]] const std::vector<AxisInterval>& axes() const { return axes_; }
  [[nodiscard]] double separation_threshold() const { return separation_; }

  // Multiplier value at one lattice mode.
  [[nodiscard]] double symbol(const TorusLattice& lattice, std::size_t flat) const {
    switch (kind_) {
      case BandKind::sharp_dyadic:
        return dyad_of_sq(lattice.modulus_sq(flat)) == band_ ? 1.0 : 0.0;
      case BandKind::smooth_dyadic:
        return smooth_dyadic_symbol(band_, lattice.modulus(flat));
      case BandKind::interval: {
        if (static_cast<int>(axes_.size()) != lattice.dim) {
          throw BandError("interval projector dimension does not match lattice");
        }
        if (band_ != 0 && dyad_of_sq(lattice.modulus_sq(flat)) != band_) return 0.0;
        const Frequency xi = lattice.frequency(flat);
        for (int a = 0; a < lattice.dim; ++a) {
          if (!axes_[a].contains(xi[a])) return 0.0;
        }
        return 1.0;
      }
      case BandKind::separation:
        throw BandError("separation restriction acts on pairs, not on a single field");
    }
    return 0.0;
  }

  // Throws BandError when this projector cannot act on the lattice.
  void check(const TorusLattice& lattice) const {
    if (kind_ == BandKind::separation) {
      throw BandError("separation restriction acts on pairs, not on a single field");
    }
    if ((kind_ == BandKind::sharp_dyadic || kind_ == BandKind::smooth_dyadic) &&
        band_ > top_dyad(lattice)) {
      throw BandError("band N=" + std::to_string(band_) + " exceeds Nyquist; largest dyad is " +
                      std::to_string(top_dyad(lattice)));
    }
  }

 private:
  BandKind kind_ = BandKind::sharp_dyadic;
  long band_ = 1;
  std::vector<AxisInterval> axes_{};
  double separation_ = 0.0;
};

// Whether a sharp dyadic band lies entirely inside the resolved frequencies
// (2N <= Nyquist on every axis).
[[nodiscard]] inline bool band_resolved(const TorusLattice& lattice, long n) {
  return 2.0 * static_cast<double>(n) <= lattice.resolved_radius();
}

[[nodiscard]] inline FourierField project(const FourierField& field, const BandProjector& p) {
  const TorusLattice& lat = field.lattice();
  p.check(lat);
  std::vector<cplx> c = field.coeff_vector();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double s = p.symbol(lat, i);
    if (s == 0.0) {
      c[i] = cplx{0.0, 0.0};
    } else if (s != 1.0) {
      c[i] *= s;
    }
  }
  // Dyadic symbols depend on |xi| only, so realness survives; interval
  // boxes need not be symmetric.
  const bool keeps_real = field.real_symmetric() && p.kind() != BandKind::interval;
  return FourierField(lat, std::move(c), keeps_real, field.mean_zero());
}

// Flat indices retained (symbol nonzero) by a projector.
[[nodiscard]] inline std::vector<std::size_t> support_of(const TorusLattice& lattice,
                                                         const BandProjector& p) {
  p.check(lattice);
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    if (p.symbol(lattice, i) != 0.0) out.push_back(i);
  }
  return out;
}

// Slices the sharp band N into disjoint boxes of per-axis width ceil(cN)
// whose union is exactly the band. In 1-D the two half-bands are tiled
// outward from |xi| = N; in 2-D each axis is tiled on the aligned grid
// [j w, (j+1) w) and boxes missing the annulus are dropped.
[[nodiscard]] inline std::vector<BandProjector> slice_band(const BandProjector& band, double c,
                                                           const TorusLattice& lattice) {
  if (band.kind() != BandKind::sharp_dyadic) throw BandError("slice_band expects a sharp dyadic band");
  const long n = band.band();
  if (!(c > 0.0 && c <= 0.5)) throw BandError("slice fraction c must lie in (0, 1/2]");
  if (static_cast<double>(n) * c < 1.0) throw BandError("slices narrower than one unit (N*c < 1)");
  const double w = std::ceil(c * static_cast<double>(n));
  const double nn = static_cast<double>(n);
  std::vector<BandProjector> out;
  if (lattice.dim == 1) {
    // N >= 2 here (N*c >= 1 with c <= 1/2), so the half-bands avoid zero.
    for (double lo = nn; lo < 2.0 * nn; lo += w) {
      const double hi = std::min(lo + w, 2.0 * nn);
      out.push_back(BandProjector::interval({AxisInterval{lo, hi, false}}, n));
    }
    for (double lo = nn; lo < 2.0 * nn; lo += w) {
      const double hi = std::min(lo + w, 2.0 * nn);
      out.push_back(BandProjector::interval({AxisInterval{-hi, -lo, true}}, n));
    }
    return out;
  }
  const long tiles = static_cast<long>(std::ceil(2.0 * nn / w));
  for (long i = -tiles; i < tiles; ++i) {
    for (long j = -tiles; j < tiles; ++j) {
      AxisInterval a{static_cast<double>(i) * w, static_cast<double>(i + 1) * w, false};
      AxisInterval b{static_cast<double>(j) * w, static_cast<double>(j + 1) * w, false};
      BandProjector p = BandProjector::interval({a, b}, n);
      bool hit = false;
      for (std::size_t f = 0; f < lattice.size() && !hit; ++f) hit = p.symbol(lattice, f) != 0.0;
      if (hit) out.push_back(std::move(p));
    }
  }
  return out;
}

}  // namespace shorttime
