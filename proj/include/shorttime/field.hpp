#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "shorttime/errors.hpp"
#include "shorttime/fft.hpp"
#include "shorttime/lattice.hpp"

namespace shorttime {

// Truncated Fourier coefficients on a torus lattice, transform order.
//
// real_symmetric: c(-k) == conj(c(k)) bit for bit, and Nyquist slots are
// zero (they have no conjugate partner that a real multiplier could keep).
// mean_zero: c(0) == 0.
// Both flags are enforced by the constructor, not merely recorded.
class FourierField {
 public:
  FourierField() = default;

  FourierField(TorusLattice lattice, std::vector<cplx> coeffs, bool real_symmetric = false,
               bool mean_zero = false)
      : lattice_(lattice), coeffs_(std::move(coeffs)), real_(real_symmetric), mean_zero_(mean_zero) {
    if (coeffs_.size() != lattice_.size()) {
      throw LatticeError("coefficient count does not match lattice size");
    }
    if (real_) symmetrize();
    if (mean_zero_) coeffs_[0] = cplx{0.0, 0.0};
  }

  [[nodiscard]] static FourierField zeros(const TorusLattice& lattice) {
    return FourierField(lattice, std::vector<cplx>(lattice.size()), true, true);
  }

  [[nodiscard]] static FourierField single_mode(const TorusLattice& lattice, const Mode& k,
                                                cplx value = {1.0, 0.0}) {
    std::vector<cplx> c(lattice.size());
    c[lattice.flat_index(k)] = value;
    return FourierField(lattice, std::move(c));
  }

  [[nodiscard]] const TorusLattice& lattice() const { return lattice_; }
  [[nodiscard]] std::span<const cplx> coeffs() const { return coeffs_; }
  [[nodiscard]] const cplx& operator[](std::size_t flat) const { return coeffs_[flat]; }
  [[nodiscard]] cplx at(const Mode& k) const { return coeffs_[lattice_.flat_index(k)]; }
  [[nodiscard]] bool real_symmetric() const { return real_; }
  [[nodiscard]] bool mean_zero() const { return mean_zero_; }

  [[nodiscard]] double norm_sq() const {
    double s = 0.0;
    for (const cplx& c : coeffs_) s += std::norm(c);
    return s;
  }
  [[nodiscard]] double norm() const { return std::sqrt(norm_sq()); }

  // Largest |c(-k) - conj(c(k))| over the lattice.
  [[nodiscard]] double hermitian_defect() const {
    double d = 0.0;
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (lattice_.on_nyquist(i)) {
        d = std::max(d, std::abs(coeffs_[i]));
        continue;
      }
      d = std::max(d, std::abs(coeffs_[lattice_.negated(i)] - std::conj(coeffs_[i])));
    }
    return d;
  }

  // Copy of the coefficients for callers that build a modified field.
  [[nodiscard]] std::vector<cplx> coeff_vector() const { return coeffs_; }

  [[nodiscard]] FourierField scaled(cplx factor) const {
    std::vector<cplx> c = coeffs_;
    for (cplx& v : c) v *= factor;
    const bool keeps_real = real_ && factor.imag() == 0.0;
    return FourierField(lattice_, std::move(c), keeps_real, mean_zero_);
  }

  friend FourierField operator+(const FourierField& a, const FourierField& b) {
    check_same(a, b);
    std::vector<cplx> c = a.coeffs_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] += b.coeffs_[i];
    return FourierField(a.lattice_, std::move(c), a.real_ && b.real_, a.mean_zero_ && b.mean_zero_);
  }

  friend FourierField operator-(const FourierField& a, const FourierField& b) {
    check_same(a, b);
    std::vector<cplx> c = a.coeffs_;
    for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b.coeffs_[i];
    return FourierField(a.lattice_, std::move(c), a.real_ && b.real_, a.mean_zero_ && b.mean_zero_);
  }

  static void check_same(const FourierField& a, const FourierField& b) {
    if (!(a.lattice_ == b.lattice_)) throw LatticeError("fields live on different lattices");
  }

 private:
  void symmetrize() {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
      if (lattice_.on_nyquist(i)) {
        coeffs_[i] = cplx{0.0, 0.0};
        continue;
      }
      const std::size_t j = lattice_.negated(i);
      if (j < i) continue;
      if (j == i) {
        coeffs_[i] = cplx{coeffs_[i].real(), 0.0};
        continue;
      }
      const cplx v = 0.5 * (coeffs_[i] + std::conj(coeffs_[j]));
      coeffs_[i] = v;
      coeffs_[j] = std::conj(v);
    }
  }

  TorusLattice lattice_{};
  std::vector<cplx> coeffs_{};
  bool real_ = false;
  bool mean_zero_ = false;
};

// Grid samples u(x_j) at x_j = 2*pi*scale*j/n, row-major.
struct SpatialSamples {
  int dim = 1;
  std::size_t n = 0;
  CVec values;

  [[nodiscard]] double mean_square() const {
    double s = 0.0;
    for (const cplx& v : values) s += std::norm(v);
    return s / static_cast<double>(values.size());
  }
  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (const cplx& v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

// Slot of lattice mode k on an n-point grid (n >= lattice modes).
[[nodiscard]] inline std::size_t grid_slot(const TorusLattice& lattice, std::size_t flat,
                                           std::size_t n) {
  const Mode k = lattice.mode(flat);
  if (lattice.dim == 1) return TorusLattice::slot_of_mode(k[0], n);
  return TorusLattice::slot_of_mode(k[0], n) * n + TorusLattice::slot_of_mode(k[1], n);
}

// Samples on an n-point grid per axis; n defaults to modes_per_axis and any
// larger n zero-pads the spectrum.
[[nodiscard]] inline SpatialSamples synthesize(const FourierField& field, std::size_t n = 0) {
  const TorusLattice& lat = field.lattice();
  if (n == 0) n = lat.modes;
  if (n < lat.modes) throw LatticeError("synthesis grid smaller than the lattice");
  SpatialSamples s{lat.dim, n, CVec(lat.dim == 1 ? n : n * n)};
  for (std::size_t i = 0; i < lat.size(); ++i) s.values[grid_slot(lat, i, n)] = field[i];
  fft_backward(s.values, lat.dim, n);
  return s;
}

[[nodiscard]] inline FourierField analyze(const SpatialSamples& samples, const TorusLattice& lattice,
                                          bool real_symmetric = false, bool mean_zero = false) {
  if (samples.dim != lattice.dim || samples.n != lattice.modes ||
      samples.values.size() != lattice.size()) {
    throw LatticeError("sample grid does not match lattice");
  }
  CVec work = samples.values;
  fft_forward(work, lattice.dim, lattice.modes);
  const double inv = 1.0 / static_cast<double>(work.size());
  std::vector<cplx> c(work.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = work[i] * inv;
  return FourierField(lattice, std::move(c), real_symmetric, mean_zero);
}

}  // namespace shorttime
