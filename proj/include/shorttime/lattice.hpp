#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "shorttime/errors.hpp"

namespace shorttime {

using Mode = std::array<long, 2>;
using Frequency = std::array<double, 2>;

// Fourier lattice of a (rescaled) 1- or 2-torus.
//
// Each axis carries M modes k in {-M/2, ..., M/2-1}; the physical period is
// 2*pi*scale and the physical frequency of mode k is k/scale. Coefficients
// are stored in transform order (slot s holds k = s for s < M/2, k = s - M
// otherwise), row-major for dim == 2 with axis 0 slowest.
struct TorusLattice {
  int dim = 1;
  std::size_t modes = 8;
  std::array<double, 2> scale{1.0, 1.0};

  [[nodiscard]] std::size_t size() const { return dim == 1 ? modes : modes * modes; }

  [[nodiscard]] long nyquist() const { return static_cast<long>(modes / 2); }

  [[nodiscard]] static long mode_of_slot(std::size_t slot, std::size_t m) {
    return slot < m / 2 ? static_cast<long>(slot)
                        : static_cast<long>(slot) - static_cast<long>(m);
  }

  // Slot of mode k on an axis with m modes; k must lie in [-m/2, m/2).
  [[nodiscard]] static std::size_t slot_of_mode(long k, std::size_t m) {
    const long mm = static_cast<long>(m);
    return static_cast<std::size_t>(((k % mm) + mm) % mm);
  }

  [[nodiscard]] bool contains(const Mode& k) const {
    const long lo = -nyquist();
    const long hi = nyquist();
    for (int a = 0; a < dim; ++a) {
      if (k[a] < lo || k[a] >= hi) return false;
    }
    return true;
  }

  [[nodiscard]] Mode mode(std::size_t flat) const {
    if (dim == 1) return {mode_of_slot(flat, modes), 0};
    return {mode_of_slot(flat / modes, modes), mode_of_slot(flat % modes, modes)};
  }

  [[nodiscard]] std::size_t flat_index(const Mode& k) const {
    if (!contains(k)) throw LatticeError("mode outside lattice");
    if (dim == 1) return slot_of_mode(k[0], modes);
    return slot_of_mode(k[0], modes) * modes + slot_of_mode(k[1], modes);
  }

  [[nodiscard]] Frequency frequency(std::size_t flat) const {
    const Mode k = mode(flat);
    Frequency xi{static_cast<double>(k[0]) / scale[0], 0.0};
    if (dim == 2) xi[1] = static_cast<double>(k[1]) / scale[1];
    return xi;
  }

  [[nodiscard]] double modulus_sq(std::size_t flat) const {
    const Frequency xi = frequency(flat);
    return xi[0] * xi[0] + xi[1] * xi[1];
  }

  [[nodiscard]] double modulus(std::size_t flat) const { return std::sqrt(modulus_sq(flat)); }

  // Flat index of -k, with the Nyquist slot mapped to itself.
  [[nodiscard]] std::size_t negated(std::size_t flat) const {
    if (dim == 1) return (modes - flat) % modes;
    const std::size_t i0 = flat / modes;
    const std::size_t i1 = flat % modes;
    return ((modes - i0) % modes) * modes + (modes - i1) % modes;
  }

  [[nodiscard]] bool on_nyquist(std::size_t flat) const {
    const Mode k = mode(flat);
    for (int a = 0; a < dim; ++a) {
      if (k[a] == -nyquist()) return true;
    }
    return false;
  }

  [[nodiscard]] double max_modulus() const {
    double m = 0.0;
    const double half = static_cast<double>(nyquist());
    for (int a = 0; a < dim; ++a) m += (half / scale[a]) * (half / scale[a]);
    return std::sqrt(m);
  }

  // Largest physical frequency magnitude fully resolved on every axis.
  [[nodiscard]] double resolved_radius() const {
    double r = static_cast<double>(nyquist()) / scale[0];
    if (dim == 2) r = std::min(r, static_cast<double>(nyquist()) / scale[1]);
    return r;
  }

  friend bool operator==(const TorusLattice&, const TorusLattice&) = default;
};

[[nodiscard]] inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

[[nodiscard]] inline TorusLattice make_lattice(int dim, std::size_t modes_per_axis,
                                               std::array<double, 2> period_scale) {
  if (dim != 1 && dim != 2) throw LatticeError("lattice dimension must be 1 or 2");
  if (!is_power_of_two(modes_per_axis) || modes_per_axis < 8) {
    throw LatticeError("modes_per_axis must be a power of two >= 8, got " +
                       std::to_string(modes_per_axis));
  }
  for (int a = 0; a < dim; ++a) {
    if (!(period_scale[a] > 0.0) || !std::isfinite(period_scale[a])) {
      throw LatticeError("period_scale must be positive and finite");
    }
  }
  if (dim == 1) period_scale[1] = 1.0;
  return TorusLattice{dim, modes_per_axis, period_scale};
}

[[nodiscard]] inline TorusLattice make_lattice(int dim, std::size_t modes_per_axis,
                                               double period_scale = 1.0) {
  return make_lattice(dim, modes_per_axis, {period_scale, period_scale});
}

}  // namespace shorttime
