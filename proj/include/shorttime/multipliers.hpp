#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "shorttime/errors.hpp"
#include "shorttime/field.hpp"
#include "shorttime/projector.hpp"

namespace shorttime {

// c(k) -> i (k_axis / scale) c(k)
[[nodiscard]] inline FourierField derivative(const FourierField& field, int axis) {
  const TorusLattice& lat = field.lattice();
  if (axis < 0 || axis >= lat.dim) throw LatticeError("derivative axis out of range");
  std::vector<cplx> c = field.coeff_vector();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double xi = lat.frequency(i)[axis];
    c[i] = cplx{-xi * c[i].imag(), xi * c[i].real()};
  }
  return FourierField(lat, std::move(c), field.real_symmetric(), true);
}

// c(k) -> -i sgn(k) c(k), sgn(0) = 0.
[[nodiscard]] inline FourierField hilbert_transform(const FourierField& field) {
  const TorusLattice& lat = field.lattice();
  if (lat.dim != 1) throw LatticeError("Hilbert transform is defined on 1-D lattices only");
  std::vector<cplx> c = field.coeff_vector();
  for (std::size_t i = 0; i < c.size(); ++i) {
    const long k = lat.mode(i)[0];
    if (k > 0) {
      c[i] = cplx{c[i].imag(), -c[i].real()};
    } else if (k < 0) {
      c[i] = cplx{-c[i].imag(), c[i].real()};
    } else {
      c[i] = cplx{0.0, 0.0};
    }
  }
  return FourierField(lat, std::move(c), field.real_symmetric(), true);
}

// Pointwise product restricted to mode pairs whose moduli differ by more
// than lambda: sum over | |xi1| - |xi2| | > lambda of c1(k1) c2(k2) at k1+k2.
// Direct O(M^2) convolution; a contribution landing outside the lattice is
// an AliasingError rather than being wrapped.
[[nodiscard]] inline FourierField separated_product(const FourierField& u1, const FourierField& u2,
                                                    double lambda) {
  FourierField::check_same(u1, u2);
  const TorusLattice& lat = u1.lattice();
  if (lat.dim != 1) throw LatticeError("separated_product is implemented for 1-D lattices");
  if (!(lambda >= 0.0)) throw BandError("separation threshold must be nonnegative");
  std::vector<std::size_t> s1;
  std::vector<std::size_t> s2;
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (u1[i] != cplx{}) s1.push_back(i);
    if (u2[i] != cplx{}) s2.push_back(i);
  }
  std::vector<cplx> out(lat.size());
  for (std::size_t i : s1) {
    const long k1 = lat.mode(i)[0];
    const double m1 = std::abs(lat.frequency(i)[0]);
    for (std::size_t j : s2) {
      const double m2 = std::abs(lat.frequency(j)[0]);
      if (!(std::abs(m1 - m2) > lambda)) continue;
      const Mode k{k1 + lat.mode(j)[0], 0};
      if (!lat.contains(k)) {
        throw AliasingError("separated product reaches mode " + std::to_string(k[0]) +
                            " beyond Nyquist " + std::to_string(lat.nyquist()));
      }
      out[lat.flat_index(k)] += u1[i] * u2[j];
    }
  }
  return FourierField(lat, std::move(out), u1.real_symmetric() && u2.real_symmetric(), false);
}

// splitmix64 finalizer; child seeds are derived by counter so parallel
// consumers get the same streams regardless of scheduling.
[[nodiscard]] inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Standard complex Gaussian coefficients on the projector's support
// (weighted by its symbol), optionally Hermitian-symmetrized and mean-free,
// normalized to unit L2 norm.
[[nodiscard]] inline FourierField random_field(const TorusLattice& lattice,
                                               const BandProjector& projector, std::uint64_t seed,
                                               bool real_symmetric, bool mean_zero) {
  projector.check(lattice);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<cplx> c(lattice.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const double s = projector.symbol(lattice, i);
    if (s == 0.0) continue;
    const double re = normal(rng);
    const double im = normal(rng);
    c[i] = s * cplx{re, im};
  }
  FourierField f(lattice, std::move(c), real_symmetric, mean_zero);
  const double nrm = f.norm();
  if (nrm == 0.0) throw BandError("random_field: band has no admissible modes");
  return f.scaled(1.0 / nrm);
}

}  // namespace shorttime
