#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>

#include "shorttime/multipliers.hpp"
#include "shorttime/projector.hpp"
#include "shorttime/snapshot.hpp"

using namespace shorttime;
using Catch::Approx;

namespace {

FourierField random_coeffs(const TorusLattice& lat, unsigned seed, bool real = false, bool mean_zero = false) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<cplx> c(lat.size());
  for (auto& v : c) v = {g(rng), g(rng)};
  return FourierField(lat, std::move(c), real, mean_zero);
}

double max_diff(const FourierField& a, const FourierField& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.lattice().size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace

TEST_CASE("lattice construction validates its arguments") {
  CHECK_NOTHROW(make_lattice(1, 8));
  CHECK_THROWS_AS(make_lattice(1, 12), LatticeError);
  CHECK_THROWS_AS(make_lattice(1, 4), LatticeError);
  CHECK_THROWS_AS(make_lattice(3, 16), LatticeError);
  CHECK_THROWS_AS(make_lattice(2, 16, 0.0), LatticeError);
  CHECK_THROWS_AS(make_lattice(2, 16, -1.0), LatticeError);

  const auto lat = make_lattice(2, 16, 2.0);
  CHECK(lat.size() == 256);
  CHECK(lat.flat_index({0, 0}) == 0);
  CHECK(lat.mode(lat.flat_index({-8, 7})) == Mode{-8, 7});
  CHECK(lat.frequency(lat.flat_index({3, -4}))[0] == 1.5);
  CHECK(lat.frequency(lat.flat_index({3, -4}))[1] == -2.0);
  CHECK_THROWS_AS(lat.flat_index({8, 0}), LatticeError);
}

TEST_CASE("real-symmetric and mean-zero flags are enforced bit for bit") {
  const auto lat = make_lattice(2, 16);
  const auto f = random_coeffs(lat, 1, true, true);
  CHECK(f.at({0, 0}) == cplx{});
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (lat.on_nyquist(i)) {
      CHECK(f[i] == cplx{});
    } else {
      CHECK(f[lat.negated(i)] == std::conj(f[i]));
    }
  }
  CHECK(f.hermitian_defect() == 0.0);
}

TEST_CASE("synthesis matches a direct trigonometric sum") {
  for (int dim : {1, 2}) {
    const auto lat = make_lattice(dim, 8, 1.5);
    const auto f = random_coeffs(lat, 7);
    const std::size_t n = 12;  // padded grid
    const auto s = synthesize(f, n);
    double err = 0.0;
    for (std::size_t p = 0; p < s.values.size(); ++p) {
      const std::size_t j0 = dim == 1 ? p : p / n;
      const std::size_t j1 = dim == 1 ? 0 : p % n;
      cplx direct{};
      for (std::size_t i = 0; i < lat.size(); ++i) {
        const Mode k = lat.mode(i);
        const double arg = 2.0 * std::numbers::pi * (double(k[0] * long(j0)) + double(k[1] * long(j1))) / double(n);
        direct += f[i] * std::polar(1.0, arg);
      }
      err = std::max(err, std::abs(direct - s.values[p]));
    }
    CHECK(err < 1e-12);
  }
}

TEST_CASE("transform round trip and Plancherel within 1e-12") {
  for (int dim : {1, 2}) {
    const auto lat = make_lattice(dim, 32);
    const auto f = random_coeffs(lat, 3).scaled(1.0 / std::sqrt(double(lat.size())));
    const auto s = synthesize(f);
    const auto back = analyze(s, lat);
    CHECK(max_diff(f, back) < 1e-12);
    CHECK(std::abs(s.mean_square() - f.norm_sq()) < 1e-12);
  }
  SECTION("single modes have unit norm") {
    const auto lat = make_lattice(1, 16);
    const auto e = FourierField::single_mode(lat, {3, 0});
    CHECK(e.norm() == 1.0);
    CHECK(synthesize(e).mean_square() == Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("sharp dyadic projectors") {
  const auto lat = make_lattice(2, 32);
  const auto f = random_coeffs(lat, 11);
  SECTION("band 1 keeps |k| in [0, 2) and band N keeps [N, 2N)") {
    for (long n : {1L, 2L, 4L, 8L}) {
      const auto p = project(f, BandProjector::sharp(n));
      for (std::size_t i = 0; i < lat.size(); ++i) {
        const double r = lat.modulus(i);
        const bool in = n == 1 ? r < 2.0 : (r >= double(n) && r < 2.0 * double(n));
        CHECK((p[i] != cplx{}) == in);
      }
    }
  }
  SECTION("partition of unity is exact") {
    std::vector<cplx> sum(lat.size());
    for (long n : dyadic_bands(lat)) {
      const auto p = project(f, BandProjector::sharp(n));
      for (std::size_t i = 0; i < lat.size(); ++i) sum[i] += p[i];
    }
    for (std::size_t i = 0; i < lat.size(); ++i) CHECK(sum[i] == f[i]);
  }
  SECTION("idempotent") {
    const auto p = project(f, BandProjector::sharp(4));
    const auto pp = project(p, BandProjector::sharp(4));
    CHECK(max_diff(p, pp) == 0.0);
  }
  SECTION("bands past the lattice are rejected") {
    CHECK_THROWS_AS(project(f, BandProjector::sharp(64)), BandError);
    CHECK_THROWS_AS(BandProjector::sharp(3), BandError);
  }
}

TEST_CASE("smooth dyadic symbols form a partition of unity") {
  for (double r = 0.0; r < 300.0; r += 0.37) {
    double s = 0.0;
    for (long n = 1; n <= 512; n *= 2) s += smooth_dyadic_symbol(n, r);
    CHECK(std::abs(s - 1.0) < 1e-12);
  }
  CHECK(smooth_dyadic_symbol(8, 4.0) == 0.0);
  CHECK(smooth_dyadic_symbol(8, 16.0) == 0.0);
  CHECK(smooth_dyadic_symbol(8, 8.0) == 1.0);
  const auto lat = make_lattice(2, 32);
  const auto f = random_coeffs(lat, 5, true);
  std::vector<cplx> sum(lat.size());
  for (long n : dyadic_bands(lat)) {
    const auto p = project(f, BandProjector::smooth(n));
    for (std::size_t i = 0; i < lat.size(); ++i) sum[i] += p[i];
  }
  for (std::size_t i = 0; i < lat.size(); ++i) CHECK(std::abs(sum[i] - f[i]) < 1e-12);
}

TEST_CASE("Hilbert transform and derivative fixtures") {
  const auto lat = make_lattice(1, 64);
  // cos(3x) and sin(3x) through their coefficients
  const auto c3 = FourierField(lat, [&] {
    std::vector<cplx> c(lat.size());
    c[lat.flat_index({3, 0})] = 0.5;
    c[lat.flat_index({-3, 0})] = 0.5;
    return c;
  }(), true);
  const auto s3 = FourierField(lat, [&] {
    std::vector<cplx> c(lat.size());
    c[lat.flat_index({3, 0})] = cplx{0.0, -0.5};
    c[lat.flat_index({-3, 0})] = cplx{0.0, 0.5};
    return c;
  }(), true);
  CHECK(max_diff(hilbert_transform(c3), s3) < 1e-12);
  CHECK(max_diff(hilbert_transform(s3), c3.scaled(-1.0)) < 1e-12);
  CHECK(max_diff(derivative(s3, 0), c3.scaled(3.0)) < 1e-12);

  const auto f = random_coeffs(lat, 9, true);
  const auto hh = hilbert_transform(hilbert_transform(f));
  std::vector<cplx> expect = f.scaled(-1.0).coeff_vector();
  expect[0] = 0.0;
  CHECK(max_diff(hh, FourierField(lat, expect)) < 1e-12);
  CHECK(hilbert_transform(f).hermitian_defect() <= 1e-12);

  // physical-space check of the transform on a grid: H cos = sin
  const auto samples = synthesize(hilbert_transform(c3));
  for (std::size_t j = 0; j < samples.n; ++j) {
    const double x = 2.0 * std::numbers::pi * double(j) / double(samples.n);
    CHECK(std::abs(samples.values[j] - std::sin(3.0 * x)) < 1e-12);
  }
  CHECK_THROWS_AS(hilbert_transform(FourierField::zeros(make_lattice(2, 8))), LatticeError);
}

TEST_CASE("slice_band tiles the band exactly") {
  const auto lat1 = make_lattice(1, 64);
  CHECK(slice_band(BandProjector::sharp(16), 0.25, lat1).size() == 8);
  CHECK(slice_band(BandProjector::sharp(8), 0.125, lat1).size() == 16);
  CHECK_THROWS_AS(slice_band(BandProjector::sharp(4), 0.125, lat1), BandError);
  for (const auto& lat : {lat1, make_lattice(2, 32)}) {
    const long n = lat.dim == 1 ? 16 : 8;
    const auto band = BandProjector::sharp(n);
    const auto pieces = slice_band(band, 0.25, lat);
    for (std::size_t i = 0; i < lat.size(); ++i) {
      int hits = 0;
      for (const auto& p : pieces) hits += p.symbol(lat, i) != 0.0;
      CHECK(hits == static_cast<int>(band.symbol(lat, i)));
    }
  }
}

TEST_CASE("separated product against a brute-force double sum") {
  const auto lat = make_lattice(1, 16);
  std::vector<cplx> a(lat.size());
  std::vector<cplx> b(lat.size());
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  for (long k = -3; k <= 3; ++k) {
    a[lat.flat_index({k, 0})] = {g(rng), g(rng)};
    b[lat.flat_index({k, 0})] = {g(rng), g(rng)};
  }
  const FourierField u1(lat, a);
  const FourierField u2(lat, b);
  for (double lambda : {0.0, 0.5, 1.0, 2.0, 2.5}) {
    const auto p = separated_product(u1, u2, lambda);
    for (long k = -8; k < 8; ++k) {
      cplx expect{};
      for (long k1 = -8; k1 < 8; ++k1) {
        for (long k2 = -8; k2 < 8; ++k2) {
          if (k1 + k2 != k) continue;
          if (!(std::abs(double(std::abs(k1) - std::abs(k2))) > lambda)) continue;
          expect += u1.at({k1, 0}) * u2.at({k2, 0});
        }
      }
      CHECK(std::abs(p.at({k, 0}) - expect) < 1e-12);
    }
  }
  const auto big = FourierField::single_mode(lat, {6, 0});
  const auto low = FourierField::single_mode(lat, {2, 0});
  CHECK_THROWS_AS(separated_product(big, low, 0.0), AliasingError);
  CHECK(separated_product(FourierField::single_mode(lat, {4, 0}), FourierField::single_mode(lat, {-4, 0}), 1.0)
            .norm() == 0.0);
}

TEST_CASE("random fields are deterministic, normalized and band-limited") {
  const auto lat = make_lattice(2, 32);
  const auto p = BandProjector::sharp(4);
  const auto f = random_field(lat, p, 42, true, true);
  const auto g = random_field(lat, p, 42, true, true);
  CHECK(max_diff(f, g) == 0.0);
  CHECK(std::abs(f.norm() - 1.0) < 1e-14);
  CHECK(f.hermitian_defect() == 0.0);
  for (std::size_t i = 0; i < lat.size(); ++i) {
    if (f[i] != cplx{}) CHECK(p.symbol(lat, i) == 1.0);
  }
  CHECK(max_diff(f, random_field(lat, p, 43, true, true)) > 0.0);
  CHECK_THROWS_AS(random_field(lat, BandProjector::sharp(32), 1, true, true), BandError);
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
}

TEST_CASE("field snapshots round-trip exactly") {
  const auto lat = make_lattice(2, 16, 1.25);
  const auto f = random_coeffs(lat, 21, true, true);
  const auto path = std::filesystem::temp_directory_path() / "shorttime_snapshot_test.json";
  write_field(path, f);
  const auto g = read_field(path);
  CHECK(g.lattice() == lat);
  CHECK(g.real_symmetric());
  CHECK(max_diff(f, g) == 0.0);
  std::filesystem::remove(path);
  auto j = field_to_json(f);
  j["coeffs"].erase(0);
  CHECK_THROWS_AS(field_from_json(j), LatticeError);
}
