#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "shorttime/multipliers.hpp"
#include "shorttime/variation.hpp"

using namespace shorttime;

namespace {

template <class V>
SampledPath<V> make_path(std::vector<V> values) {
  SampledPath<V> p;
  for (std::size_t i = 0; i < values.size(); ++i) p.push(double(i), std::move(values[i]));
  return p;
}

// Enumerates every subsequence of at least two samples and sums its
// increments left to right.
template <class V>
double brute_force_vp(const std::vector<V>& v, double p) {
  const std::size_t m = v.size();
  double best = 0.0;
  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    double s = 0.0;
    long prev = -1;
    for (std::size_t i = 0; i < m; ++i) {
      if (!(mask >> i & 1UL)) continue;
      if (prev >= 0) s += std::pow(increment_norm(v[std::size_t(prev)], v[i]), p);
      prev = long(i);
    }
    best = std::max(best, s);
  }
  return std::pow(best, 1.0 / p);
}

template <class V>
double partition_sum(const std::vector<V>& v, const std::vector<std::size_t>& idx, double p) {
  double s = 0.0;
  for (std::size_t k = 1; k < idx.size(); ++k) s += std::pow(increment_norm(v[idx[k - 1]], v[idx[k]]), p);
  return s;
}

FourierField small_field(std::mt19937_64& rng) {
  static const auto lat = make_lattice(1, 8);
  std::normal_distribution<double> g;
  std::vector<cplx> c(lat.size());
  for (long k : {-2L, -1L, 1L, 2L}) c[lat.flat_index({k, 0})] = {g(rng), g(rng)};
  return FourierField(lat, std::move(c));
}

}  // namespace

TEST_CASE("p-variation fixtures") {
  CHECK(v_p_norm(make_path<double>({2.0, 2.0, 2.0}), 2.0) == 0.0);
  CHECK(v_p_norm(make_path<double>({0.0, 3.0}), 2.0) == 3.0);
  CHECK(v_p_norm(make_path<double>({0.0, 1.0, 0.0}), 2.0) == std::sqrt(2.0));
  CHECK(v_p_norm(make_path<double>({0.0, 1.0, 0.0}), 1.0) == 2.0);
  CHECK_THROWS_AS(v_p_norm(make_path<double>({1.0}), 2.0), SamplingError);
  CHECK_THROWS_AS(v_p_norm(make_path<double>({1.0, 2.0}), 0.5), SamplingError);
  SampledPath<double> bad;
  bad.push(0.0, 1.0);
  CHECK_THROWS_AS(bad.push(0.0, 2.0), SamplingError);
}

TEST_CASE("dynamic program equals exhaustive enumeration exactly") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> len(2, 12);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pd(1.0, 4.0);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> v(std::size_t(len(rng)));
    for (auto& x : v) x = g(rng);
    const double p = trial % 4 == 0 ? 2.0 : pd(rng);
    CHECK(v_p_norm(make_path(v), p) == brute_force_vp(v, p));
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FourierField> v;
    const int m = len(rng);
    for (int i = 0; i < m; ++i) v.push_back(small_field(rng));
    const double p = trial % 2 ? 2.0 : pd(rng);
    CHECK(v_p_norm(make_path(v), p) == brute_force_vp(v, p));
  }
}

TEST_CASE("refinement: partition sums grow for p = 1 and can shrink for p = 2") {
  const std::vector<double> v{0.0, 1.0, 2.0};
  // p = 1: the refined partition dominates (triangle inequality) and attains V^1
  CHECK(partition_sum(v, {0, 1, 2}, 1.0) >= partition_sum(v, {0, 2}, 1.0));
  CHECK(partition_sum(v, {0, 1, 2}, 1.0) == v_p_norm(make_path(v), 1.0));
  // p = 2: refining [0, 2] into [0, 1, 2] halves the sum
  CHECK(partition_sum(v, {0, 1, 2}, 2.0) < partition_sum(v, {0, 2}, 2.0));
  CHECK(std::pow(v_p_norm(make_path(v), 2.0), 2) == partition_sum(v, {0, 2}, 2.0));
  // adding samples never lowers the supremum
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<double> fine(11);
  for (auto& x : fine) x = g(rng);
  std::vector<double> coarse;
  for (std::size_t i = 0; i < fine.size(); i += 2) coarse.push_back(fine[i]);
  for (double p : {1.0, 1.5, 2.0, 3.0}) CHECK(v_p_norm(make_path(fine), p) >= v_p_norm(make_path(coarse), p));
}

TEST_CASE("V^q <= V^p for q >= p") {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> pd(1.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v(30);
    for (auto& x : v) x = g(rng);
    const double p = pd(rng);
    const double q = p + pd(rng) - 1.0;
    CHECK(v_p_norm(make_path(v), q) <= v_p_norm(make_path(v), p) * (1 + 1e-15));
  }
}

TEST_CASE("energy ledger") {
  const auto lat = make_lattice(1, 64);
  const auto spec = airy();
  SECTION("one dyad, unit norm, constant in time") {
    const auto u = random_field(lat, BandProjector::sharp(4), 1, true, true);
    const auto led = e_s_norm(make_path<FourierField>({u, u, u}), 1.0);
    CHECK(std::abs(led.total - 16.0) < 1e-12);
    CHECK(std::abs(led.entries.at(4) - 1.0) < 1e-14);
    CHECK(led.entries.at(8) == 0.0);
  }
  SECTION("s = 0 on full-band data returns the squared norm") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<cplx> c(lat.size());
    for (auto& x : c) x = {g(rng), g(rng)};
    const FourierField u(lat, c);
    const auto led = e_s_norm(make_path<FourierField>({u, u}), 0.0);
    CHECK(std::abs(led.total - u.norm_sq()) < 1e-12 * u.norm_sq());
  }
  SECTION("free evolution leaves the ledger unchanged") {
    std::mt19937_64 rng(6);
    std::normal_distribution<double> g;
    std::vector<cplx> c(lat.size());
    for (auto& x : c) x = {g(rng), g(rng)};
    const FourierField u0 = FourierField(lat, c, true, true);
    SampledPath<FourierField> path;
    for (int i = 0; i <= 20; ++i) path.push(0.05 * i, propagate(u0, spec, 0.05 * i));
    const auto led = e_s_norm(path, 1.25);
    const auto led0 = e_s_norm(make_path<FourierField>({u0}), 1.25);
    CHECK(std::abs(led.total - led0.total) < 1e-12 * led0.total);
  }
}

TEST_CASE("shorttime V^2") {
  const auto lat = make_lattice(1, 32);
  const auto spec = airy();
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  std::vector<cplx> c(lat.size());
  for (long k = -7; k <= 7; ++k) c[lat.flat_index({k, 0})] = {g(rng), g(rng)};
  const FourierField u0(lat, c, true, true);
  // windows: delta_N = N^-2, so the path needs >= 3 samples per 1/16 for N = 4
  auto free_path = [&](double T, std::size_t steps) {
    SampledPath<FourierField> p;
    for (std::size_t i = 0; i <= steps; ++i) {
      const double t = T * double(i) / double(steps);
      p.push(t, propagate(u0, spec, t));
    }
    return p;
  };
  SECTION("free evolution reduces to the anchored energy sum") {
    const auto p = free_path(0.25, 256);
    const double s = 0.75;
    const auto r = shorttime_v2(p, spec, s);
    const auto led = e_s_norm(make_path<FourierField>({u0}), s);
    CHECK(std::abs(r.value - std::sqrt(led.total)) < 1e-12 * std::sqrt(led.total));
    CHECK(r.windows.at(4) == 4);
  }
  SECTION("zero path") {
    SampledPath<FourierField> p;
    for (int i = 0; i < 5; ++i) p.push(0.1 * i, FourierField::zeros(lat));
    CHECK(shorttime_v2(p, spec, 1.0).value == 0.0);
  }
  SECTION("sparse sampling is rejected") {
    CHECK_THROWS_AS(shorttime_v2(free_path(0.25, 8), spec, 1.0), SamplingError);
    CHECK_NOTHROW(shorttime_v2(free_path(0.25, 8), spec, 1.0, 2));
  }
  SECTION("one jump: closed form per band") {
    // free wave of a on [0, 1/2), free wave of b = a/2 + (mode 3) afterwards.
    // Twisted band-1 path: 0, A, ..., A, A/2, ..., A/2 in a single window, so
    // the best chain is 0 -> A -> A/2 with sum 1.25 |A|^2. Band 2 windows have
    // length 1/4 and the jump falls on a window edge, so each window is constant.
    const auto a = project(u0, BandProjector::sharp(1)) + project(u0, BandProjector::sharp(2));
    std::vector<cplx> jump(lat.size());
    jump[lat.flat_index({3, 0})] = {0.4, 0.1};
    jump[lat.flat_index({-3, 0})] = {0.4, -0.1};
    const auto b = a.scaled(0.5) + FourierField(lat, jump, true, true);
    SampledPath<FourierField> p;
    for (int i = 0; i <= 32; ++i) {
      const double t = i / 32.0;
      p.push(t, propagate(t < 0.5 ? a : b, spec, t));
    }
    const auto r = shorttime_v2(p, spec, 0.5, 2);
    const double a1 = project(a, BandProjector::sharp(1)).norm_sq();
    const double a2 = project(a, BandProjector::sharp(2)).norm_sq();
    const double b2 = project(b, BandProjector::sharp(2)).norm_sq();
    CHECK(r.windows.at(1) == 1);
    CHECK(r.windows.at(2) == 4);
    CHECK(std::abs(r.per_dyad.at(1) - 1.25 * a1) < 1e-12 * a1);
    CHECK(std::abs(r.per_dyad.at(2) - std::max(a2, b2)) < 1e-12 * b2);
    CHECK(std::abs(r.value - std::sqrt(1.25 * a1 + 2.0 * std::max(a2, b2))) < 1e-12 * r.value);
  }
}

TEST_CASE("path directory round trip") {
  const auto lat = make_lattice(2, 8);
  SampledPath<FourierField> p;
  for (int i = 0; i < 4; ++i) p.push(0.1 * i, random_field(lat, BandProjector::sharp(2), 40 + i, true, true));
  const auto dir = std::filesystem::temp_directory_path() / "shorttime_path_roundtrip";
  std::filesystem::remove_all(dir);
  write_path(dir, p);
  const auto q = read_path(dir);
  REQUIRE(q.size() == p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    CHECK(q.times[i] == p.times[i]);
    CHECK(increment_norm(p.values[i], q.values[i]) == 0.0);
    CHECK(q.values[i].real_symmetric() == p.values[i].real_symmetric());
  }
  std::filesystem::remove(dir / "snap_00002.json");
  CHECK_THROWS(read_path(dir));
  std::filesystem::remove_all(dir);
}
