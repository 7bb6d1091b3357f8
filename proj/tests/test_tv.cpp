#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <random>

#include "bornholo/tv.hpp"

using namespace bornholo;

namespace {

RealVolume random_volume(std::size_t nx, std::size_t ny, std::size_t nz, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.3, 1);
  RealVolume v(nx, ny, nz);
  for (double& x : v.span()) x = n(rng);
  return v;
}

double objective(const RealVolume& x, const RealVolume& g, double thr, const TvOptions& opt) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) s += 0.5 * (x[i] - g[i]) * (x[i] - g[i]);
  return s + thr * tv_norm(x, opt);
}

double dist(const RealVolume& a, const RealVolume& b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

} // namespace

TEST_CASE("tv norm of simple volumes") {
  RealVolume step(4, 3, 2);
  for (std::size_t z = 0; z < 2; ++z)
    for (std::size_t y = 0; y < 3; ++y) step(2, y, z) = step(3, y, z) = 1.0;
  // One unit jump per row: 3 rows x 2 slices.
  CHECK(tv_norm(step) == doctest::Approx(6.0));
  CHECK(tv_norm(step, {false, 1.0}) == doctest::Approx(6.0));

  RealVolume axial(2, 2, 2);
  for (std::size_t y = 0; y < 2; ++y)
    for (std::size_t x = 0; x < 2; ++x) axial(x, y, 1) = 1.0;
  CHECK(tv_norm(axial, {true, 0.5}) == doctest::Approx(2.0));
  CHECK(tv_norm(RealVolume(5, 5, 5, 3.0)) == 0.0);

  RealVolume corner(2, 2, 1);
  corner(0, 0, 0) = 1.0;
  CHECK(tv_norm(corner, {true, 1.0}) == doctest::Approx(std::sqrt(2.0)));
  CHECK(tv_norm(corner, {false, 1.0}) == doctest::Approx(2.0));
}

TEST_CASE("zero threshold is the projection onto the constraint set") {
  std::mt19937_64 rng(1);
  const RealVolume g = random_volume(6, 5, 3, rng);
  const RealVolume p = tv_prox(g, 0.0, true, 10);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(p[i] == std::max(g[i], 0.0));
  CHECK(tv_prox(g, 0.0, false, 10).values() == g.values());
  CHECK_THROWS(tv_prox(g, -1.0, true, 10));
}

TEST_CASE("constant nonnegative input is a fixed point") {
  const RealVolume g(7, 4, 3, 0.8);
  for (double thr : {0.01, 1.0, 100.0}) {
    CHECK(tv_prox(g, thr, true, 10).values() == g.values());
    CHECK(tv_prox(g, thr, false, 25, {false, 2.0}).values() == g.values());
  }
}

TEST_CASE("prox objective converges to a long-run reference") {
  std::mt19937_64 rng(2);
  const RealVolume g = random_volume(8, 8, 2, rng);
  for (bool iso : {true, false}) {
    const TvOptions opt{iso, 1.0};
    const double ref = objective(tv_prox(g, 0.1, true, 10000, opt), g, 0.1, opt);
    const double got = objective(tv_prox(g, 0.1, true, 1000, opt), g, 0.1, opt);
    CHECK(std::abs(got - ref) <= 1e-6);
    // The prox beats its input and the plain projection.
    RealVolume proj = g;
    for (double& v : proj.span()) v = std::max(v, 0.0);
    CHECK(got <= objective(proj, g, 0.1, opt));
  }
}

TEST_CASE("prox is non-expansive and respects nonnegativity") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const RealVolume a = random_volume(6, 6, 3, rng), b = random_volume(6, 6, 3, rng);
    const RealVolume pa = tv_prox(a, 0.2, true, 200), pb = tv_prox(b, 0.2, true, 200);
    CHECK(dist(pa, pb) <= dist(a, b) + 1e-8);
    for (double v : pa.span()) REQUIRE(v >= 0.0);
  }
}

TEST_CASE("prox reduces total variation") {
  std::mt19937_64 rng(4);
  const RealVolume g = random_volume(10, 10, 4, rng);
  const RealVolume p = tv_prox(g, 0.5, false, 50);
  CHECK(tv_norm(p) < tv_norm(g));
  // Without the constraint the prox preserves the mean.
  double mg = 0, mp = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    mg += g[i];
    mp += p[i];
  }
  CHECK(mp == doctest::Approx(mg).epsilon(1e-10));
}
