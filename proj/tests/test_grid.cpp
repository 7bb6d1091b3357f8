#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bornholo/grid.hpp"
#include "test_support.hpp"

using namespace bornholo;
using bornholo::testing::small_params;

TEST_CASE("reference optics are accepted and give the medium wavelength") {
  const PhysicalGrid g = make_grid(small_params(8, 8, 2));
  CHECK(g.lambda_medium() == doctest::Approx(473.7e-9).epsilon(1e-4));
  CHECK(g.k() == doctest::Approx(2 * M_PI / g.lambda_medium()));
  // 3.45 um camera pixel behind a 20x objective.
  CHECK(3.45e-6 / 20 == doctest::Approx(g.dx()).epsilon(1e-12));
}

TEST_CASE("lateral pitch above lambda_medium/2 is rejected") {
  GridParams p = small_params(8, 8, 2);
  p.dx = 300e-9;
  CHECK_THROWS_AS(make_grid(p), SamplingViolation);
  p.dx = 172.5e-9;
  p.dy = 236.9e-9;
  CHECK_THROWS_AS(make_grid(p), SamplingViolation);
  p.dy = 236.8e-9; // just below 473.68/2
  CHECK_NOTHROW(make_grid(p));
}

TEST_CASE("degenerate dimensions are rejected") {
  GridParams p = small_params(0, 8, 2);
  CHECK_THROWS_AS(make_grid(p), NonPositiveDimension);
  p = small_params(8, 8, 2);
  p.slice_spacing = 0;
  CHECK_THROWS_AS(make_grid(p), NonPositiveDimension);
  p = small_params(8, 8, 2);
  p.lambda_vacuum = -1;
  CHECK_THROWS_AS(make_grid(p), NonPositiveDimension);
}

TEST_CASE("axial resolution") {
  const PhysicalGrid g = make_grid(small_params(4, 4, 1));
  CHECK(axial_resolution(g) == doctest::Approx(5.67389350359e-6).epsilon(1e-9));
  CHECK(std::abs(axial_resolution(g) - 5.7e-6) <= 0.05e-6);
  CHECK(axial_resolution(473.7e-9, 1.0) == doctest::Approx(473.7e-9));
  CHECK_THROWS_AS(axial_resolution(473.7e-9, 1e-7), InvalidNA);
  CHECK_THROWS_AS(axial_resolution(473.7e-9, 1.2), InvalidNA);
}

TEST_CASE("incident plane wave has unit modulus and hologram-plane phase reference") {
  const PhysicalGrid g = make_grid(small_params(6, 5, 4, 1.3e-6, 0.7e-6));
  const InternalField u = incident_plane_wave(g);
  CHECK(u.order_k == 1);
  for (const cplx& v : u.values.span()) CHECK(std::abs(std::abs(v) - 1) < 1e-12);
  CHECK(incident_at_depth(g, 0.0) == cplx(1, 0));
  const cplx full_turn = incident_at_depth(g, g.lambda_medium());
  CHECK(std::abs(full_turn - cplx(1, 0)) < 1e-12);
  // Constant over each slice, phase advancing toward the hologram.
  CHECK(u.values(0, 0, 2) == u.values(5, 4, 2));
  CHECK(std::arg(u.values(0, 0, 0) / incident_at_depth(g, g.z0())) == doctest::Approx(0));
}

TEST_CASE("contrast from refractive index") {
  const PhysicalGrid g = make_grid(small_params(4, 4, 1));
  CHECK(contrast_from_index(1.33, g) == 0.0);
  // pi (n^2 - n_m^2) / lambda^2 evaluated with 30-digit arithmetic.
  CHECK(contrast_from_index(1.34, g) == doctest::Approx(211339188336.728343).epsilon(1e-13));
  CHECK(contrast_from_index(1.52, g) == doctest::Approx(4286148707278.591682).epsilon(1e-13));
  double prev = -1;
  for (double n = 1.33; n < 1.6; n += 0.01) {
    const double c = contrast_from_index(n, g);
    CHECK(c > prev);
    prev = c;
  }
}
