#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bornholo/propagation.hpp"
#include "oracle/dense_oracle.hpp"
#include "test_support.hpp"

using namespace bornholo;
using namespace bornholo::testing;

namespace {

std::vector<cplx> flat(const ComplexVolume& v) { return v.values(); }
std::vector<cplx> flat(const ComplexPlane& p) { return p.values(); }

std::vector<cplx> dense_H_adjoint(const oracle::DenseOperators& d, const std::vector<cplx>& y) {
  std::vector<cplx> out(d.cols);
  for (std::size_t j = 0; j < d.cols; ++j) {
    cplx s = 0;
    for (std::size_t i = 0; i < d.rows_H; ++i) s += std::conj(d.H[i * d.cols + j]) * y[i];
    out[j] = s;
  }
  return out;
}

} // namespace

TEST_CASE("kernel set covers every slice and hologram offset") {
  const PhysicalGrid g = small_grid(32, 32, 4);
  const PropagationKernels k = build_kernels(g);
  CHECK(k.intra_offset_count() == 7);
  CHECK(k.hologram_offset_count() == 4);
  CHECK(k.pad_nx() == 64);
  CHECK(k.pad_ny() == 64);
  for (long d = -3; d <= 3; ++d) CHECK(k.intra(d).size() == k.pad_size());
  CHECK_THROWS_AS(k.intra(4), DimensionMismatch);
  const auto a = k.intra(2), b = k.intra(-2);
  for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
  // Excluded same-slice kernel is identically zero.
  for (const cplx& v : k.intra(0)) REQUIRE(v == cplx(0, 0));
  const PropagationKernels kr = build_kernels(g, SameSlicePolicy::regularized);
  CHECK(norm2(kr.intra(0)) > 0);
  CHECK(kr.singular_sample_radius() == doctest::Approx(0.6203504909 * 172.5e-9).epsilon(1e-9));
}

TEST_CASE("Green sample is symmetric and regularized at the origin") {
  const PhysicalGrid g = small_grid(8, 8, 2);
  CHECK(green_sample(g, 3, -2, 4e-6) == green_sample(g, -3, 2, -4e-6));
  const double d = singular_radius(g);
  const cplx expect = g.voxel_volume() * std::exp(cplx(0, g.k() * d)) / d;
  CHECK(std::abs(green_sample(g, 0, 0, 0.0) - expect) < 1e-15 * std::abs(expect));
}

TEST_CASE("point impulse propagated by ten wavelengths matches direct summation") {
  for (auto policy : {SameSlicePolicy::exclude, SameSlicePolicy::regularized}) {
    const PhysicalGrid probe = small_grid(4, 4, 1);
    const double dz = 10 * probe.lambda_medium();
    const PhysicalGrid g = small_grid(24, 20, 2, dz, 2e-6);
    const PropagationKernels k = build_kernels(g, policy);
    ComplexVolume src = g.zero_field();
    const std::size_t cx = 12, cy = 10;
    src(cx, cy, 1) = 1.0;
    const ComplexVolume out = apply_G(k, src, GMode::forward_only);
    double num = 0, den = 0;
    for (std::size_t y = 0; y < g.ny(); ++y)
      for (std::size_t x = 0; x < g.nx(); ++x) {
        const double rx = (double(x) - double(cx)) * g.dx(), ry = (double(y) - double(cy)) * g.dy();
        const double r = std::sqrt(rx * rx + ry * ry + dz * dz);
        const cplx h = g.voxel_volume() * std::exp(cplx(0, g.k() * r)) / r;
        num += std::norm(out(x, y, 0) - h);
        den += std::norm(h);
        REQUIRE(out(x, y, 1) == cplx(0, 0)); // nothing flows backward in forward_only
      }
    CHECK(std::sqrt(num / den) <= 1e-10);
  }
}

TEST_CASE("apply_H matches the dense oracle and is linear") {
  const PhysicalGrid g = small_grid(8, 6, 3);
  const PropagationKernels k = build_kernels(g);
  const auto d = oracle::build_dense(g);
  std::mt19937_64 rng(11);

  CHECK(norm2(apply_H(k, g.zero_field()).span()) == 0.0);

  ComplexVolume one = g.zero_field();
  one(0, 0, 0) = 1.0;
  const ComplexPlane e1 = apply_H(k, one);
  double num = 0, den = 0;
  for (std::size_t y = 0; y < g.ny(); ++y)
    for (std::size_t x = 0; x < g.nx(); ++x) {
      const double rx = double(x) * g.dx(), ry = double(y) * g.dy(), rz = -5e-6;
      const double r = std::sqrt(rx * rx + ry * ry + rz * rz);
      const cplx h = g.voxel_volume() * std::exp(cplx(0, g.k() * r)) / r;
      num += std::norm(e1(x, y) - h);
      den += std::norm(h);
    }
  CHECK(std::sqrt(num / den) <= 1e-10);

  const ComplexVolume x = random_field(g, rng);
  const auto fast = flat(apply_H(k, x));
  const auto slow = oracle::dense_H(d, flat(x));
  CHECK(rel_err<cplx>(fast, slow) <= 1e-10);

  ComplexVolume two = g.zero_field();
  two(3, 2, 2) = cplx(0.5, -2);
  ComplexVolume both = one;
  both(3, 2, 2) = cplx(0.5, -2);
  const ComplexPlane e2 = apply_H(k, two), e12 = apply_H(k, both);
  for (std::size_t i = 0; i < e12.size(); ++i)
    REQUIRE(std::abs(e12[i] - e1[i] - e2[i]) <= 1e-12 * (std::abs(e12[i]) + 1e-30));
}

TEST_CASE("apply_G matches the dense oracle in every mode and policy") {
  std::mt19937_64 rng(5);
  for (auto policy : {SameSlicePolicy::exclude, SameSlicePolicy::regularized}) {
    const PhysicalGrid g = small_grid(16, 16, 4, 2e-6);
    const PropagationKernels k = build_kernels(g, policy);
    const auto d = oracle::build_dense(g, policy);
    const ComplexVolume x = random_field(g, rng);
    for (auto mode : {GMode::full, GMode::forward_only, GMode::backward_only}) {
      CAPTURE(to_string(mode));
      CAPTURE(to_string(policy));
      const auto fast = flat(apply_G(k, x, mode));
      const auto slow = oracle::dense_G(d, flat(x), mode);
      CHECK(rel_err<cplx>(fast, slow) <= 1e-8);
    }
  }
}

TEST_CASE("dense oracle shapes and block symmetry") {
  const PhysicalGrid g = small_grid(4, 4, 2);
  const auto d = oracle::build_dense(g, SameSlicePolicy::regularized);
  CHECK(d.rows_H == 16);
  CHECK(d.cols == 32);
  CHECK(d.H.size() == 16 * 32);
  CHECK(d.G.size() == 32 * 32);
  // Block (0,1) equals block (1,0) because h depends on |r| only.
  for (std::size_t i = 0; i < 16; ++i)
    for (std::size_t j = 0; j < 16; ++j)
      REQUIRE(d.G[i * 32 + (16 + j)] == d.G[(16 + i) * 32 + j]);
  CHECK_THROWS_AS(oracle::build_dense(small_grid(32, 32, 8)), GridTooLarge);
}

TEST_CASE("G decomposes into forward and backward parts; nz = 1 has no forward part") {
  std::mt19937_64 rng(9);
  const PhysicalGrid g = small_grid(12, 10, 5);
  const PropagationKernels k = build_kernels(g, SameSlicePolicy::regularized);
  const ComplexVolume x = random_field(g, rng);
  const ComplexVolume full = apply_G(k, x, GMode::full);
  const ComplexVolume fw = apply_G(k, x, GMode::forward_only);
  const ComplexVolume bw = apply_G(k, x, GMode::backward_only);
  for (std::size_t i = 0; i < full.size(); ++i)
    REQUIRE(std::abs(full[i] - fw[i] - bw[i]) <= 1e-12 * std::abs(full[i]) + 1e-30);

  const PhysicalGrid one = small_grid(8, 8, 1);
  const PropagationKernels k1 = build_kernels(one, SameSlicePolicy::regularized);
  const ComplexVolume y = apply_G(k1, random_field(one, rng), GMode::forward_only);
  CHECK(norm2(y.span()) == 0.0);
  CHECK(norm2(apply_G(k1, one.zero_field()).span()) == 0.0);
}

TEST_CASE("adjoint identities") {
  std::mt19937_64 rng(21);
  const PhysicalGrid g = small_grid(16, 12, 4);
  for (auto policy : {SameSlicePolicy::exclude, SameSlicePolicy::regularized}) {
    const PropagationKernels k = build_kernels(g, policy);
    for (int trial = 0; trial < 10; ++trial) {
      const ComplexVolume x = random_field(g, rng), y = random_field(g, rng);
      const ComplexPlane p = random_plane(g, rng);
      const cplx lhs = dot(apply_H(k, x).span(), p.span());
      const cplx rhs = dot(x.span(), apply_H_adjoint(k, p).span());
      CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
      for (auto mode : {GMode::full, GMode::forward_only, GMode::backward_only}) {
        const cplx a = dot(apply_G(k, x, mode).span(), y.span());
        const cplx b = dot(x.span(), apply_G_adjoint(k, y, mode).span());
        CHECK(std::abs(a - b) <= 1e-10 * std::abs(a));
      }
    }
  }
}

TEST_CASE("H adjoint of a centered delta matches the dense oracle") {
  const PhysicalGrid g = small_grid(9, 9, 3);
  const PropagationKernels k = build_kernels(g);
  const auto d = oracle::build_dense(g);
  ComplexPlane delta(g.nx(), g.ny());
  delta(4, 4) = 1.0;
  const auto fast = flat(apply_H_adjoint(k, delta));
  const auto slow = dense_H_adjoint(d, flat(delta));
  CHECK(rel_err<cplx>(fast, slow) <= 1e-10);
}

TEST_CASE("operators are homogeneous and check shapes") {
  std::mt19937_64 rng(3);
  const PhysicalGrid g = small_grid(8, 8, 3);
  const PropagationKernels k = build_kernels(g);
  const ComplexVolume x = random_field(g, rng);
  const cplx alpha(1.7, -0.3);
  ComplexVolume ax = x;
  for (cplx& v : ax.span()) v *= alpha;
  const ComplexVolume gx = apply_G(k, x), gax = apply_G(k, ax);
  for (std::size_t i = 0; i < gx.size(); ++i)
    REQUIRE(std::abs(gax[i] - alpha * gx[i]) <= 1e-13 * std::abs(gax[i]) + 1e-30);
  const ComplexPlane hx = apply_H(k, x), hax = apply_H(k, ax);
  for (std::size_t i = 0; i < hx.size(); ++i)
    REQUIRE(std::abs(hax[i] - alpha * hx[i]) <= 1e-13 * std::abs(hax[i]) + 1e-30);

  const ComplexVolume wrong(8, 8, 2);
  CHECK_THROWS_AS(apply_G(k, wrong), DimensionMismatch);
  CHECK_THROWS_AS(apply_H(k, wrong), DimensionMismatch);
  CHECK_THROWS_AS(apply_G_adjoint(k, wrong), DimensionMismatch);
  CHECK_THROWS_AS(apply_H_adjoint(k, ComplexPlane(7, 8)), DimensionMismatch);
}

TEST_CASE("NA low-pass keeps DC and removes the Nyquist checkerboard") {
  const PhysicalGrid g = small_grid(16, 16, 1);
  ComplexPlane flat_field(16, 16, cplx(2, 0));
  const ComplexPlane kept = lowpass_to_na(g, flat_field);
  for (const cplx& v : kept.span()) REQUIRE(std::abs(v - cplx(2, 0)) < 1e-12);
  ComplexPlane checker(16, 16);
  for (std::size_t y = 0; y < 16; ++y)
    for (std::size_t x = 0; x < 16; ++x) checker(x, y) = ((x + y) % 2) ? 1.0 : -1.0;
  CHECK(norm2(lowpass_to_na(g, checker).span()) < 1e-12);
}
