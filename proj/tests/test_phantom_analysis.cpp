#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bornholo/analysis.hpp"
#include "bornholo/forward.hpp"
#include "bornholo/phantom.hpp"
#include "test_support.hpp"

using namespace bornholo;
using namespace bornholo::testing;

TEST_CASE("particle count and cross-section are inverse") {
  const PhysicalGrid wide = small_grid(512, 512, 1);
  CHECK(particles_for_cross_section(0.1, 0.5e-6, wide) == 993);
  CHECK(geometric_cross_section(993, 0.5e-6, wide) == doctest::Approx(0.1).epsilon(0.01));
  CHECK(std::abs(geometric_cross_section(993, 0.5e-6, wide) - 0.0999818133) < 1e-9);
  CHECK(geometric_cross_section(0, 0.5e-6, wide) == 0.0);
  CHECK(geometric_cross_section(1986, 0.5e-6, wide) ==
        doctest::Approx(2 * geometric_cross_section(993, 0.5e-6, wide)).epsilon(1e-15));
  CHECK(geometric_cross_section(50, 0.5e-6, small_grid(64, 64, 1)) ==
        doctest::Approx(0.3221971829).epsilon(1e-9));
}

TEST_CASE("phantom generation") {
  const PhysicalGrid g = small_grid(64, 64, 6);
  PhantomSpec spec;
  spec.seed = 11;

  SUBCASE("zero particles") {
    spec.n_particles = 0;
    const Phantom p = generate_phantom(spec, g);
    CHECK(p.particles.empty());
    CHECK(norm2(p.f.span()) == 0.0);
  }
  SUBCASE("deterministic under seed") {
    spec.target_Rg = 0.1;
    const Phantom a = generate_phantom(spec, g);
    const Phantom b = generate_phantom(spec, g);
    REQUIRE(a.f.size() == b.f.size());
    for (std::size_t i = 0; i < a.f.size(); ++i) REQUIRE(a.f[i] == b.f[i]);
    spec.seed = 12;
    const Phantom c = generate_phantom(spec, g);
    CHECK(norm2(c.f.span()) != doctest::Approx(0.0));
    bool differs = false;
    for (std::size_t i = 0; i < a.f.size(); ++i) differs = differs || a.f[i] != c.f[i];
    CHECK(differs);
  }
  SUBCASE("achieved cross-section is within one particle of the target") {
    spec.target_Rg = 0.2;
    const Phantom p = generate_phantom(spec, g);
    const double one = geometric_cross_section(1, spec.particle_radius, g);
    CHECK(std::abs(geometric_cross_section(static_cast<long>(p.particles.size()),
                                           spec.particle_radius, g) - 0.2) <= one);
  }
  SUBCASE("geometry invariants") {
    spec.n_particles = 40;
    spec.delta_n = 0.19;
    const Phantom p = generate_phantom(spec, g);
    REQUIRE(p.particles.size() == 40);
    const double edge = (g.nx() - 1) * g.dx();
    for (std::size_t i = 0; i < p.particles.size(); ++i) {
      const Particle& a = p.particles[i];
      CHECK(a.x >= a.radius);
      CHECK(a.x <= edge - a.radius);
      CHECK(a.slice < static_cast<std::size_t>(g.nz()));
      CHECK(a.z == doctest::Approx(g.slice_depth(a.slice)));
      CHECK(a.contrast == doctest::Approx(contrast_from_index(1.52, g)));
      for (std::size_t j = i + 1; j < p.particles.size(); ++j) {
        const Particle& b = p.particles[j];
        if (a.slice == b.slice) CHECK(std::hypot(a.x - b.x, a.y - b.y) >= 2 * a.radius);
      }
    }
    double peak = 0;
    for (double v : p.f.span()) {
      REQUIRE(v >= 0.0);
      peak = std::max(peak, v);
    }
    CHECK(peak <= nominal_peak(0.5e-6, 0.19, g) * (1 + 1e-12));
    CHECK(peak >= 0.9 * nominal_peak(0.5e-6, 0.19, g));
  }
  SUBCASE("impossible packing") {
    spec.n_particles = 2000;
    spec.placement_budget = 50;
    CHECK_THROWS_AS(generate_phantom(spec, g), PackingFailure);
  }
}

TEST_CASE("disk profile follows the sphere chord") {
  const PhysicalGrid g = small_grid(16, 16, 1);
  const double c = 1e12;
  const ParticleSet one{{8 * g.dx(), 8 * g.dy(), g.slice_depth(0), 0, 0.5e-6, c}};
  const RealVolume f = render_particles(one, g);
  CHECK(f(8, 8, 0) == doctest::Approx(c * 1e-6 / g.params().dz_voxel));
  const double rho = 2 * g.dx();
  CHECK(f(10, 8, 0) ==
        doctest::Approx(c * 2 * std::sqrt(0.25e-12 - rho * rho) / g.params().dz_voxel));
  CHECK(f(11, 8, 0) == 0.0); // 3 pitches = 517.5 nm > r
}

TEST_CASE("snr conventions") {
  std::mt19937_64 rng(5);
  const PhysicalGrid g = small_grid(8, 8, 2);
  const RealVolume t = random_potential(g, rng, 1.0);
  CHECK(snr_db(t, t) == kSnrCapDb);
  CHECK(snr_db(g.zero_volume(), t) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(snr_db(t, g.zero_volume()), DegenerateTruth);

  RealVolume noise = random_potential(g, rng, 1.0);
  for (double& v : noise.span()) v -= 0.5;
  const double nn = norm2(noise.span());
  for (double& v : noise.span()) v /= nn;
  double last = 1e9;
  for (double eps : {1e-3, 1e-2, 0.1, 1.0}) {
    RealVolume e = t;
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += eps * noise[i];
    const double s = snr_db(e, t);
    const double tn = norm2(t.span());
    CHECK(s == doctest::Approx(10 * std::log10(tn * tn / (eps * eps))).epsilon(1e-9));
    CHECK(s < last);
    last = s;
    RealVolume es = e, ts = t;
    for (double& v : es.span()) v *= 3.7;
    for (double& v : ts.span()) v *= 3.7;
    CHECK(snr_db(es, ts) == doctest::Approx(s).epsilon(1e-12));
  }
}

TEST_CASE("contrast ratio") {
  CHECK(contrast_ratio(RealPlane(10, 10, 2.5)) == 0.0);
  CHECK_THROWS_AS(contrast_ratio(RealPlane(4, 4, 0.0)), ZeroMeanHologram);
  std::mt19937_64 rng(17);
  std::exponential_distribution<double> ex(1.0);
  RealPlane speckle(1000, 1000);
  for (double& v : speckle.span()) v = ex(rng);
  CHECK(std::abs(contrast_ratio(speckle) - 1.0) <= 0.02);
  RealPlane two(2, 1);
  two[0] = 1;
  two[1] = 3;
  CHECK(contrast_ratio(two) == doctest::Approx(0.5));
}

TEST_CASE("convergence metric") {
  const PhysicalGrid g = small_grid(64, 64, 8, 2.5e-6);
  const PropagationKernels k = build_kernels(g);
  const InternalField uin = incident_plane_wave(g);

  const ConvergenceReport zero = convergence_metric(g.zero_volume(), k, uin, 3);
  REQUIRE(zero.e.size() == 3);
  for (double e : zero.e) CHECK(e == 0.0);
  CHECK(zero.incident_norm == doctest::Approx(std::sqrt(64.0 * 64 * 8)));

  PhantomSpec weak;
  weak.delta_n = 0.01;
  weak.target_Rg = 0.01;
  weak.seed = 2;
  const Phantom pw = generate_phantom(weak, g);
  const ConvergenceReport rw = convergence_metric(pw.f, k, uin, 4);
  CHECK(rw.e[1] < rw.e[0]);

  // The metric is the defect of one more recursion step.
  const auto u = born_fields(pw.f, uin, k, {5});
  for (int kk = 0; kk < 4; ++kk) {
    ComplexVolume d = u[kk + 1].values;
    for (std::size_t i = 0; i < d.size(); ++i) d[i] -= u[kk].values[i];
    CHECK(rw.e[kk] == doctest::Approx(norm2(d.span()) / rw.incident_norm).epsilon(1e-10));
  }

  PhantomSpec strong = weak;
  strong.delta_n = 0.19;
  strong.target_Rg = 0.2;
  const ConvergenceReport rs = convergence_metric(generate_phantom(strong, g).f, k, uin, 6);
  for (std::size_t i = 1; i < rs.e.size(); ++i) CHECK(rs.e[i] < rs.e[i - 1]);
  CHECK(rs.e[1] > rw.e[1]);
  std::size_t needed = 0;
  while (needed < rs.e.size() && rs.e[needed] > rw.e[1]) ++needed;
  CHECK(needed + 1 > 2);
}

TEST_CASE("particle counting") {
  SUBCASE("empty volume") {
    const PhysicalGrid g = small_grid(16, 16, 2);
    CHECK(count_particles(g.zero_volume(), g, 1.0).empty());
  }
  SUBCASE("one particle at its seeded center") {
    const PhysicalGrid g = small_grid(48, 48, 5);
    PhantomSpec spec;
    spec.n_particles = 1;
    spec.seed = 9;
    const Phantom p = generate_phantom(spec, g);
    const ParticleSet found =
        count_particles(p.f, g, 0.1 * nominal_peak(spec.particle_radius, spec.delta_n, g));
    REQUIRE(found.size() == 1);
    CHECK(std::abs(found[0].x - p.particles[0].x) <= g.dx());
    CHECK(std::abs(found[0].y - p.particles[0].y) <= g.dy());
    CHECK(found[0].slice == p.particles[0].slice);
    CHECK(found[0].radius == doctest::Approx(0.5e-6).epsilon(0.15));
  }
  SUBCASE("fifty separated particles") {
    const PhysicalGrid g = small_grid(96, 96, 6);
    PhantomSpec spec;
    spec.n_particles = 50;
    spec.seed = 4;
    spec.isolate_adjacent_slices = true;
    // Touching disks would share diagonal voxel neighbors; keep two pitches of gap.
    spec.min_separation = 1e-6 + 2 * g.dx();
    const Phantom p = generate_phantom(spec, g);
    const ParticleSet found =
        count_particles(p.f, g, 0.1 * nominal_peak(spec.particle_radius, spec.delta_n, g));
    CHECK(found.size() == 50);
    const MatchResult m = match_particles(found, p.particles, g.dx(), 0.5 * g.params().slice_spacing);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
  }
  SUBCASE("target density with guaranteed separation") {
    const PhysicalGrid g = small_grid(128, 128, 10);
    PhantomSpec spec;
    spec.target_Rg = 0.05;
    spec.seed = 21;
    spec.isolate_adjacent_slices = true;
    spec.min_separation = 1e-6 + 2 * g.dx();
    const Phantom p = generate_phantom(spec, g);
    CHECK(p.particles.size() == static_cast<std::size_t>(particles_for_cross_section(0.05, 0.5e-6, g)));
    CHECK(count_particles(p.f, g, 0.1 * nominal_peak(0.5e-6, 0.01, g)).size() == p.particles.size());
  }
  SUBCASE("tiny components are discarded") {
    const PhysicalGrid g = small_grid(8, 8, 1);
    RealVolume f = g.zero_volume();
    f(2, 2, 0) = 1;
    f(5, 5, 0) = 1;
    f(6, 5, 0) = 1;
    CHECK(count_particles(f, g, 0.5, 2).size() == 1);
    CHECK(count_particles(f, g, 0.5, 1).size() == 2);
    f(3, 3, 0) = 1; // diagonal neighbor joins the first blob
    CHECK(count_particles(f, g, 0.5, 1).size() == 2);
  }
  SUBCASE("26-connectivity spans slices diagonally") {
    const PhysicalGrid g = small_grid(8, 8, 2);
    RealVolume f = g.zero_volume();
    f(2, 2, 0) = 1;
    f(3, 3, 1) = 1;
    CHECK(count_particles(f, g, 0.5).size() == 1);
  }
}

TEST_CASE("particle matching") {
  ParticleSet truth;
  for (int i = 0; i < 7; ++i)
    truth.push_back({i * 3e-6, 1e-6, 5e-6 + (i % 4) * 5e-6, static_cast<std::size_t>(i % 4), 0.5e-6, 1});

  const MatchResult same = match_particles(truth, truth, 1e-6, 1e-6);
  CHECK(same.precision == 1.0);
  CHECK(same.recall == 1.0);
  CHECK(same.pairs.size() == 7);

  const MatchResult none = match_particles({}, truth, 1e-6, 1e-6);
  CHECK(none.recall == 0.0);

  ParticleSet extra = truth;
  extra.push_back({100e-6, 100e-6, 5e-6, 0, 0.5e-6, 1});
  const MatchResult sp = match_particles(extra, truth, 1e-6, 1e-6);
  CHECK(sp.precision == doctest::Approx(7.0 / 8.0));
  CHECK(sp.recall == 1.0);

  // Two estimates near one truth particle: only the closer one matches.
  const ParticleSet t1{{0, 0, 5e-6, 0, 0.5e-6, 1}};
  const ParticleSet e2{{0.6e-6, 0, 5e-6, 0, 0.5e-6, 1}, {0.2e-6, 0, 5e-6, 0, 0.5e-6, 1}};
  const MatchResult m2 = match_particles(e2, t1, 1e-6, 1e-6);
  REQUIRE(m2.pairs.size() == 1);
  CHECK(m2.pairs[0].first == 1);
  CHECK(m2.precision == 0.5);

  // Outside the ellipsoid axially.
  const ParticleSet far{{0, 0, 8e-6, 1, 0.5e-6, 1}};
  CHECK(match_particles(far, t1, 1e-6, 2.5e-6).recall == 0.0);

  const PhysicalGrid g = small_grid(16, 16, 4);
  ParticleSet est(truth.begin(), truth.begin() + 4); // slices 0,1,2,3 each once
  const std::vector<double> byd = recall_by_depth(match_particles(est, truth, 1e-6, 1e-6), truth, g, 4);
  REQUIRE(byd.size() == 4);
  CHECK(byd[0] == 0.5);
  CHECK(byd[1] == 0.5);
  CHECK(byd[2] == 0.5);
  CHECK(byd[3] == 1.0);
  const std::vector<double> eight = recall_by_depth(same, truth, small_grid(16, 16, 8), 8);
  CHECK(eight[7] == -1.0);
}
