#include "bornholo/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace bornholo {

long particles_for_cross_section(double Rg, double radius, const PhysicalGrid& grid) {
  if (!(Rg >= 0) || !(radius > 0)) throw std::invalid_argument("R_g and radius must be positive");
  const double area = static_cast<double>(grid.plane_size()) * grid.dx() * grid.dy();
  return std::lround(Rg * area / (std::numbers::pi * radius * radius));
}

double geometric_cross_section(long n_particles, double radius, const PhysicalGrid& grid) {
  const double area = static_cast<double>(grid.plane_size()) * grid.dx() * grid.dy();
  return static_cast<double>(n_particles) * std::numbers::pi * radius * radius / area;
}

double nominal_peak(double radius, double delta_n, const PhysicalGrid& grid) {
  return contrast_from_index(grid.n_medium() + delta_n, grid) * 2 * radius / grid.dz_voxel();
}

RealVolume render_particles(const ParticleSet& particles, const PhysicalGrid& grid) {
  RealVolume f = grid.zero_volume();
  for (const Particle& p : particles) {
    if (p.slice >= grid.nz()) throw DimensionMismatch("particle slice outside grid");
    const double r2 = p.radius * p.radius;
    const long x0 = std::max(0L, static_cast<long>(std::floor((p.x - p.radius) / grid.dx())));
    const long x1 = std::min(static_cast<long>(grid.nx()) - 1,
                             static_cast<long>(std::ceil((p.x + p.radius) / grid.dx())));
    const long y0 = std::max(0L, static_cast<long>(std::floor((p.y - p.radius) / grid.dy())));
    const long y1 = std::min(static_cast<long>(grid.ny()) - 1,
                             static_cast<long>(std::ceil((p.y + p.radius) / grid.dy())));
    for (long iy = y0; iy <= y1; ++iy)
      for (long ix = x0; ix <= x1; ++ix) {
        const double ddx = static_cast<double>(ix) * grid.dx() - p.x;
        const double ddy = static_cast<double>(iy) * grid.dy() - p.y;
        const double rho2 = ddx * ddx + ddy * ddy;
        if (rho2 < r2)
          f(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy), p.slice) +=
              p.contrast * 2 * std::sqrt(r2 - rho2) / grid.dz_voxel();
      }
  }
  return f;
}

Phantom generate_phantom(const PhantomSpec& spec, const PhysicalGrid& grid) {
  if (!(spec.particle_radius >= grid.dx()))
    throw std::invalid_argument("particle radius must be at least one lateral pitch");
  long count = 0;
  if (spec.n_particles) {
    count = *spec.n_particles;
  } else if (spec.target_Rg) {
    if (!(*spec.target_Rg > 0)) throw std::invalid_argument("target R_g must be positive");
    count = particles_for_cross_section(*spec.target_Rg, spec.particle_radius, grid);
  }
  if (count < 0) throw std::invalid_argument("particle count must be nonnegative");

  const double r = spec.particle_radius;
  const double sep = spec.min_separation.value_or(2 * r);
  const double contrast = contrast_from_index(grid.n_medium() + spec.delta_n, grid);
  auto range = [r](std::size_t n, double pitch) {
    const double hi = static_cast<double>(n - 1) * pitch;
    return hi - r > r ? std::pair{r, hi - r} : std::pair{0.5 * hi, 0.5 * hi};
  };
  const auto [xlo, xhi] = range(grid.nx(), grid.dx());
  const auto [ylo, yhi] = range(grid.ny(), grid.dy());

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> ux(xlo, xhi), uy(ylo, yhi);
  std::uniform_int_distribution<std::size_t> uz(0, grid.nz() - 1);

  Phantom out;
  out.particles.reserve(static_cast<std::size_t>(count));
  for (long n = 0; n < count; ++n) {
    bool placed = false;
    for (int trial = 0; trial < spec.placement_budget && !placed; ++trial) {
      Particle p;
      p.slice = uz(rng);
      p.x = ux(rng);
      p.y = uy(rng);
      p.z = grid.slice_depth(p.slice);
      p.radius = r;
      p.contrast = contrast;
      const std::size_t reach = spec.isolate_adjacent_slices ? 1 : 0;
      placed = std::none_of(out.particles.begin(), out.particles.end(), [&](const Particle& q) {
        const std::size_t dz = q.slice > p.slice ? q.slice - p.slice : p.slice - q.slice;
        if (dz > reach) return false;
        return std::hypot(q.x - p.x, q.y - p.y) < sep;
      });
      if (placed) out.particles.push_back(p);
    }
    if (!placed) {
      std::ostringstream os;
      os << "could not place particle " << n + 1 << " of " << count << " with separation " << sep
         << " m after " << spec.placement_budget << " trials";
      throw PackingFailure(os.str());
    }
  }
  out.f = render_particles(out.particles, grid);
  return out;
}

} // namespace bornholo
