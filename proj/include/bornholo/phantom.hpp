#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/grid.hpp"

namespace bornholo {

/// One disk-shaped scatterer. Positions are physical: x, y measured from the
/// center of voxel (0, 0); z is the depth behind the hologram plane.
struct Particle {
  double x = 0, y = 0, z = 0;
  std::size_t slice = 0;
  double radius = 0;
  double contrast = 0; // scattering potential of the material (before chord projection)
};

using ParticleSet = std::vector<Particle>;

struct PhantomSpec {
  double particle_radius = 0.5e-6;
  double delta_n = 0.01;
  std::optional<double> target_Rg;        // geometric cross-section
  std::optional<long> n_particles;        // explicit count, wins over target_Rg
  std::uint64_t seed = 0;
  std::optional<double> min_separation;   // same-slice center distance, default 2 * radius
  bool isolate_adjacent_slices = false;   // also enforce min_separation between slices m and m±1
  int placement_budget = 2000;            // rejection-sampling trials per particle
};

/// N_p = round(R_g * nx * ny * dx * dy / (pi r^2)).
long particles_for_cross_section(double Rg, double radius, const PhysicalGrid& grid);

/// R_g = N_p * pi r^2 / (nx * ny * dx * dy).
double geometric_cross_section(long n_particles, double radius, const PhysicalGrid& grid);

/// Peak voxel value of one disk: contrast * 2r / dz_voxel.
double nominal_peak(double radius, double delta_n, const PhysicalGrid& grid);

/// Rasterizes disks: each voxel within r of a center gets
/// contrast * 2 sqrt(r^2 - rho^2) / dz_voxel (the sphere chord squeezed into one slice).
RealVolume render_particles(const ParticleSet& particles, const PhysicalGrid& grid);

struct Phantom {
  RealVolume f;
  ParticleSet particles;
};

/// Random suspension, deterministic under spec.seed. Throws PackingFailure.
Phantom generate_phantom(const PhantomSpec& spec, const PhysicalGrid& grid);

} // namespace bornholo
