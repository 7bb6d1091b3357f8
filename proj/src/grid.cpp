#include "bornholo/grid.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace bornholo {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0) || !std::isfinite(v))
    throw NonPositiveDimension(std::string(name) + " must be positive and finite");
}

} // namespace

PhysicalGrid::PhysicalGrid(const GridParams& p) : p_(p) {
  if (p.nx < 1 || p.ny < 1 || p.nz < 1)
    throw NonPositiveDimension("nx, ny, nz must all be >= 1");
  require_positive(p.dx, "dx");
  require_positive(p.dy, "dy");
  require_positive(p.dz_voxel, "dz_voxel");
  require_positive(p.slice_spacing, "slice_spacing");
  require_positive(p.z0, "z0");
  require_positive(p.lambda_vacuum, "lambda_vacuum");
  require_positive(p.n_medium, "n_medium");
  require_positive(p.na, "na");

  const double half = 0.5 * p.lambda_vacuum / p.n_medium;
  if (p.dx > half || p.dy > half) {
    std::ostringstream os;
    os << "lateral pitch (" << p.dx << ", " << p.dy << ") exceeds lambda_medium/2 = " << half;
    throw SamplingViolation(os.str());
  }
  nx_ = static_cast<std::size_t>(p.nx);
  ny_ = static_cast<std::size_t>(p.ny);
  nz_ = static_cast<std::size_t>(p.nz);
  k_ = 2 * std::numbers::pi * p.n_medium / p.lambda_vacuum;
}

PhysicalGrid make_grid(const GridParams& p) { return PhysicalGrid(p); }

double axial_resolution(double lambda_medium, double na) {
  if (!(na >= 1e-6) || na > 1)
    throw InvalidNA("numerical aperture must lie in [1e-6, 1]");
  return lambda_medium / (1 - std::sqrt(1 - na * na));
}

double axial_resolution(const PhysicalGrid& grid) {
  return axial_resolution(grid.lambda_medium(), grid.na());
}

cplx incident_at_depth(const PhysicalGrid& grid, double depth) {
  return std::polar(1.0, -grid.k() * depth);
}

InternalField incident_plane_wave(const PhysicalGrid& grid) {
  InternalField u{grid.zero_field(), 1};
  for (std::size_t m = 0; m < grid.nz(); ++m) {
    const cplx v = incident_at_depth(grid, grid.slice_depth(m));
    for (cplx& x : u.values.slice(m)) x = v;
  }
  return u;
}

double contrast_from_index(double n_particle, double n_medium, double lambda_vacuum) {
  const double k0 = 2 * std::numbers::pi / lambda_vacuum;
  return k0 * k0 * (n_particle * n_particle - n_medium * n_medium) / (4 * std::numbers::pi);
}

double contrast_from_index(double n_particle, const PhysicalGrid& grid) {
  return contrast_from_index(n_particle, grid.n_medium(), grid.lambda_vacuum());
}

} // namespace bornholo
