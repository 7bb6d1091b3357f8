#pragma once

#include <cstddef>

#include "bornholo/array.hpp"

namespace bornholo {

/// Raw geometry and optics, as read from a config file. All lengths in meters.
struct GridParams {
  long nx = 0, ny = 0, nz = 0;
  double dx = 0, dy = 0;
  double dz_voxel = 0;      // physical thickness of one slice
  double slice_spacing = 0; // distance between consecutive slices
  double z0 = 0;            // hologram plane to slice 0
  double lambda_vacuum = 0;
  double n_medium = 0;
  double na = 0;
};

/// Validated discretization. Immutable once built.
///
/// Slice m sits at depth z0 + m*slice_spacing behind the hologram plane.
/// Illumination travels toward the hologram; on the optical axis the slice
/// is at coordinate -depth and the hologram at 0.
class PhysicalGrid {
public:
  explicit PhysicalGrid(const GridParams& p);

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nz() const noexcept { return nz_; }
  std::size_t plane_size() const noexcept { return nx_ * ny_; }
  std::size_t voxel_count() const noexcept { return nx_ * ny_ * nz_; }

  double dx() const noexcept { return p_.dx; }
  double dy() const noexcept { return p_.dy; }
  double dz_voxel() const noexcept { return p_.dz_voxel; }
  double slice_spacing() const noexcept { return p_.slice_spacing; }
  double z0() const noexcept { return p_.z0; }
  double lambda_vacuum() const noexcept { return p_.lambda_vacuum; }
  double n_medium() const noexcept { return p_.n_medium; }
  double na() const noexcept { return p_.na; }

  double lambda_medium() const noexcept { return p_.lambda_vacuum / p_.n_medium; }
  /// Wavenumber in the medium, 2*pi*n/lambda.
  double k() const noexcept { return k_; }
  double voxel_volume() const noexcept { return p_.dx * p_.dy * p_.dz_voxel; }
  /// Distance from the hologram plane to slice m.
  double slice_depth(std::size_t m) const noexcept {
    return p_.z0 + static_cast<double>(m) * p_.slice_spacing;
  }

  const GridParams& params() const noexcept { return p_; }

  RealVolume zero_volume() const { return RealVolume(nx_, ny_, nz_); }
  ComplexVolume zero_field() const { return ComplexVolume(nx_, ny_, nz_); }
  bool matches(const RealVolume& v) const noexcept {
    return v.nx() == nx_ && v.ny() == ny_ && v.nz() == nz_;
  }
  bool matches(const ComplexVolume& v) const noexcept {
    return v.nx() == nx_ && v.ny() == ny_ && v.nz() == nz_;
  }

private:
  GridParams p_;
  std::size_t nx_, ny_, nz_;
  double k_;
};

/// Validates and builds a grid. Throws NonPositiveDimension or SamplingViolation.
PhysicalGrid make_grid(const GridParams& p);

/// lambda_medium / (1 - sqrt(1 - NA^2)). Throws InvalidNA outside [1e-6, 1].
double axial_resolution(const PhysicalGrid& grid);
double axial_resolution(double lambda_medium, double na);

/// A field on every voxel together with the Born order it represents.
struct InternalField {
  ComplexVolume values;
  int order_k = 0;
};

/// Unit plane wave exp(ikz) travelling toward the hologram, equal to 1 on the
/// hologram plane. Returned with order_k = 1 (it is u_1 of the Born recursion).
InternalField incident_plane_wave(const PhysicalGrid& grid);

/// Incident plane wave at a given depth behind the hologram plane.
cplx incident_at_depth(const PhysicalGrid& grid, double depth);

/// Incident field value on the hologram plane (real, unit amplitude).
inline constexpr double kIncidentAmplitude = 1.0;

/// Scattering potential of a voxel of index n_particle: k0^2 (n^2 - n_m^2) / 4pi.
double contrast_from_index(double n_particle, const PhysicalGrid& grid);
double contrast_from_index(double n_particle, double n_medium, double lambda_vacuum);

} // namespace bornholo
