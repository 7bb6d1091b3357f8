#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/fft.hpp"
#include "bornholo/grid.hpp"

namespace bornholo {

/// What G does with the same-slice (dz = 0) transfer function, where h is
/// singular at r = 0.
enum class SameSlicePolicy {
  exclude,     // tf[0] = 0: slices couple only to other slices (default)
  regularized, // keep tf[0], r = 0 sample replaced by exp(ik d)/d, d = equivalent-sphere radius
};

/// Which slice-to-slice contributions apply_G keeps. Source slice n reaches
/// output slice m.
enum class GMode {
  full,
  forward_only,  // n > m: toward the hologram
  backward_only, // n <= m: complement of forward_only
};

std::string to_string(GMode m);
std::string to_string(SameSlicePolicy p);

/// Sampled free-space Green's function h = exp(ik|r|)/|r| times the voxel
/// quadrature weight, at lateral offset (ox*dx, oy*dy) and axial offset dz.
/// The r = 0 sample follows the singular-sample rule.
cplx green_sample(const PhysicalGrid& grid, long ox, long oy, double dz);
/// Radius of the sphere with the voxel's volume, used at r = 0.
double singular_radius(const PhysicalGrid& grid);

/// Frequency-domain transfer functions for every slice offset and every
/// slice-to-hologram distance, on the 2x zero-padded lateral grid.
class PropagationKernels {
public:
  explicit PropagationKernels(const PhysicalGrid& grid,
                              SameSlicePolicy policy = SameSlicePolicy::exclude);

  const PhysicalGrid& grid() const noexcept { return grid_; }
  SameSlicePolicy same_slice_policy() const noexcept { return policy_; }
  double singular_sample_radius() const noexcept { return singular_radius_; }
  std::size_t pad_nx() const noexcept { return pad_nx_; }
  std::size_t pad_ny() const noexcept { return pad_ny_; }
  std::size_t pad_size() const noexcept { return pad_nx_ * pad_ny_; }

  /// Number of distinct signed intra-volume offsets, 2*nz - 1.
  std::size_t intra_offset_count() const noexcept { return 2 * grid_.nz() - 1; }
  std::size_t hologram_offset_count() const noexcept { return grid_.nz(); }

  /// Transfer function between slices delta apart (delta = m - n, any sign).
  std::span<const cplx> intra(long delta) const;
  /// Transfer function from slice m to the hologram plane.
  std::span<const cplx> to_hologram(std::size_t m) const;

  const Fft2D& fft() const noexcept { return fft_; }

  /// Zero-pads a nx*ny plane into a pad buffer and transforms it.
  void pad_forward(std::span<const cplx> plane, std::span<cplx> padded) const;
  /// Inverse-transforms a pad buffer in place and crops it to nx*ny.
  void inverse_crop(std::span<cplx> padded, std::span<cplx> plane) const;

  /// Raw storage: nz intra planes (|delta| = 0..nz-1) then nz hologram planes.
  const std::vector<cplx>& storage() const noexcept { return tf_; }
  /// Rebuild from previously stored transfer functions (kernel cache).
  PropagationKernels(const PhysicalGrid& grid, SameSlicePolicy policy, std::vector<cplx> tf);

private:
  void build();

  PhysicalGrid grid_;
  SameSlicePolicy policy_;
  double singular_radius_;
  std::size_t pad_nx_, pad_ny_;
  Fft2D fft_;
  std::vector<cplx> tf_;
};

/// Builds the kernel set for a grid. Allocation failures surface as
/// AllocationFailure with the requested byte count.
PropagationKernels build_kernels(const PhysicalGrid& grid,
                                 SameSlicePolicy policy = SameSlicePolicy::exclude);

/// E = sum_m crop(IFFT(tf_holo[m] * FFT(pad(source_m)))).
ComplexPlane apply_H(const PropagationKernels& k, const ComplexVolume& source);
/// Adjoint of apply_H.
ComplexVolume apply_H_adjoint(const PropagationKernels& k, const ComplexPlane& field);

/// out_m = sum_n mask(m, n) crop(IFFT(tf[m - n] * FFT(pad(source_n)))).
ComplexVolume apply_G(const PropagationKernels& k, const ComplexVolume& source,
                      GMode mode = GMode::full);
/// Adjoint of apply_G with the same mode.
ComplexVolume apply_G_adjoint(const PropagationKernels& k, const ComplexVolume& source,
                              GMode mode = GMode::full);

/// Optional post-step: zero spatial frequencies beyond NA/lambda_vacuum on a
/// hologram-plane field (unpadded FFT).
ComplexPlane lowpass_to_na(const PhysicalGrid& grid, const ComplexPlane& field);

} // namespace bornholo
