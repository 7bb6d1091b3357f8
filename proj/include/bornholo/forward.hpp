#pragma once

#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/grid.hpp"
#include "bornholo/propagation.hpp"

namespace bornholo {

enum class ScatteringMode {
  full,         // forward and backward multiple scattering
  forward_only, // internal coupling only toward the hologram
  first_born,   // u_K = u_in regardless of K
};

struct ForwardConfig {
  int order_K = 1;
  ScatteringMode mode = ScatteringMode::full;
  bool include_self_interference = true;
};

/// Born recursion u_0 = 0, u_k = u_in + G diag(u_{k-1}) f, k = 1..K.
/// Returns u_K with order_k = K.
InternalField internal_field(const RealVolume& f, const InternalField& u_in,
                             const PropagationKernels& kernels, const ForwardConfig& cfg);

/// All iterates u_1..u_K (index k-1 holds u_k).
std::vector<InternalField> born_fields(const RealVolume& f, const InternalField& u_in,
                                       const PropagationKernels& kernels,
                                       const ForwardConfig& cfg);

/// E = H diag(u_K) f.
ComplexPlane scattered_field(const RealVolume& f, const InternalField& u_K,
                             const PropagationKernels& kernels);

/// Hologram intensity. With self-interference |u_in + E|^2, otherwise the
/// linearized u_in^2 + 2 u_in Re{E}.
RealPlane synthesize_hologram(const ComplexPlane& E, double u_in, bool include_self_interference);

/// Background removal: Re{E} = (I - u_in^2) / (2 u_in). Throws ZeroIncidentField.
RealPlane extract_scattered(const RealPlane& intensity, double u_in);

/// Re{E_full} - Re{E_forward_only}, both at order K.
RealPlane backscatter_contribution(const RealVolume& f, const InternalField& u_in,
                                   const PropagationKernels& kernels, int order_K);

/// Additive white Gaussian noise at the requested SNR (dB, relative to the
/// mean signal power of the hologram). Deterministic under seed.
RealPlane add_gaussian_noise(const RealPlane& signal, double snr_db, unsigned long long seed);

} // namespace bornholo
