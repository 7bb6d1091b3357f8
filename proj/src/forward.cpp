#include "bornholo/forward.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace bornholo {

namespace {

GMode coupling_mode(ScatteringMode m) {
  return m == ScatteringMode::forward_only ? GMode::forward_only : GMode::full;
}

void check_inputs(const RealVolume& f, const InternalField& u_in, const PropagationKernels& k,
                  const ForwardConfig& cfg) {
  if (cfg.order_K < 1) throw std::invalid_argument("order_K must be >= 1");
  if (!k.grid().matches(f)) throw DimensionMismatch("object volume does not match kernel grid");
  if (!k.grid().matches(u_in.values))
    throw DimensionMismatch("incident field does not match kernel grid");
}

} // namespace

std::vector<InternalField> born_fields(const RealVolume& f, const InternalField& u_in,
                                       const PropagationKernels& kernels,
                                       const ForwardConfig& cfg) {
  check_inputs(f, u_in, kernels, cfg);
  std::vector<InternalField> fields;
  fields.reserve(static_cast<std::size_t>(cfg.order_K));
  fields.push_back({u_in.values, 1});
  const GMode gm = coupling_mode(cfg.mode);
  ComplexVolume src(f.nx(), f.ny(), f.nz());
  for (int k = 2; k <= cfg.order_K; ++k) {
    if (cfg.mode == ScatteringMode::first_born) {
      fields.push_back({u_in.values, k});
      continue;
    }
    const ComplexVolume& prev = fields.back().values;
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = prev[i] * f[i];
    ComplexVolume next = apply_G(kernels, src, gm);
    for (std::size_t i = 0; i < next.size(); ++i) next[i] += u_in.values[i];
    fields.push_back({std::move(next), k});
  }
  return fields;
}

InternalField internal_field(const RealVolume& f, const InternalField& u_in,
                             const PropagationKernels& kernels, const ForwardConfig& cfg) {
  check_inputs(f, u_in, kernels, cfg);
  const GMode gm = coupling_mode(cfg.mode);
  InternalField u{u_in.values, 1};
  if (cfg.mode == ScatteringMode::first_born) {
    u.order_k = cfg.order_K;
    return u;
  }
  ComplexVolume src(f.nx(), f.ny(), f.nz());
  for (int k = 2; k <= cfg.order_K; ++k) {
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = u.values[i] * f[i];
    u.values = apply_G(kernels, src, gm);
    for (std::size_t i = 0; i < u.values.size(); ++i) u.values[i] += u_in.values[i];
    u.order_k = k;
  }
  return u;
}

ComplexPlane scattered_field(const RealVolume& f, const InternalField& u_K,
                             const PropagationKernels& kernels) {
  require_same_shape(f, u_K.values, "scattered_field");
  ComplexVolume src(f.nx(), f.ny(), f.nz());
  for (std::size_t i = 0; i < src.size(); ++i) src[i] = u_K.values[i] * f[i];
  return apply_H(kernels, src);
}

RealPlane synthesize_hologram(const ComplexPlane& E, double u_in, bool include_self_interference) {
  RealPlane I(E.nx(), E.ny());
  for (std::size_t i = 0; i < E.size(); ++i)
    I[i] = include_self_interference ? std::norm(u_in + E[i])
                                     : u_in * u_in + 2 * u_in * E[i].real();
  return I;
}

RealPlane extract_scattered(const RealPlane& intensity, double u_in) {
  if (u_in == 0) throw ZeroIncidentField("incident field vanishes on the hologram plane");
  RealPlane out(intensity.nx(), intensity.ny());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = (intensity[i] - u_in * u_in) / (2 * u_in);
  return out;
}

RealPlane backscatter_contribution(const RealVolume& f, const InternalField& u_in,
                                   const PropagationKernels& kernels, int order_K) {
  const InternalField full =
      internal_field(f, u_in, kernels, {order_K, ScatteringMode::full, false});
  const InternalField fwd =
      internal_field(f, u_in, kernels, {order_K, ScatteringMode::forward_only, false});
  const ComplexPlane e_full = scattered_field(f, full, kernels);
  const ComplexPlane e_fwd = scattered_field(f, fwd, kernels);
  RealPlane out(e_full.nx(), e_full.ny());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = e_full[i].real() - e_fwd[i].real();
  return out;
}

RealPlane add_gaussian_noise(const RealPlane& signal, double snr_db, unsigned long long seed) {
  double power = 0;
  for (double v : signal.span()) power += v * v;
  power /= static_cast<double>(signal.size());
  const double sigma = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  RealPlane out = signal;
  for (double& v : out.span()) v += noise(rng);
  return out;
}

} // namespace bornholo
