#include "bornholo/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <new>
#include <numbers>

namespace bornholo {

std::string to_string(GMode m) {
  switch (m) {
  case GMode::full: return "full";
  case GMode::forward_only: return "forward_only";
  case GMode::backward_only: return "backward_only";
  }
  return "?";
}

std::string to_string(SameSlicePolicy p) {
  return p == SameSlicePolicy::exclude ? "exclude" : "regularized";
}

double singular_radius(const PhysicalGrid& grid) {
  return std::cbrt(3.0 / (4.0 * std::numbers::pi)) * std::cbrt(grid.voxel_volume());
}

cplx green_sample(const PhysicalGrid& grid, long ox, long oy, double dz) {
  const double x = static_cast<double>(ox) * grid.dx();
  const double y = static_cast<double>(oy) * grid.dy();
  double r = std::sqrt(x * x + y * y + dz * dz);
  if (r == 0) r = singular_radius(grid);
  return grid.voxel_volume() * std::polar(1.0 / r, grid.k() * r);
}

namespace {

inline bool keep(GMode mode, std::size_t m, std::size_t n) {
  switch (mode) {
  case GMode::full: return true;
  case GMode::forward_only: return n > m;
  case GMode::backward_only: return n <= m;
  }
  return true;
}

// a * b and conj(a) * b without the NaN/Inf recovery of operator*.
inline void mac(cplx& acc, const cplx& a, const cplx& b) {
  acc = {acc.real() + a.real() * b.real() - a.imag() * b.imag(),
         acc.imag() + a.real() * b.imag() + a.imag() * b.real()};
}
inline void mac_conj(cplx& acc, const cplx& a, const cplx& b) {
  acc = {acc.real() + a.real() * b.real() + a.imag() * b.imag(),
         acc.imag() + a.real() * b.imag() - a.imag() * b.real()};
}

inline long signed_offset(std::size_t i, std::size_t padded) {
  return i < padded / 2 ? static_cast<long>(i) : static_cast<long>(i) - static_cast<long>(padded);
}

std::vector<cplx> allocate(std::size_t count) {
  try {
    return std::vector<cplx>(count);
  } catch (const std::bad_alloc&) {
    throw AllocationFailure(count * sizeof(cplx));
  } catch (const std::length_error&) {
    throw AllocationFailure(count * sizeof(cplx));
  }
}

} // namespace

PropagationKernels::PropagationKernels(const PhysicalGrid& grid, SameSlicePolicy policy)
    : grid_(grid), policy_(policy), singular_radius_(singular_radius(grid)),
      pad_nx_(2 * grid.nx()), pad_ny_(2 * grid.ny()), fft_(pad_nx_, pad_ny_) {
  tf_ = allocate(2 * grid_.nz() * pad_size());
  build();
}

PropagationKernels::PropagationKernels(const PhysicalGrid& grid, SameSlicePolicy policy,
                                       std::vector<cplx> tf)
    : grid_(grid), policy_(policy), singular_radius_(singular_radius(grid)),
      pad_nx_(2 * grid.nx()), pad_ny_(2 * grid.ny()), fft_(pad_nx_, pad_ny_), tf_(std::move(tf)) {
  if (tf_.size() != 2 * grid_.nz() * pad_size())
    throw DimensionMismatch("kernel cache does not match grid");
}

void PropagationKernels::build() {
  const std::size_t nz = grid_.nz();
  const std::size_t ps = pad_size();
  // Planes 0..nz-1: intra-volume |delta|; planes nz..2nz-1: slice m -> hologram.
#pragma omp parallel for schedule(dynamic)
  for (std::size_t plane = 0; plane < 2 * nz; ++plane) {
    cplx* out = tf_.data() + plane * ps;
    if (plane == 0 && policy_ == SameSlicePolicy::exclude) continue; // stays zero
    const double dz = plane < nz ? static_cast<double>(plane) * grid_.slice_spacing()
                                 : -grid_.slice_depth(plane - nz);
    for (std::size_t iy = 0; iy < pad_ny_; ++iy) {
      const long oy = signed_offset(iy, pad_ny_);
      for (std::size_t ix = 0; ix < pad_nx_; ++ix)
        out[iy * pad_nx_ + ix] = green_sample(grid_, signed_offset(ix, pad_nx_), oy, dz);
    }
    fft_.forward(out);
  }
}

PropagationKernels build_kernels(const PhysicalGrid& grid, SameSlicePolicy policy) {
  return PropagationKernels(grid, policy);
}

std::span<const cplx> PropagationKernels::intra(long delta) const {
  const auto a = static_cast<std::size_t>(delta < 0 ? -delta : delta);
  if (a >= grid_.nz()) throw DimensionMismatch("slice offset out of range");
  return {tf_.data() + a * pad_size(), pad_size()};
}

std::span<const cplx> PropagationKernels::to_hologram(std::size_t m) const {
  if (m >= grid_.nz()) throw DimensionMismatch("slice index out of range");
  return {tf_.data() + (grid_.nz() + m) * pad_size(), pad_size()};
}

void PropagationKernels::pad_forward(std::span<const cplx> plane, std::span<cplx> padded) const {
  std::fill(padded.begin(), padded.end(), cplx{});
  const std::size_t nx = grid_.nx();
  for (std::size_t y = 0; y < grid_.ny(); ++y)
    std::copy_n(plane.data() + y * nx, nx, padded.data() + y * pad_nx_);
  fft_.forward(padded.data());
}

void PropagationKernels::inverse_crop(std::span<cplx> padded, std::span<cplx> plane) const {
  fft_.inverse(padded.data());
  const std::size_t nx = grid_.nx();
  for (std::size_t y = 0; y < grid_.ny(); ++y)
    std::copy_n(padded.data() + y * pad_nx_, nx, plane.data() + y * nx);
}

namespace {

void check_volume(const PropagationKernels& k, const ComplexVolume& v, const char* op) {
  if (!k.grid().matches(v))
    throw DimensionMismatch(std::string(op) + ": volume does not match kernel grid");
}

/// Spectra of every zero-padded slice.
std::vector<cplx> slice_spectra(const PropagationKernels& k, const ComplexVolume& v) {
  const std::size_t nz = v.nz(), ps = k.pad_size();
  std::vector<cplx> spec = allocate(nz * ps);
#pragma omp parallel for
  for (std::size_t n = 0; n < nz; ++n)
    k.pad_forward(v.slice(n), {spec.data() + n * ps, ps});
  return spec;
}

ComplexVolume couple(const PropagationKernels& k, const ComplexVolume& source, GMode mode,
                     bool adjoint) {
  const std::size_t nz = source.nz(), ps = k.pad_size();
  std::vector<cplx> spec = slice_spectra(k, source);
  std::vector<cplx> mixed = allocate(nz * ps);
  std::vector<char> touched(nz, 0);
  // Frequency blocks keep every slice's block of spec and tf resident in cache.
  constexpr std::size_t block = 512;
  const std::size_t nblocks = (ps + block - 1) / block;
#pragma omp parallel for
  for (std::size_t b = 0; b < nblocks; ++b) {
    const std::size_t lo = b * block, hi = std::min(ps, lo + block);
    for (std::size_t m = 0; m < nz; ++m) {
      cplx* acc = mixed.data() + m * ps;
      for (std::size_t n = 0; n < nz; ++n) {
        // Block (m, n) of G^H is the conjugate of block (n, m) of G.
        if (!(adjoint ? keep(mode, n, m) : keep(mode, m, n))) continue;
        const long delta = static_cast<long>(m) - static_cast<long>(n);
        if (delta == 0 && k.same_slice_policy() == SameSlicePolicy::exclude) continue;
        const cplx* t = k.intra(delta).data();
        const cplx* s = spec.data() + n * ps;
        if (adjoint)
          for (std::size_t i = lo; i < hi; ++i) mac_conj(acc[i], t[i], s[i]);
        else
          for (std::size_t i = lo; i < hi; ++i) mac(acc[i], t[i], s[i]);
        if (b == 0) touched[m] = 1;
      }
    }
  }
  ComplexVolume out(source.nx(), source.ny(), nz);
#pragma omp parallel for
  for (std::size_t m = 0; m < nz; ++m)
    if (touched[m]) k.inverse_crop({mixed.data() + m * ps, ps}, out.slice(m));
  return out;
}

} // namespace

ComplexPlane apply_H(const PropagationKernels& k, const ComplexVolume& source) {
  check_volume(k, source, "apply_H");
  const std::size_t ps = k.pad_size();
  const std::vector<cplx> spec = slice_spectra(k, source);
  std::vector<cplx> acc(ps);
  for (std::size_t m = 0; m < source.nz(); ++m) {
    const cplx* t = k.to_hologram(m).data();
    const cplx* s = spec.data() + m * ps;
    for (std::size_t i = 0; i < ps; ++i) mac(acc[i], t[i], s[i]);
  }
  ComplexPlane out(source.nx(), source.ny());
  k.inverse_crop(acc, out.span());
  return out;
}

ComplexVolume apply_H_adjoint(const PropagationKernels& k, const ComplexPlane& field) {
  const PhysicalGrid& g = k.grid();
  if (field.nx() != g.nx() || field.ny() != g.ny())
    throw DimensionMismatch("apply_H_adjoint: field does not match kernel grid");
  const std::size_t ps = k.pad_size();
  std::vector<cplx> spec(ps);
  k.pad_forward(field.span(), spec);
  ComplexVolume out = g.zero_field();
#pragma omp parallel
  {
    std::vector<cplx> acc(ps);
#pragma omp for
    for (std::size_t m = 0; m < g.nz(); ++m) {
      const cplx* t = k.to_hologram(m).data();
      for (std::size_t i = 0; i < ps; ++i) {
        acc[i] = 0;
        mac_conj(acc[i], t[i], spec[i]);
      }
      k.inverse_crop(acc, out.slice(m));
    }
  }
  return out;
}

ComplexVolume apply_G(const PropagationKernels& k, const ComplexVolume& source, GMode mode) {
  check_volume(k, source, "apply_G");
  return couple(k, source, mode, false);
}

ComplexVolume apply_G_adjoint(const PropagationKernels& k, const ComplexVolume& source,
                              GMode mode) {
  check_volume(k, source, "apply_G_adjoint");
  return couple(k, source, mode, true);
}

ComplexPlane lowpass_to_na(const PhysicalGrid& grid, const ComplexPlane& field) {
  if (field.nx() != grid.nx() || field.ny() != grid.ny())
    throw DimensionMismatch("lowpass_to_na: field does not match grid");
  const std::size_t nx = grid.nx(), ny = grid.ny();
  Fft2D fft(nx, ny);
  ComplexPlane out = field;
  fft.forward(out.data());
  const double cutoff = grid.na() / grid.lambda_vacuum();
  for (std::size_t iy = 0; iy < ny; ++iy) {
    const double fy = static_cast<double>(signed_offset(iy, ny)) / (static_cast<double>(ny) * grid.dy());
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double fx = static_cast<double>(signed_offset(ix, nx)) / (static_cast<double>(nx) * grid.dx());
      if (fx * fx + fy * fy > cutoff * cutoff) out(ix, iy) = 0;
    }
  }
  fft.inverse(out.data());
  return out;
}

} // namespace bornholo
