#include "bornholo/array.hpp"

#include <cmath>

namespace bornholo {

double norm2(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double norm2(std::span<const cplx> v) {
  double s = 0;
  for (const cplx& x : v) s += std::norm(x);
  return std::sqrt(s);
}

cplx dot(std::span<const cplx> a, std::span<const cplx> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  cplx s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("dot: length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

RealVolume real_part(const ComplexVolume& v) {
  RealVolume out(v.nx(), v.ny(), v.nz());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

RealPlane real_part(const ComplexPlane& p) {
  RealPlane out(p.nx(), p.ny());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i].real();
  return out;
}

ComplexVolume to_complex(const RealVolume& v) {
  ComplexVolume out(v.nx(), v.ny(), v.nz());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i];
  return out;
}

} // namespace bornholo
