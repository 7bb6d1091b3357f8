#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bornholo/errors.hpp"

namespace bornholo {

using cplx = std::complex<double>;

/// Dense 2D array stored row-major with x fastest: index = y*nx + x.
template <class T>
class Plane {
public:
  Plane() = default;
  Plane(std::size_t nx, std::size_t ny, T fill = T{})
      : nx_(nx), ny_(ny), data_(nx * ny, fill) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t x, std::size_t y) { return data_[y * nx_ + x]; }
  const T& operator()(std::size_t x, std::size_t y) const { return data_[y * nx_ + x]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  bool same_shape(const Plane& o) const noexcept { return nx_ == o.nx_ && ny_ == o.ny_; }

private:
  std::size_t nx_ = 0, ny_ = 0;
  std::vector<T> data_;
};

/// Dense 3D array ordered (z, y, x), x fastest. A z-slice is a contiguous plane.
template <class T>
class Volume {
public:
  Volume() = default;
  Volume(std::size_t nx, std::size_t ny, std::size_t nz, T fill = T{})
      : nx_(nx), ny_(ny), nz_(nz), data_(nx * ny * nz, fill) {}

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t nz() const noexcept { return nz_; }
  std::size_t plane_size() const noexcept { return nx_ * ny_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(std::size_t x, std::size_t y, std::size_t z) {
    return data_[(z * ny_ + y) * nx_ + x];
  }
  const T& operator()(std::size_t x, std::size_t y, std::size_t z) const {
    return data_[(z * ny_ + y) * nx_ + x];
  }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  std::span<T> slice(std::size_t z) { return {data_.data() + z * plane_size(), plane_size()}; }
  std::span<const T> slice(std::size_t z) const {
    return {data_.data() + z * plane_size(), plane_size()};
  }

  std::span<T> span() noexcept { return data_; }
  std::span<const T> span() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }
  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }

  template <class U>
  bool same_shape(const Volume<U>& o) const noexcept {
    return nx_ == o.nx() && ny_ == o.ny() && nz_ == o.nz();
  }

private:
  std::size_t nx_ = 0, ny_ = 0, nz_ = 0;
  std::vector<T> data_;
};

using RealPlane = Plane<double>;
using ComplexPlane = Plane<cplx>;
using RealVolume = Volume<double>;
using ComplexVolume = Volume<cplx>;

template <class A, class B>
void require_same_shape(const Volume<A>& a, const Volume<B>& b, const char* what) {
  if (!a.same_shape(b))
    throw DimensionMismatch(std::string(what) + ": volume shapes differ");
}

// Small helpers shared by the operators and the tests.
double norm2(std::span<const double> v);
double norm2(std::span<const cplx> v);
cplx dot(std::span<const cplx> a, std::span<const cplx> b); // sum conj(a_i) b_i
double dot(std::span<const double> a, std::span<const double> b);

/// Elementwise real part.
RealVolume real_part(const ComplexVolume& v);
RealPlane real_part(const ComplexPlane& p);
/// Promote to complex.
ComplexVolume to_complex(const RealVolume& v);

} // namespace bornholo
