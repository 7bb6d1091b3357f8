#pragma once

#include <cstddef>
#include <memory>

#include "bornholo/array.hpp"

namespace bornholo {

/// In-place 2D complex DFT of a fixed size backed by FFTW. Plans are created
/// once; execute() is safe to call concurrently on distinct buffers.
/// forward() is unnormalized, inverse() divides by nx*ny.
class Fft2D {
public:
  Fft2D(std::size_t nx, std::size_t ny);
  ~Fft2D();
  Fft2D(const Fft2D&) = delete;
  Fft2D& operator=(const Fft2D&) = delete;
  Fft2D(Fft2D&&) noexcept;
  Fft2D& operator=(Fft2D&&) noexcept;

  std::size_t nx() const noexcept { return nx_; }
  std::size_t ny() const noexcept { return ny_; }
  std::size_t size() const noexcept { return nx_ * ny_; }

  void forward(cplx* buf) const;
  void inverse(cplx* buf) const;

private:
  struct Plans;
  std::size_t nx_, ny_;
  std::unique_ptr<Plans> plans_;
};

} // namespace bornholo
