#include "bornholo/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <vector>

namespace bornholo {

namespace {
// Planner calls are not thread-safe in FFTW.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
} // namespace

struct Fft2D::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  ~Plans() {
    std::lock_guard lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (inv) fftw_destroy_plan(inv);
  }
};

Fft2D::Fft2D(std::size_t nx, std::size_t ny) : nx_(nx), ny_(ny), plans_(std::make_unique<Plans>()) {
  std::vector<cplx> scratch(nx * ny);
  auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::lock_guard lock(planner_mutex());
  // FFTW takes (rows, cols) = (ny, nx) for row-major x-fastest storage.
  plans_->fwd = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), p, p, FFTW_FORWARD, flags);
  plans_->inv = fftw_plan_dft_2d(static_cast<int>(ny), static_cast<int>(nx), p, p, FFTW_BACKWARD, flags);
}

Fft2D::~Fft2D() = default;
Fft2D::Fft2D(Fft2D&&) noexcept = default;
Fft2D& Fft2D::operator=(Fft2D&&) noexcept = default;

void Fft2D::forward(cplx* buf) const {
  auto* p = reinterpret_cast<fftw_complex*>(buf);
  fftw_execute_dft(plans_->fwd, p, p);
}

void Fft2D::inverse(cplx* buf) const {
  auto* p = reinterpret_cast<fftw_complex*>(buf);
  fftw_execute_dft(plans_->inv, p, p);
  const double scale = 1.0 / static_cast<double>(size());
  for (std::size_t i = 0; i < size(); ++i) buf[i] *= scale;
}

} // namespace bornholo
