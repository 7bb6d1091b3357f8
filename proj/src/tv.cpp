#include "bornholo/tv.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bornholo {

namespace {

/// Three-component dual field, one vector per voxel.
struct Dual {
  RealVolume x, y, z;
  Dual(std::size_t nx, std::size_t ny, std::size_t nz)
      : x(nx, ny, nz), y(nx, ny, nz), z(nx, ny, nz) {}
};

// Weighted forward-difference gradient D f.
void grad(const RealVolume& f, double wz, Dual& d) {
  const std::size_t nx = f.nx(), ny = f.ny(), nz = f.nz();
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        const double v = f(i, j, k);
        d.x(i, j, k) = i + 1 < nx ? f(i + 1, j, k) - v : 0.0;
        d.y(i, j, k) = j + 1 < ny ? f(i, j + 1, k) - v : 0.0;
        d.z(i, j, k) = k + 1 < nz ? wz * (f(i, j, k + 1) - v) : 0.0;
      }
}

// D^T p (negative divergence).
void grad_adjoint(const Dual& p, double wz, RealVolume& out) {
  const std::size_t nx = out.nx(), ny = out.ny(), nz = out.nz();
  for (std::size_t k = 0; k < nz; ++k)
    for (std::size_t j = 0; j < ny; ++j)
      for (std::size_t i = 0; i < nx; ++i) {
        double s = 0;
        if (i + 1 < nx) s -= p.x(i, j, k);
        if (i > 0) s += p.x(i - 1, j, k);
        if (j + 1 < ny) s -= p.y(i, j, k);
        if (j > 0) s += p.y(i, j - 1, k);
        if (k + 1 < nz) s -= wz * p.z(i, j, k);
        if (k > 0) s += wz * p.z(i, j, k - 1);
        out(i, j, k) = s;
      }
}

void project_dual(Dual& p, bool isotropic) {
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (isotropic) {
      const double n = std::sqrt(p.x[i] * p.x[i] + p.y[i] * p.y[i] + p.z[i] * p.z[i]);
      if (n > 1) {
        p.x[i] /= n;
        p.y[i] /= n;
        p.z[i] /= n;
      }
    } else {
      p.x[i] = std::clamp(p.x[i], -1.0, 1.0);
      p.y[i] = std::clamp(p.y[i], -1.0, 1.0);
      p.z[i] = std::clamp(p.z[i], -1.0, 1.0);
    }
  }
}

void project_primal(RealVolume& f, bool nonneg) {
  if (!nonneg) return;
  for (double& v : f.span()) v = std::max(v, 0.0);
}

} // namespace

double tv_norm(const RealVolume& f, const TvOptions& opt) {
  Dual d(f.nx(), f.ny(), f.nz());
  grad(f, opt.axial_weight, d);
  double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (opt.isotropic)
      s += std::sqrt(d.x[i] * d.x[i] + d.y[i] * d.y[i] + d.z[i] * d.z[i]);
    else
      s += std::abs(d.x[i]) + std::abs(d.y[i]) + std::abs(d.z[i]);
  }
  return s;
}

RealVolume tv_prox(const RealVolume& g, double threshold, bool nonneg, int inner_iters,
                   const TvOptions& opt) {
  if (threshold < 0) throw std::invalid_argument("tv_prox: threshold must be nonnegative");
  RealVolume x = g;
  if (threshold == 0 || inner_iters <= 0) {
    project_primal(x, nonneg);
    return x;
  }
  const std::size_t nx = g.nx(), ny = g.ny(), nz = g.nz();
  const double wz = opt.axial_weight;
  // ||D||^2 <= 4 (1 + 1 + wz^2).
  const double step = 1.0 / (4.0 * (2.0 + wz * wz) * threshold);

  Dual p(nx, ny, nz), p_prev(nx, ny, nz), r(nx, ny, nz), d(nx, ny, nz);
  RealVolume div(nx, ny, nz);
  double t = 1;
  for (int it = 0; it < inner_iters; ++it) {
    grad_adjoint(r, wz, div);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = g[i] - threshold * div[i];
    project_primal(x, nonneg);
    grad(x, wz, d);
    std::swap(p_prev, p);
    for (std::size_t i = 0; i < x.size(); ++i) {
      p.x[i] = r.x[i] + step * d.x[i];
      p.y[i] = r.y[i] + step * d.y[i];
      p.z[i] = r.z[i] + step * d.z[i];
    }
    project_dual(p, opt.isotropic);
    const double t_next = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    const double beta = (t - 1) / t_next;
    for (std::size_t i = 0; i < x.size(); ++i) {
      r.x[i] = p.x[i] + beta * (p.x[i] - p_prev.x[i]);
      r.y[i] = p.y[i] + beta * (p.y[i] - p_prev.y[i]);
      r.z[i] = p.z[i] + beta * (p.z[i] - p_prev.z[i]);
    }
    t = t_next;
  }
  grad_adjoint(p, wz, div);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = g[i] - threshold * div[i];
  project_primal(x, nonneg);
  return x;
}

} // namespace bornholo
