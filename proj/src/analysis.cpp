#include "bornholo/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <tuple>

namespace bornholo {

double snr_db(const RealVolume& est, const RealVolume& truth) {
  require_same_shape(est, truth, "snr_db");
  double sig = 0, err = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    sig += truth[i] * truth[i];
    const double d = est[i] - truth[i];
    err += d * d;
  }
  if (sig == 0) throw DegenerateTruth("reference volume is identically zero");
  if (err == 0) return kSnrCapDb;
  return std::min(kSnrCapDb, 10 * std::log10(sig / err));
}

double contrast_ratio(const RealPlane& intensity) {
  const auto n = static_cast<double>(intensity.size());
  double mean = 0;
  for (double v : intensity.span()) mean += v;
  mean /= n;
  if (!(mean > 0)) throw ZeroMeanHologram("hologram mean intensity must be positive");
  double var = 0;
  for (double v : intensity.span()) var += (v - mean) * (v - mean);
  return std::sqrt(var / n) / mean;
}

ConvergenceReport convergence_metric(const RealVolume& f, const PropagationKernels& kernels,
                                     const InternalField& u_in, int order_K) {
  require_same_shape(f, u_in.values, "convergence_metric");
  ConvergenceReport rep;
  rep.incident_norm = norm2(u_in.values.span());
  ComplexVolume u = u_in.values;
  ComplexVolume src(f.nx(), f.ny(), f.nz());
  for (int k = 1; k <= order_K; ++k) {
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = u[i] * f[i];
    ComplexVolume next = apply_G(kernels, src, GMode::full);
    double defect = 0;
    for (std::size_t i = 0; i < next.size(); ++i) {
      next[i] += u_in.values[i];
      defect += std::norm(u[i] - next[i]);
    }
    rep.e.push_back(rep.incident_norm > 0 ? std::sqrt(defect) / rep.incident_norm : 0.0);
    u = std::move(next);
  }
  return rep;
}

ParticleSet count_particles(const RealVolume& f, const PhysicalGrid& grid, double threshold,
                            std::size_t min_voxels) {
  if (!grid.matches(f)) throw DimensionMismatch("count_particles: volume does not match grid");
  const long nx = static_cast<long>(f.nx()), ny = static_cast<long>(f.ny()),
             nz = static_cast<long>(f.nz());
  std::vector<char> visited(f.size(), 0);
  std::vector<std::size_t> stack;
  ParticleSet out;

  for (std::size_t seed = 0; seed < f.size(); ++seed) {
    if (visited[seed] || !(f[seed] > threshold)) continue;
    visited[seed] = 1;
    stack.assign(1, seed);
    std::size_t voxels = 0;
    double w = 0, sx = 0, sy = 0, sz = 0, peak = 0;
    std::map<long, std::size_t> footprint;
    while (!stack.empty()) {
      const std::size_t idx = stack.back();
      stack.pop_back();
      const long x = static_cast<long>(idx % f.nx());
      const long y = static_cast<long>((idx / f.nx()) % f.ny());
      const long z = static_cast<long>(idx / f.plane_size());
      const double v = f[idx];
      ++voxels;
      ++footprint[z];
      w += v;
      sx += v * static_cast<double>(x);
      sy += v * static_cast<double>(y);
      sz += v * static_cast<double>(z);
      peak = std::max(peak, v);
      for (long dz = -1; dz <= 1; ++dz)
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx) {
            const long X = x + dx, Y = y + dy, Z = z + dz;
            if (X < 0 || Y < 0 || Z < 0 || X >= nx || Y >= ny || Z >= nz) continue;
            const auto j = static_cast<std::size_t>((Z * ny + Y) * nx + X);
            if (visited[j] || !(f[j] > threshold)) continue;
            visited[j] = 1;
            stack.push_back(j);
          }
    }
    if (voxels < min_voxels) continue;
    std::size_t widest = 0;
    for (const auto& [z, n] : footprint) widest = std::max(widest, n);
    Particle p;
    p.x = sx / w * grid.dx();
    p.y = sy / w * grid.dy();
    const double cz = sz / w;
    p.slice = static_cast<std::size_t>(std::lround(cz));
    p.z = grid.z0() + cz * grid.slice_spacing();
    p.radius = std::sqrt(static_cast<double>(widest) * grid.dx() * grid.dy() / std::numbers::pi);
    p.contrast = peak;
    out.push_back(p);
  }
  return out;
}

MatchResult match_particles(const ParticleSet& est, const ParticleSet& truth, double tol_xy,
                            double tol_z) {
  if (!(tol_xy > 0) || !(tol_z > 0)) throw std::invalid_argument("match tolerances must be positive");
  std::vector<std::tuple<double, std::size_t, std::size_t>> cand;
  for (std::size_t i = 0; i < est.size(); ++i)
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const double a = std::hypot(est[i].x - truth[j].x, est[i].y - truth[j].y) / tol_xy;
      const double b = (est[i].z - truth[j].z) / tol_z;
      const double d2 = a * a + b * b;
      if (d2 <= 1) cand.emplace_back(d2, i, j);
    }
  std::sort(cand.begin(), cand.end());
  std::vector<char> used_e(est.size(), 0), used_t(truth.size(), 0);
  MatchResult m;
  for (const auto& [d2, i, j] : cand) {
    if (used_e[i] || used_t[j]) continue;
    used_e[i] = used_t[j] = 1;
    m.pairs.emplace_back(i, j);
  }
  const auto hits = static_cast<double>(m.pairs.size());
  m.precision = est.empty() ? 1.0 : hits / static_cast<double>(est.size());
  m.recall = truth.empty() ? 1.0 : hits / static_cast<double>(truth.size());
  return m;
}

std::vector<double> recall_by_depth(const MatchResult& m, const ParticleSet& truth,
                                    const PhysicalGrid& grid, std::size_t bins) {
  if (bins == 0) throw std::invalid_argument("recall_by_depth: bins must be positive");
  std::vector<double> total(bins, 0), hit(bins, 0);
  auto bin_of = [&](std::size_t slice) { return std::min(bins - 1, slice * bins / grid.nz()); };
  for (const Particle& p : truth) total[bin_of(p.slice)] += 1;
  for (const auto& pr : m.pairs) hit[bin_of(truth[pr.second].slice)] += 1;
  std::vector<double> out(bins);
  for (std::size_t b = 0; b < bins; ++b) out[b] = total[b] > 0 ? hit[b] / total[b] : -1.0;
  return out;
}

} // namespace bornholo
