#pragma once

#include <utility>
#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/grid.hpp"
#include "bornholo/phantom.hpp"
#include "bornholo/propagation.hpp"

namespace bornholo {

/// Cap reported when the estimate equals the truth.
inline constexpr double kSnrCapDb = 300.0;

/// 10 log10(||truth||^2 / ||est - truth||^2). Throws DegenerateTruth.
double snr_db(const RealVolume& est, const RealVolume& truth);

/// Standard deviation over mean. Throws ZeroMeanHologram.
double contrast_ratio(const RealPlane& intensity);

struct ConvergenceReport {
  std::vector<double> e;      // e[k-1] = ||(I - G diag f) u_k - u_in|| / ||u_in||
  double incident_norm = 0;
};

ConvergenceReport convergence_metric(const RealVolume& f, const PropagationKernels& kernels,
                                     const InternalField& u_in, int order_K);

/// 26-connected components of {f > threshold} with at least min_voxels voxels.
/// Centroids are value-weighted; radius is the equal-area disk of the
/// component's largest slice footprint; contrast holds the peak value.
ParticleSet count_particles(const RealVolume& f, const PhysicalGrid& grid, double threshold,
                            std::size_t min_voxels = 1);

struct MatchResult {
  double precision = 0;
  double recall = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs; // (est index, truth index)
};

/// Greedy nearest-first matching inside the ellipsoid
/// (dxy / tol_xy)^2 + (dz / tol_z)^2 <= 1. Empty denominators count as 1.
MatchResult match_particles(const ParticleSet& est, const ParticleSet& truth, double tol_xy,
                            double tol_z);

/// Recall of truth particles binned by slice index into `bins` equal depth ranges.
/// Bins without truth particles report -1.
std::vector<double> recall_by_depth(const MatchResult& m, const ParticleSet& truth,
                                    const PhysicalGrid& grid, std::size_t bins);

} // namespace bornholo
