#pragma once

#include "bornholo/array.hpp"

namespace bornholo {

struct TvOptions {
  bool isotropic = true;
  // Multiplies differences along z (slice index steps).
  double axial_weight = 1.0;
};

/// Total variation with forward differences and zero flux at the far edges.
double tv_norm(const RealVolume& f, const TvOptions& opt = {});

/// argmin_{f in C} 0.5 ||f - g||^2 + threshold * TV(f), C = {f >= 0} when
/// nonneg, else everything. Dual fast gradient projection with a fixed
/// number of inner iterations. threshold = 0 reduces to the projection onto C.
RealVolume tv_prox(const RealVolume& g, double threshold, bool nonneg, int inner_iters,
                   const TvOptions& opt = {});

} // namespace bornholo
