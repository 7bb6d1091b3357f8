#pragma once

#include <functional>
#include <string>
#include <vector>

#include "bornholo/array.hpp"
#include "bornholo/forward.hpp"
#include "bornholo/propagation.hpp"
#include "bornholo/tv.hpp"

namespace bornholo {

struct SolverConfig {
  int order_K = 1;
  double tau = 0;             // TV weight
  int max_iters = 100;
  int tv_inner_iters = 10;
  bool tv_isotropic = true;
  double tv_axial_weight = 1.0;
  double alpha0 = 0;          // <= 0: 1 / ||Re H diag(u_in)||^2 by power iteration
  double ls_shrink = 0.5;
  int ls_max_trials = 40;
  bool nonneg = true;
  double stop_tol = 1e-7;     // relative change of the total objective
  bool momentum = false;      // monotone FISTA extrapolation

  void validate() const;
  TvOptions tv_options() const { return {tv_isotropic, tv_axial_weight}; }
};

struct CostRecord {
  int iteration = 0;
  double data_term = 0;
  double tv_term = 0; // tau * TV(f)
  double total = 0;
  double alpha = 0;
};

struct SolverState {
  RealVolume f;
  std::vector<CostRecord> cost_history;
  RealPlane residual; // E_est - E_meas
  double alpha = 0;
  int iterations = 0;
  bool line_search_failed = false;
  std::string diagnostic;
};

/// Data term 1/2 ||E_meas - Re{E_est(f)}||^2 with everything the gradient needs.
struct DataFidelity {
  double cost = 0;
  RealPlane residual;                // Re{E_est} - E_meas
  std::vector<InternalField> fields; // u_1..u_K
};

DataFidelity data_fidelity(const RealVolume& f, const RealPlane& E_meas,
                           const PropagationKernels& kernels, const InternalField& u_in,
                           int order_K);

/// Gradient of the data term, by the K-order adjoint recursion. `fields` are
/// u_1..u_K for the same f.
RealVolume gradient(const RealVolume& f, const RealPlane& residual,
                    const std::vector<InternalField>& fields, const PropagationKernels& kernels);

/// Recomputes the Born fields, then evaluates the gradient.
RealVolume gradient(const RealVolume& f, const RealPlane& residual,
                    const PropagationKernels& kernels, const InternalField& u_in, int order_K);

/// Largest squared singular value of f -> Re{H diag(u_in) f}, by power iteration.
double first_born_lipschitz(const PropagationKernels& kernels, const InternalField& u_in,
                            int iterations = 30);

using IterationCallback = std::function<void(const SolverState&)>;

/// Proximal gradient with backtracking on the TV-regularized, optionally
/// nonnegative least-squares problem. Starts from f = 0.
SolverState reconstruct(const RealPlane& E_meas, const PropagationKernels& kernels,
                        const InternalField& u_in, const SolverConfig& cfg,
                        const IterationCallback& on_iteration = {});

/// Back-propagation baseline: Re{conj(u_in) H^H E_meas}, scaled by the
/// least-squares factor that best fits E_meas under the first-Born model.
RealVolume backpropagate(const RealPlane& E_meas, const PropagationKernels& kernels,
                         const InternalField& u_in);

} // namespace bornholo
