#include "bornholo/solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace bornholo {

void SolverConfig::validate() const {
  if (order_K < 1) throw std::invalid_argument("solver order_K must be >= 1");
  if (!(tau >= 0)) throw std::invalid_argument("tau must be nonnegative");
  if (!(ls_shrink > 0 && ls_shrink < 1)) throw std::invalid_argument("ls_shrink must lie in (0, 1)");
  if (max_iters < 0 || tv_inner_iters < 0 || ls_max_trials < 1)
    throw std::invalid_argument("iteration counts must be nonnegative");
}

namespace {

ComplexPlane as_complex(const RealPlane& p) {
  ComplexPlane out(p.nx(), p.ny());
  for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i];
  return out;
}

void check_measurement(const PropagationKernels& k, const RealPlane& E) {
  if (E.nx() != k.grid().nx() || E.ny() != k.grid().ny())
    throw DimensionMismatch("measurement does not match grid");
}

} // namespace

DataFidelity data_fidelity(const RealVolume& f, const RealPlane& E_meas,
                           const PropagationKernels& kernels, const InternalField& u_in,
                           int order_K) {
  check_measurement(kernels, E_meas);
  DataFidelity out;
  out.fields = born_fields(f, u_in, kernels, {order_K, ScatteringMode::full, false});
  const ComplexPlane E = scattered_field(f, out.fields.back(), kernels);
  out.residual = RealPlane(E.nx(), E.ny());
  double s = 0;
  for (std::size_t i = 0; i < E.size(); ++i) {
    const double r = E[i].real() - E_meas[i];
    out.residual[i] = r;
    s += r * r;
  }
  out.cost = 0.5 * s;
  return out;
}

RealVolume gradient(const RealVolume& f, const RealPlane& residual,
                    const std::vector<InternalField>& fields, const PropagationKernels& kernels) {
  if (fields.empty()) throw std::invalid_argument("gradient: no Born fields supplied");
  check_measurement(kernels, residual);
  const std::size_t K = fields.size();
  const ComplexVolume b = apply_H_adjoint(kernels, as_complex(residual));
  require_same_shape(f, b, "gradient");

  RealVolume g(f.nx(), f.ny(), f.nz());
  const ComplexVolume& uK = fields[K - 1].values;
  ComplexVolume a(f.nx(), f.ny(), f.nz());
  for (std::size_t i = 0; i < g.size(); ++i) {
    g[i] = (std::conj(uK[i]) * b[i]).real();
    a[i] = f[i] * b[i];
  }
  // [du_k/df]^H a = diag(conj u_{k-1}) G^H a + [du_{k-1}/df]^H diag(f) G^H a, du_1/df = 0.
  for (std::size_t k = K; k >= 2; --k) {
    const ComplexVolume c = apply_G_adjoint(kernels, a, GMode::full);
    const ComplexVolume& u_prev = fields[k - 2].values;
    for (std::size_t i = 0; i < g.size(); ++i) {
      g[i] += (std::conj(u_prev[i]) * c[i]).real();
      a[i] = f[i] * c[i];
    }
  }
  return g;
}

RealVolume gradient(const RealVolume& f, const RealPlane& residual,
                    const PropagationKernels& kernels, const InternalField& u_in, int order_K) {
  const auto fields = born_fields(f, u_in, kernels, {order_K, ScatteringMode::full, false});
  return gradient(f, residual, fields, kernels);
}

double first_born_lipschitz(const PropagationKernels& kernels, const InternalField& u_in,
                            int iterations) {
  const PhysicalGrid& g = kernels.grid();
  RealVolume x(g.nx(), g.ny(), g.nz(), 1.0);
  double lambda = 0;
  for (int it = 0; it < iterations; ++it) {
    const double nx = norm2(x.span());
    if (nx == 0) return 0;
    for (double& v : x.span()) v /= nx;
    ComplexVolume src(g.nx(), g.ny(), g.nz());
    for (std::size_t i = 0; i < src.size(); ++i) src[i] = u_in.values[i] * x[i];
    const RealPlane y = real_part(apply_H(kernels, src));
    const ComplexVolume back = apply_H_adjoint(kernels, as_complex(y));
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = (std::conj(u_in.values[i]) * back[i]).real();
    lambda = norm2(x.span());
  }
  return lambda;
}

SolverState reconstruct(const RealPlane& E_meas, const PropagationKernels& kernels,
                        const InternalField& u_in, const SolverConfig& cfg,
                        const IterationCallback& on_iteration) {
  cfg.validate();
  check_measurement(kernels, E_meas);
  const TvOptions tv = cfg.tv_options();

  SolverState st;
  st.f = kernels.grid().zero_volume();
  if (cfg.alpha0 > 0) {
    st.alpha = cfg.alpha0;
  } else {
    const double L = first_born_lipschitz(kernels, u_in);
    st.alpha = L > 0 ? 1.0 / L : 1.0;
  }

  DataFidelity cur = data_fidelity(st.f, E_meas, kernels, u_in, cfg.order_K);
  double tv_cur = cfg.tau * tv_norm(st.f, tv);
  st.residual = cur.residual;
  st.cost_history.push_back({0, cur.cost, tv_cur, cur.cost + tv_cur, st.alpha});
  if (on_iteration) on_iteration(st);

  // Momentum state (monotone FISTA). Without momentum the base point is the iterate.
  RealVolume prev_f = st.f;
  RealVolume prev_z = st.f;
  double theta = 1.0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double total = cur.cost + tv_cur;
    RealVolume base;
    DataFidelity base_df;
    const bool extrapolate = cfg.momentum && it > 1;
    if (extrapolate) {
      const double theta_next = 0.5 * (1 + std::sqrt(1 + 4 * theta * theta));
      base = st.f;
      for (std::size_t i = 0; i < base.size(); ++i)
        base[i] += (theta / theta_next) * (prev_z[i] - st.f[i]) +
                   ((theta - 1) / theta_next) * (st.f[i] - prev_f[i]);
      theta = theta_next;
      base_df = data_fidelity(base, E_meas, kernels, u_in, cfg.order_K);
    }
    const RealVolume& x0 = extrapolate ? base : st.f;
    const DataFidelity& d0 = extrapolate ? base_df : cur;
    const RealVolume grad = gradient(x0, d0.residual, d0.fields, kernels);

    bool accepted = false;
    double alpha = st.alpha;
    RealVolume trial;
    DataFidelity next;
    double tv_next = 0;
    for (int t = 0; t < cfg.ls_max_trials; ++t) {
      RealVolume step = x0;
      for (std::size_t i = 0; i < step.size(); ++i) step[i] -= alpha * grad[i];
      trial = tv_prox(step, cfg.tau * alpha, cfg.nonneg, cfg.tv_inner_iters, tv);
      next = data_fidelity(trial, E_meas, kernels, u_in, cfg.order_K);
      tv_next = cfg.tau * tv_norm(trial, tv);

      double lin = 0, sq = 0;
      for (std::size_t i = 0; i < trial.size(); ++i) {
        const double d = trial[i] - x0[i];
        lin += grad[i] * d;
        sq += d * d;
      }
      const double model = d0.cost + lin + sq / (2 * alpha);
      const double slack = 1e-12 * (std::abs(total) + std::numeric_limits<double>::min());
      // Plain steps must also lower the total objective; momentum steps fall back below.
      const bool descent = extrapolate || next.cost + tv_next <= total + slack;
      if (next.cost <= model + slack && descent) {
        accepted = true;
        break;
      }
      alpha *= cfg.ls_shrink;
    }

    if (!accepted) {
      st.line_search_failed = true;
      std::ostringstream os;
      os << "line search failed at iteration " << it << " after " << cfg.ls_max_trials
         << " trials (alpha reached " << alpha << ")";
      st.diagnostic = os.str();
      break;
    }

    bool held = false;
    if (cfg.momentum) {
      prev_f = st.f;
      prev_z = trial;
      if (next.cost + tv_next > total) {
        // Keep the current iterate; only the momentum sequence advances.
        trial = st.f;
        next = cur;
        tv_next = tv_cur;
        held = true;
      }
    }
    st.f = std::move(trial);
    cur = std::move(next);
    tv_cur = tv_next;
    st.alpha = alpha;
    st.residual = cur.residual;
    st.iterations = it;
    const double new_total = cur.cost + tv_cur;
    st.cost_history.push_back({it, cur.cost, tv_cur, new_total, alpha});
    if (on_iteration) on_iteration(st);

    const double change = std::abs(total - new_total);
    if (total == 0 || (!held && change <= cfg.stop_tol * std::abs(total))) break;
  }
  return st;
}

RealVolume backpropagate(const RealPlane& E_meas, const PropagationKernels& kernels,
                         const InternalField& u_in) {
  check_measurement(kernels, E_meas);
  const ComplexVolume b = apply_H_adjoint(kernels, as_complex(E_meas));
  RealVolume x(b.nx(), b.ny(), b.nz());
  ComplexVolume src(b.nx(), b.ny(), b.nz());
  for (std::size_t i = 0; i < x.size(); ++i) {
    x[i] = (std::conj(u_in.values[i]) * b[i]).real();
    src[i] = u_in.values[i] * x[i];
  }
  const RealPlane Ax = real_part(apply_H(kernels, src));
  const double denom = dot(Ax.span(), Ax.span());
  if (denom > 0) {
    const double scale = dot(Ax.span(), E_meas.span()) / denom;
    for (double& v : x.span()) v *= scale;
  }
  return x;
}

} // namespace bornholo
