#include "lrkkt/ipm.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrkkt {

namespace {

double clamp_interior(double v, double lo, double hi) {
  if (std::isfinite(lo) && std::isfinite(hi)) {
    const double margin = 0.05 * (hi - lo);
    if (v > lo + margin && v < hi - margin) return v;
    return 0.5 * (lo + hi);
  }
  if (std::isfinite(lo)) return std::max(v, lo + 1.0);
  if (std::isfinite(hi)) return std::min(v, hi - 1.0);
  return v;
}

/// Largest step keeping q + a*dq > 0; returns +inf when unconstrained.
double pos_limit(double q, double dq) {
  if (dq >= 0.0) return kInf;
  return -q / dq;
}

/// Largest step keeping smat(x) + a*smat(dx) positive semidefinite.
double psd_limit(const ConeSpec& spec, const VectorXd& x, const VectorXd& dx) {
  double lim = kInf;
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd X = smat(x.segment(off, svec_dim(s)));
    const MatrixXd dX = smat(dx.segment(off, svec_dim(s)));
    const EigDecomp d = eig_sym(X);
    const MatrixXd xih = sym_inv_sqrt(d);
    const MatrixXd M = xih * dX * xih;
    const EigDecomp dm = eig_sym(0.5 * (M + M.transpose()));
    const double gamma = dm.values[dm.values.size() - 1];
    if (gamma < 0.0) lim = std::min(lim, -1.0 / gamma);
  }
  return lim;
}

}  // namespace

double complementarity_average(const SubproblemData& data, const IterateState& st) {
  double sum = 0.0;
  long count = 0;
  const ConeSpec& spec = data.cone;
  for (int i = 0; i < spec.nonneg_dim; ++i) {
    sum += st.x[i] * st.z[i];
    ++count;
  }
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    sum += st.x.segment(off, svec_dim(s)).dot(st.z.segment(off, svec_dim(s)));
    count += s;
  }
  if (!spec.empty() && data.trace_mode == TraceMode::UPPER_BOUND) {
    sum += st.sigma * st.zeta;
    ++count;
  }
  const auto eq = data.equality_rows();
  std::vector<bool> is_eq(data.num_rows(), false);
  for (int i : eq) is_eq[i] = true;
  for (int i = 0; i < data.num_rows(); ++i) {
    if (is_eq[i]) continue;
    if (std::isfinite(data.a_lo[i])) {
      sum += (st.w[i] - data.a_lo[i]) * st.s_alo[i];
      ++count;
    }
    if (std::isfinite(data.a_hi[i])) {
      sum += (data.a_hi[i] - st.w[i]) * st.s_ahi[i];
      ++count;
    }
  }
  for (int i = 0; i < data.m; ++i) {
    if (std::isfinite(data.y_lo[i])) {
      sum += (st.y[i] - data.y_lo[i]) * st.s_ylo[i];
      ++count;
    }
    if (std::isfinite(data.y_hi[i])) {
      sum += (data.y_hi[i] - st.y[i]) * st.s_yhi[i];
      ++count;
    }
  }
  if (count == 0)
    throw std::invalid_argument("complementarity_average: no complementarity pairs");
  return sum / static_cast<double>(count);
}

IterateState ipm_initialize(const SubproblemData& data) {
  data.validate();
  IterateState st;
  st.y.resize(data.m);
  for (int i = 0; i < data.m; ++i) {
    if (std::isfinite(data.y_lo[i]) && std::isfinite(data.y_hi[i]))
      st.y[i] = 0.5 * (data.y_lo[i] + data.y_hi[i]);
    else
      st.y[i] = clamp_interior(0.0, data.y_lo[i], data.y_hi[i]);
  }

  const int hA = data.num_rows();
  st.w.resize(hA);
  if (hA > 0) {
    const VectorXd Ay = data.A * st.y;
    for (int i = 0; i < hA; ++i) {
      if (data.a_lo[i] == data.a_hi[i])
        st.w[i] = data.a_lo[i];
      else
        st.w[i] = clamp_interior(Ay[i], data.a_lo[i], data.a_hi[i]);
    }
  }

  double mu0 = 1.0;
  if (!data.cone.empty()) {
    const int units = data.cone.trace_units();
    const double target =
        data.trace_mode == TraceMode::UPPER_BOUND ? 0.5 * data.tau : data.tau;
    const double c = target / units;
    st.x = c * cone_identity(data.cone);
    st.z = cone_identity(data.cone);
    mu0 = c;
    if (data.trace_mode == TraceMode::UPPER_BOUND) {
      st.sigma = data.tau - target;
      st.zeta = mu0 / st.sigma;
    } else {
      st.sigma = 0.0;
      st.zeta = 1.0;
    }
  } else {
    st.x.resize(0);
    st.z.resize(0);
    st.sigma = 0.0;
    st.zeta = 1.0;
  }

  st.s = VectorXd::Zero(hA);
  st.s_alo = VectorXd::Zero(hA);
  st.s_ahi = VectorXd::Zero(hA);
  const auto eq = data.equality_rows();
  std::vector<bool> is_eq(hA, false);
  for (int i : eq) is_eq[i] = true;
  for (int i = 0; i < hA; ++i) {
    if (is_eq[i]) continue;
    if (std::isfinite(data.a_lo[i])) st.s_alo[i] = mu0 / (st.w[i] - data.a_lo[i]);
    if (std::isfinite(data.a_hi[i])) st.s_ahi[i] = mu0 / (data.a_hi[i] - st.w[i]);
  }
  st.s_ylo = VectorXd::Zero(data.m);
  st.s_yhi = VectorXd::Zero(data.m);
  for (int i = 0; i < data.m; ++i) {
    if (std::isfinite(data.y_lo[i])) st.s_ylo[i] = mu0 / (st.y[i] - data.y_lo[i]);
    if (std::isfinite(data.y_hi[i])) st.s_yhi[i] = mu0 / (data.y_hi[i] - st.y[i]);
  }
  st.mu = mu0;
  return st;
}

IPMResult ipm_run(const SubproblemData& data, const IPMConfig& config) {
  if (!(config.mu_reduction > 0.0 && config.mu_reduction < 1.0))
    throw std::invalid_argument("ipm_run: mu_reduction must lie in (0,1)");
  if (!(config.step_fraction > 0.0 && config.step_fraction < 1.0))
    throw std::invalid_argument("ipm_run: step_fraction must lie in (0,1)");

  IPMResult out;
  IterateState st = ipm_initialize(data);
  const double mu0 = st.mu;
  const double mu_min = config.mu_min > 0.0 ? config.mu_min : 1e-8 * mu0;
  const auto eq = data.equality_rows();
  std::vector<bool> is_eq(data.num_rows(), false);
  for (int i : eq) is_eq[i] = true;

  for (int it = 0; it < config.max_newton; ++it) {
    const double avg = complementarity_average(data, st);
    if (avg <= mu_min) break;
    st.mu = config.mu_reduction * avg;

    const KKTContext ctx = build_context(data, st);
    const KKTRhs rhs = kkt_rhs(ctx, data, st);
    const DenseKKT K = dense_assemble(ctx, data);
    const VectorXd sol = dense_solve(K, rhs.stacked(data.has_trace_row()));

    KKTSnapshot snap;
    snap.index = it;
    snap.mu = st.mu;
    snap.state = st;
    snap.rhs = rhs;
    snap.ds_solution = sol;
    out.trace.push_back(snap);

    const int m = data.m;
    const int hA = data.num_rows();
    const int nt = data.cone.dim();
    const VectorXd dy = sol.head(m);
    const VectorXd ds = sol.segment(m, hA);
    const VectorXd dx = sol.segment(m + hA, nt);
    const double dzeta = data.has_trace_row() ? sol[sol.size() - 1] : 0.0;
    const NewtonStep step = expand_step(ctx, data, st, dy, ds, dx, dzeta);

    double lim = kInf;
    for (int i = 0; i < data.cone.nonneg_dim; ++i) {
      lim = std::min(lim, pos_limit(st.x[i], step.dx[i]));
      lim = std::min(lim, pos_limit(st.z[i], step.dz[i]));
    }
    if (!data.cone.psd_dims.empty()) {
      lim = std::min(lim, psd_limit(data.cone, st.x, step.dx));
      lim = std::min(lim, psd_limit(data.cone, st.z, step.dz));
    }
    if (!data.cone.empty() && data.trace_mode == TraceMode::UPPER_BOUND) {
      lim = std::min(lim, pos_limit(st.sigma, step.dsigma));
      lim = std::min(lim, pos_limit(st.zeta, step.dzeta));
    }
    for (int i = 0; i < hA; ++i) {
      if (is_eq[i]) continue;
      if (std::isfinite(data.a_lo[i])) {
        lim = std::min(lim, pos_limit(st.w[i] - data.a_lo[i], step.dw[i]));
        lim = std::min(lim, pos_limit(st.s_alo[i], step.ds_alo[i]));
      }
      if (std::isfinite(data.a_hi[i])) {
        lim = std::min(lim, pos_limit(data.a_hi[i] - st.w[i], -step.dw[i]));
        lim = std::min(lim, pos_limit(st.s_ahi[i], step.ds_ahi[i]));
      }
    }
    for (int i = 0; i < m; ++i) {
      if (std::isfinite(data.y_lo[i])) {
        lim = std::min(lim, pos_limit(st.y[i] - data.y_lo[i], step.dy[i]));
        lim = std::min(lim, pos_limit(st.s_ylo[i], step.ds_ylo[i]));
      }
      if (std::isfinite(data.y_hi[i])) {
        lim = std::min(lim, pos_limit(data.y_hi[i] - st.y[i], -step.dy[i]));
        lim = std::min(lim, pos_limit(st.s_yhi[i], step.ds_yhi[i]));
      }
    }

    const double alpha = std::min(1.0, config.step_fraction * lim);
    if (alpha < 1e-10)
      throw std::runtime_error("ipm_run: step length collapsed at iteration " +
                               std::to_string(it) + " (alpha = " + std::to_string(alpha) + ")");

    st.y += alpha * step.dy;
    st.s += alpha * step.ds;
    st.w += alpha * step.dw;
    if (!data.cone.empty()) {
      st.x += alpha * step.dx;
      st.z += alpha * step.dz;
      st.zeta += alpha * step.dzeta;
      if (data.trace_mode == TraceMode::UPPER_BOUND) st.sigma += alpha * step.dsigma;
    }
    st.s_alo += alpha * step.ds_alo;
    st.s_ahi += alpha * step.ds_ahi;
    st.s_ylo += alpha * step.ds_ylo;
    st.s_yhi += alpha * step.ds_yhi;
  }

  out.mu_final = complementarity_average(data, st);
  st.mu = out.mu_final;
  out.final_state = st;
  return out;
}

}  // namespace lrkkt
