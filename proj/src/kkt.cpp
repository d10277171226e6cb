#include "lrkkt/kkt.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrkkt {

VectorXd LinearMap::mul(const VectorXd& v) const {
  if (v.size() != cols_) throw std::invalid_argument("LinearMap::mul: dimension mismatch");
  if (has_dense()) return dense_ * v;
  if (!mul_) throw std::logic_error("LinearMap: no multiplication available");
  return mul_(v);
}

VectorXd LinearMap::mul_transpose(const VectorXd& v) const {
  if (v.size() != rows_)
    throw std::invalid_argument("LinearMap::mul_transpose: dimension mismatch");
  if (has_dense()) return dense_.transpose() * v;
  if (!mul_t_) throw std::logic_error("LinearMap: no transposed multiplication available");
  return mul_t_(v);
}

VectorXd LinearMap::transpose_col(int j) const {
  if (j < 0 || j >= rows_) throw std::invalid_argument("LinearMap::transpose_col: bad index");
  if (has_dense()) return dense_.row(j).transpose();
  VectorXd e = VectorXd::Zero(rows_);
  e[j] = 1.0;
  return mul_t_(e);
}

std::vector<int> SubproblemData::equality_rows() const {
  std::vector<int> rows;
  for (int i = 0; i < num_rows(); ++i)
    if (a_lo[i] == a_hi[i]) rows.push_back(i);
  return rows;
}

void SubproblemData::validate() const {
  if (m < 1) throw std::invalid_argument("SubproblemData: m must be positive");
  if (prox_diag.size() != m || (prox_diag.array() <= 0.0).any())
    throw std::invalid_argument("SubproblemData: prox_diag must be positive of length m");
  if (prox_lowrank.size() > 0 && prox_lowrank.rows() != m)
    throw std::invalid_argument("SubproblemData: prox_lowrank row count mismatch");
  if (b.size() != m) throw std::invalid_argument("SubproblemData: b length mismatch");
  cone.validate();
  if (B0.size() != cone.dim())
    throw std::invalid_argument("SubproblemData: B0 length mismatch");
  if (B.rows() != cone.dim() || B.cols() != m)
    throw std::invalid_argument("SubproblemData: B shape mismatch");
  const int hA = num_rows();
  if (A.size() > 0 && A.cols() != m)
    throw std::invalid_argument("SubproblemData: A column count mismatch");
  if (a_lo.size() != hA || a_hi.size() != hA)
    throw std::invalid_argument("SubproblemData: A bound length mismatch");
  for (int i = 0; i < hA; ++i) {
    if (a_lo[i] > a_hi[i])
      throw std::invalid_argument("SubproblemData: a_lo > a_hi in row " + std::to_string(i));
    if (std::isinf(a_lo[i]) && std::isinf(a_hi[i]))
      throw std::invalid_argument("SubproblemData: row " + std::to_string(i) +
                                  " of A has no finite bound");
  }
  if (y_lo.size() != m || y_hi.size() != m)
    throw std::invalid_argument("SubproblemData: box bound length mismatch");
  for (int i = 0; i < m; ++i) {
    if (y_lo[i] >= y_hi[i])
      throw std::invalid_argument("SubproblemData: fixed or crossed box coordinate " +
                                  std::to_string(i));
  }
  if (!(tau > 0.0)) throw std::invalid_argument("SubproblemData: tau must be positive");
}

int full_order(const SubproblemData& data) {
  return data.m + data.num_rows() + data.cone.dim() + (data.has_trace_row() ? 1 : 0);
}

namespace {

void check_slack(double slack, double dual, const char* what, int i) {
  if (!(slack > 0.0) || !(dual > 0.0))
    throw std::invalid_argument(std::string("build_context: interiority violated for ") +
                                what + " at index " + std::to_string(i));
}

VectorXd prox_apply(const SubproblemData& data, const VectorXd& v) {
  VectorXd out = data.prox_diag.cwiseProduct(v);
  if (data.prox_lowrank.size() > 0)
    out.noalias() += data.prox_lowrank * (data.prox_lowrank.transpose() * v);
  return out;
}

}  // namespace

KKTContext build_context(const SubproblemData& data, const IterateState& st) {
  data.validate();
  const int m = data.m;
  const int hA = data.num_rows();
  KKTContext ctx;
  ctx.eq_rows = data.equality_rows();
  std::vector<bool> is_eq(hA, false);
  for (int i : ctx.eq_rows) is_eq[i] = true;

  ctx.d_w = VectorXd::Zero(hA);
  ctx.c_w = VectorXd::Zero(hA);
  for (int i = 0; i < hA; ++i) {
    if (is_eq[i]) continue;
    if (std::isfinite(data.a_lo[i])) {
      const double slack = st.w[i] - data.a_lo[i];
      check_slack(slack, st.s_alo[i], "lower A bound", i);
      ctx.d_w[i] += st.s_alo[i] / slack;
      ctx.c_w[i] += 1.0 / slack;
    }
    if (std::isfinite(data.a_hi[i])) {
      const double slack = data.a_hi[i] - st.w[i];
      check_slack(slack, st.s_ahi[i], "upper A bound", i);
      ctx.d_w[i] += st.s_ahi[i] / slack;
      ctx.c_w[i] -= 1.0 / slack;
    }
  }

  ctx.d_y = VectorXd::Zero(m);
  ctx.c_y = VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (std::isfinite(data.y_lo[i])) {
      const double slack = st.y[i] - data.y_lo[i];
      check_slack(slack, st.s_ylo[i], "lower box bound", i);
      ctx.d_y[i] += st.s_ylo[i] / slack;
      ctx.c_y[i] += 1.0 / slack;
    }
    if (std::isfinite(data.y_hi[i])) {
      const double slack = data.y_hi[i] - st.y[i];
      check_slack(slack, st.s_yhi[i], "upper box bound", i);
      ctx.d_y[i] += st.s_yhi[i] / slack;
      ctx.c_y[i] -= 1.0 / slack;
    }
  }

  ctx.D = data.prox_diag + ctx.d_y;

  if (!data.cone.empty()) {
    // In the equality case zeta is a free multiplier and only zeta^{-1} sigma
    // = 0 enters the scaling.
    const bool ub = data.trace_mode == TraceMode::UPPER_BOUND;
    ctx.scaling = build_scaling(data.cone, st.x, st.z, ub ? st.zeta : 1.0,
                                ub ? st.sigma : 0.0);
    ctx.BtXone = data.B.mul_transpose(ctx.scaling.scaled_trace_vec);
  } else {
    ctx.BtXone = VectorXd::Zero(m);
  }

  const VectorXd dinv = ctx.D.cwiseInverse();
  ctx.col_norms_sq.resize(data.cone.dim());
  if (data.B.has_dense()) {
    const MatrixXd& Bd = data.B.dense();
    for (int j = 0; j < Bd.rows(); ++j)
      ctx.col_norms_sq[j] = Bd.row(j).transpose().cwiseAbs2().dot(dinv);
  } else {
    for (int j = 0; j < data.cone.dim(); ++j)
      ctx.col_norms_sq[j] = data.B.transpose_col(j).cwiseAbs2().dot(dinv);
  }
  return ctx;
}

VectorXd KKTRhs::stacked(bool with_trace_row) const {
  VectorXd out(r_y.size() + r_s.size() + r_x.size() + (with_trace_row ? 1 : 0));
  out << r_y, r_s, r_x;
  if (with_trace_row) out[out.size() - 1] = r_zeta;
  return out;
}

VectorXd NewtonStep::stacked(bool with_trace_row) const {
  VectorXd out(dy.size() + ds.size() + dx.size() + (with_trace_row ? 1 : 0));
  out << dy, ds, dx;
  if (with_trace_row) out[out.size() - 1] = dzeta;
  return out;
}

KKTRhs kkt_rhs(const KKTContext& ctx, const SubproblemData& data, const IterateState& st) {
  const double mu = st.mu;
  KKTRhs rhs;
  VectorXd grad = prox_apply(data, st.y) + data.b;
  if (!data.cone.empty()) grad.noalias() += data.B.mul_transpose(st.x);
  if (data.num_rows() > 0) grad.noalias() += data.A.transpose() * st.s;
  rhs.r_y = -grad + mu * ctx.c_y;

  rhs.r_s.resize(data.num_rows());
  if (data.num_rows() > 0) {
    const VectorXd Ay = data.A * st.y;
    std::vector<bool> is_eq(data.num_rows(), false);
    for (int i : ctx.eq_rows) is_eq[i] = true;
    for (int i = 0; i < data.num_rows(); ++i) {
      rhs.r_s[i] = -(Ay[i] - st.w[i]);
      if (!is_eq[i]) rhs.r_s[i] += (st.s[i] + mu * ctx.c_w[i]) / ctx.d_w[i];
    }
  }

  if (!data.cone.empty()) {
    VectorXd primal = data.B.mul(st.y) + data.B0;
    primal -= st.zeta * cone_identity(data.cone);
    rhs.r_x = -primal - mu * cone_inverse(data.cone, st.x);
    rhs.r_zeta = -(data.tau - cone_trace(data.cone, st.x));
    if (data.trace_mode == TraceMode::UPPER_BOUND) rhs.r_zeta += mu / st.zeta;
  } else {
    rhs.r_x.resize(0);
    rhs.r_zeta = 0.0;
  }
  return rhs;
}

VectorXd apply_full_kkt(const KKTContext& ctx, const SubproblemData& data,
                        const VectorXd& delta) {
  const int m = data.m;
  const int hA = data.num_rows();
  const int nt = data.cone.dim();
  if (delta.size() != full_order(data))
    throw std::invalid_argument("apply_full_kkt: dimension mismatch");
  const VectorXd dy = delta.head(m);
  const VectorXd ds = delta.segment(m, hA);
  const VectorXd dx = delta.segment(m + hA, nt);
  const double dzeta = data.has_trace_row() ? delta[m + hA + nt] : 0.0;

  VectorXd row1 = prox_apply(data, dy) + ctx.d_y.cwiseProduct(dy);
  if (hA > 0) row1.noalias() += data.A.transpose() * ds;
  if (nt > 0) row1.noalias() += data.B.mul_transpose(dx);

  VectorXd row2(hA);
  if (hA > 0) {
    row2 = data.A * dy;
    std::vector<bool> is_eq(hA, false);
    for (int i : ctx.eq_rows) is_eq[i] = true;
    for (int i = 0; i < hA; ++i)
      if (!is_eq[i]) row2[i] -= ds[i] / ctx.d_w[i];
  }

  VectorXd out(full_order(data));
  out.head(m) = row1;
  out.segment(m, hA) = row2;
  if (nt > 0) {
    VectorXd row3 = data.B.mul(dy) - ctx.scaling.apply_inverse(dx);
    row3 -= dzeta * cone_identity(data.cone);
    out.segment(m + hA, nt) = row3;
    out[m + hA + nt] = -cone_trace(data.cone, dx) + ctx.scaling.zeta_inv_sigma * dzeta;
  }
  return out;
}

VectorXd apply_schur_H(const KKTContext& ctx, const SubproblemData& data,
                       const VectorXd& v) {
  if (v.size() != data.m) throw std::invalid_argument("apply_schur_H: dimension mismatch");
  VectorXd out = prox_apply(data, v) + ctx.d_y.cwiseProduct(v);
  if (data.num_rows() > 0)
    out.noalias() += data.A.transpose() * ctx.d_w.cwiseProduct(data.A * v);
  if (!data.cone.empty()) {
    const VectorXd Bv = data.B.mul(v);
    out.noalias() += data.B.mul_transpose(ctx.scaling.apply(Bv));
    out.noalias() -= ctx.BtXone * (ctx.BtXone.dot(v) / ctx.scaling.eta);
  }
  return out;
}

int gram_cols(const KKTContext& ctx, const SubproblemData& data) {
  (void)ctx;
  return static_cast<int>(data.prox_lowrank.cols()) + data.num_rows() + data.cone.dim();
}

namespace {

// (I - F^T1 (F^T1)^T / eta)^{1/2} p
// = p - (1 - sqrt(zeta^{-1} sigma / eta)) <n,p> n with n = F^T1 / ||F^T1||.
VectorXd trace_rank1_sqrt(const BlockScaling& S, const VectorXd& p) {
  if (S.trace_quad <= 0.0) return p;
  const double coef = 1.0 - std::sqrt(S.zeta_inv_sigma / S.eta);
  const VectorXd n = S.factor_trace_vec / std::sqrt(S.trace_quad);
  return p - coef * n.dot(p) * n;
}

}  // namespace

VectorXd apply_V(const KKTContext& ctx, const SubproblemData& data, const VectorXd& u) {
  if (u.size() != gram_cols(ctx, data))
    throw std::invalid_argument("apply_V: dimension mismatch");
  const int hH = static_cast<int>(data.prox_lowrank.cols());
  const int hA = data.num_rows();
  VectorXd out = VectorXd::Zero(data.m);
  if (hH > 0) out.noalias() += data.prox_lowrank * u.head(hH);
  if (hA > 0)
    out.noalias() += data.A.transpose() * ctx.d_w.cwiseSqrt().cwiseProduct(u.segment(hH, hA));
  if (!data.cone.empty()) {
    const VectorXd q = trace_rank1_sqrt(ctx.scaling, u.tail(data.cone.dim()));
    out.noalias() += data.B.mul_transpose(ctx.scaling.apply_factor(q));
  }
  return out;
}

VectorXd apply_Vt(const KKTContext& ctx, const SubproblemData& data, const VectorXd& v) {
  if (v.size() != data.m) throw std::invalid_argument("apply_Vt: dimension mismatch");
  const int hH = static_cast<int>(data.prox_lowrank.cols());
  const int hA = data.num_rows();
  VectorXd out(gram_cols(ctx, data));
  if (hH > 0) out.head(hH) = data.prox_lowrank.transpose() * v;
  if (hA > 0) out.segment(hH, hA) = ctx.d_w.cwiseSqrt().cwiseProduct(data.A * v);
  if (!data.cone.empty())
    out.tail(data.cone.dim()) =
        trace_rank1_sqrt(ctx.scaling, ctx.scaling.apply_factor_transpose(data.B.mul(v)));
  return out;
}

ReducedRhs reduce_rhs(const KKTContext& ctx, const SubproblemData& data, const KKTRhs& rhs) {
  ReducedRhs red;
  red.r_tilde = rhs.r_y;
  if (!data.cone.empty()) {
    const VectorXd Xr = ctx.scaling.apply(rhs.r_x);
    red.r_tilde.noalias() += data.B.mul_transpose(Xr);
    const double tq = ctx.scaling.scaled_trace_vec.dot(rhs.r_x);
    red.r_tilde.noalias() += ctx.BtXone * ((rhs.r_zeta - tq) / ctx.scaling.eta);
  }
  if (data.num_rows() > 0)
    red.r_tilde.noalias() += data.A.transpose() * ctx.d_w.cwiseProduct(rhs.r_s);
  red.r_eq.resize(static_cast<Eigen::Index>(ctx.eq_rows.size()));
  for (std::size_t k = 0; k < ctx.eq_rows.size(); ++k)
    red.r_eq[static_cast<Eigen::Index>(k)] = rhs.r_s[ctx.eq_rows[k]];
  return red;
}

NewtonStep expand_step(const KKTContext& ctx, const SubproblemData& data,
                       const IterateState& st, VectorXd dy, VectorXd ds,
                       VectorXd dx, double dzeta) {
  const double mu = st.mu;
  NewtonStep step;
  step.dy = std::move(dy);
  step.ds = std::move(ds);
  step.dx = std::move(dx);
  step.dzeta = data.has_trace_row() ? dzeta : 0.0;

  const int hA = data.num_rows();
  std::vector<bool> is_eq(hA, false);
  for (int i : ctx.eq_rows) is_eq[i] = true;

  step.dw = VectorXd::Zero(hA);
  if (hA > 0) {
    const VectorXd Adyres = data.A * (st.y + step.dy) - st.w;
    for (int i = 0; i < hA; ++i)
      if (!is_eq[i]) step.dw[i] = Adyres[i];
  }

  if (!data.cone.empty()) {
    step.dz = -ctx.scaling.apply_inverse(step.dx) + mu * cone_inverse(data.cone, st.x) - st.z;
    if (data.trace_mode == TraceMode::UPPER_BOUND)
      step.dsigma = -ctx.scaling.zeta_inv_sigma * step.dzeta + mu / st.zeta - st.sigma;
  } else {
    step.dz.resize(0);
  }

  step.ds_alo = VectorXd::Zero(hA);
  step.ds_ahi = VectorXd::Zero(hA);
  for (int i = 0; i < hA; ++i) {
    if (is_eq[i]) continue;
    if (std::isfinite(data.a_lo[i])) {
      const double slack = st.w[i] - data.a_lo[i];
      step.ds_alo[i] = mu / slack - st.s_alo[i] - step.dw[i] * st.s_alo[i] / slack;
    }
    if (std::isfinite(data.a_hi[i])) {
      const double slack = data.a_hi[i] - st.w[i];
      step.ds_ahi[i] = mu / slack - st.s_ahi[i] + step.dw[i] * st.s_ahi[i] / slack;
    }
  }
  step.ds_ylo = VectorXd::Zero(data.m);
  step.ds_yhi = VectorXd::Zero(data.m);
  for (int i = 0; i < data.m; ++i) {
    if (std::isfinite(data.y_lo[i])) {
      const double slack = st.y[i] - data.y_lo[i];
      step.ds_ylo[i] = mu / slack - st.s_ylo[i] - step.dy[i] * st.s_ylo[i] / slack;
    }
    if (std::isfinite(data.y_hi[i])) {
      const double slack = data.y_hi[i] - st.y[i];
      step.ds_yhi[i] = mu / slack - st.s_yhi[i] + step.dy[i] * st.s_yhi[i] / slack;
    }
  }
  return step;
}

NewtonStep reduce_and_backsolve(const KKTContext& ctx, const SubproblemData& data,
                                const IterateState& st, const KKTRhs& rhs,
                                const YSolver& y_solver) {
  const ReducedRhs red = reduce_rhs(ctx, data, rhs);
  auto [dy, ds_eq] = y_solver(red.r_tilde, red.r_eq);
  if (dy.size() != data.m)
    throw std::runtime_error("reduce_and_backsolve: y_solver returned wrong dy size");
  if (ds_eq.size() != static_cast<Eigen::Index>(ctx.eq_rows.size()))
    throw std::runtime_error("reduce_and_backsolve: y_solver returned wrong ds_eq size");

  double dzeta = 0.0;
  VectorXd dx(data.cone.dim());
  if (!data.cone.empty()) {
    const double tq = ctx.scaling.scaled_trace_vec.dot(rhs.r_x);
    dzeta = (rhs.r_zeta - tq + ctx.BtXone.dot(dy)) / ctx.scaling.eta;
    VectorXd arg = data.B.mul(dy) - rhs.r_x;
    arg -= dzeta * cone_identity(data.cone);
    dx = ctx.scaling.apply(arg);
  }

  VectorXd ds = VectorXd::Zero(data.num_rows());
  if (data.num_rows() > 0) {
    const VectorXd Ady = data.A * dy;
    std::vector<bool> is_eq(data.num_rows(), false);
    for (int i : ctx.eq_rows) is_eq[i] = true;
    for (int i = 0; i < data.num_rows(); ++i)
      if (!is_eq[i]) ds[i] = ctx.d_w[i] * (Ady[i] - rhs.r_s[i]);
    for (std::size_t k = 0; k < ctx.eq_rows.size(); ++k)
      ds[ctx.eq_rows[k]] = ds_eq[static_cast<Eigen::Index>(k)];
  }
  return expand_step(ctx, data, st, std::move(dy), std::move(ds), std::move(dx), dzeta);
}

}  // namespace lrkkt
