#include "lrkkt/precond.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace lrkkt {

VectorXd LowRankPrecond::apply(const VectorXd& v) const {
  if (v.size() != D.size())
    throw std::invalid_argument("LowRankPrecond::apply: dimension mismatch");
  VectorXd u = v.cwiseQuotient(D);
  if (khat > 0) {
    VectorXd t = Phat.transpose() * (Vhat.transpose() * u);
    t.array() /= (1.0 + Lhat.array());
    u -= (Vhat * (Phat * t)).cwiseQuotient(D);
  }
  return u;
}

LowRankPrecond precond_setup(VectorXd D, MatrixXd Vhat) {
  if ((D.array() <= 0.0).any())
    throw std::invalid_argument("precond_setup: D must be strictly positive");
  if (Vhat.size() > 0 && Vhat.rows() != D.size())
    throw std::invalid_argument("precond_setup: Vhat row count mismatch");
  LowRankPrecond P;
  P.D = std::move(D);
  P.Vhat = std::move(Vhat);
  const int k = static_cast<int>(P.Vhat.cols());
  if (k == 0) {
    P.Phat.resize(0, 0);
    P.Lhat.resize(0);
    P.khat = 0;
    return P;
  }
  const MatrixXd M =
      P.Vhat.transpose() * P.D.cwiseInverse().asDiagonal() * P.Vhat;
  const EigDecomp d = eig_sym(0.5 * (M + M.transpose()));
  int khat = 0;
  while (khat < k && d.values[khat] >= 1.0) ++khat;
  P.khat = khat;
  P.Phat = d.vectors.leftCols(khat);
  P.Lhat = d.values.head(khat);
  return P;
}

MatrixXd svd_subspace(const VectorXd& D, const MatrixXd& V, int k) {
  const int n = static_cast<int>(V.cols());
  if (k < 0 || k >= n)
    throw std::invalid_argument("svd_subspace: k must satisfy 0 <= k < n");
  const MatrixXd M = D.cwiseSqrt().cwiseInverse().asDiagonal() * V;
  Eigen::JacobiSVD<MatrixXd> svd(M, Eigen::ComputeThinV);
  return svd.matrixV().leftCols(k);
}

namespace {

/// Modified Gram-Schmidt with a drop tolerance relative to the original
/// column norm; returns the accepted orthonormal columns.
MatrixXd orthonormalize(const MatrixXd& P) {
  const Eigen::Index n = P.rows();
  std::vector<VectorXd> q;
  q.reserve(static_cast<std::size_t>(P.cols()));
  for (Eigen::Index j = 0; j < P.cols(); ++j) {
    VectorXd c = P.col(j);
    const double orig = c.norm();
    if (orig == 0.0) continue;
    for (const VectorXd& qi : q) c -= qi.dot(c) * qi;
    for (const VectorXd& qi : q) c -= qi.dot(c) * qi;  // second MGS sweep
    const double nrm = c.norm();
    if (nrm <= 1e-12 * orig) continue;
    q.push_back(c / nrm);
  }
  MatrixXd Q(n, static_cast<Eigen::Index>(q.size()));
  for (std::size_t i = 0; i < q.size(); ++i) Q.col(static_cast<Eigen::Index>(i)) = q[i];
  return Q;
}

MatrixXd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  MatrixXd G(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) G(i, j) = rng.normal();
  return G;
}

}  // namespace

MatrixXd random_subspace(const std::function<VectorXd(const VectorXd&)>& V_mul,
                         int n, const VectorXd& D, SelectionState& state, Rng& rng) {
  MatrixXd P_raw;
  if (state.P_old.cols() == 0) {
    const double nm = static_cast<double>(state.n_mult);
    const double expr = std::sqrt(nm * (nm + n) / 4.0) - nm / 2.0;
    int k = std::min(n, std::min(3 + 2 * state.khat_prev,
                                 static_cast<int>(std::ceil(expr))));
    k = std::max(0, k);
    P_raw = gaussian_matrix(n, k, rng);
  } else {
    const int k_plus = std::max(
        3, static_cast<int>(std::floor(std::sqrt(static_cast<double>(state.n_mult)) / 2.0)) -
               static_cast<int>(state.P_old.cols()));
    P_raw.resize(n, state.P_old.cols() + k_plus);
    P_raw.leftCols(state.P_old.cols()) = state.P_old;
    P_raw.rightCols(k_plus) = gaussian_matrix(n, k_plus, rng);
  }

  const MatrixXd P_Omega = orthonormalize(P_raw);
  const int k = static_cast<int>(P_Omega.cols());
  MatrixXd Vhat(D.size(), k);
  for (int j = 0; j < k; ++j) Vhat.col(j) = V_mul(P_Omega.col(j));
  if (k == 0) {
    state.P_old.resize(n, 0);
    return Vhat;
  }

  const MatrixXd M = Vhat.transpose() * D.cwiseInverse().asDiagonal() * Vhat;
  const EigDecomp d = eig_sym(0.5 * (M + M.transpose()));

  // threshold: discard trailing eigenvalues that vanished numerically, then
  // lambda_bar = max{10, exp(ln(l_1)/10 - 9 ln(l_keff)/10)}
  int keff = 0;
  if (d.values[0] > 0.0) {
    keff = k;
    while (keff > 0 && d.values[keff - 1] <= 1e-14 * d.values[0]) --keff;
  }
  double lambda_bar = 10.0;
  if (keff > 0)
    lambda_bar = std::max(
        10.0, std::exp(0.1 * std::log(d.values[0]) - 0.9 * std::log(d.values[keff - 1])));

  int sel = 3;
  for (int i = 4; i <= k; ++i)
    if (d.values[i - 1] > lambda_bar) sel = i;
  const int k_low = std::min(k, sel);
  state.P_old = P_Omega * d.vectors.leftCols(k_low);
  return Vhat;
}

namespace {

/// B^T restricted to a contiguous block of cone coordinates, applied to v.
VectorXd bt_block_mul(const SubproblemData& data, int off, int len, const VectorXd& v) {
  if (data.B.has_dense())
    return data.B.dense().middleRows(off, len).transpose() * v;
  VectorXd full = VectorXd::Zero(data.cone.dim());
  full.segment(off, len) = v;
  return data.B.mul_transpose(full);
}

double dinv_norm_sq(const VectorXd& v, const VectorXd& D) {
  return v.cwiseAbs2().cwiseQuotient(D).sum();
}

}  // namespace

void append_nonneg_columns(MatrixXd& Vhat, const KKTContext& ctx,
                           const SubproblemData& data, double rho) {
  const BlockScaling& S = ctx.scaling;
  const int n = S.spec.nonneg_dim;
  if (n == 0) return;
  const double trace_coef =
      (1.0 - std::sqrt(S.zeta_inv_sigma / S.eta)) / S.trace_quad;
  for (int i = 0; i < n; ++i) {
    const double r = S.nonneg_ratio[i];
    const double est = (r - r * r / S.eta) * ctx.col_norms_sq[i];
    if (est < rho) continue;
    const double alpha = std::sqrt(r) * trace_coef;
    VectorXd bhat = std::sqrt(r) * data.B.transpose_col(i) - alpha * ctx.BtXone;
    if (dinv_norm_sq(bhat, ctx.D) > rho) {
      Vhat.conservativeResize(data.m, Vhat.cols() + 1);
      Vhat.col(Vhat.cols() - 1) = bhat;
    }
  }
}

void append_psd_columns(MatrixXd& Vhat, const KKTContext& ctx,
                        const SubproblemData& data, int block, double rho) {
  const BlockScaling& S = ctx.scaling;
  const BlockScaling::PsdBlock& blk = S.psd[static_cast<std::size_t>(block)];
  const int h = S.spec.psd_dims[static_cast<std::size_t>(block)];
  const int off = S.spec.psd_offset(block);
  const int sd = svec_dim(h);
  const VectorXd norms_sq = ctx.col_norms_sq.segment(off, sd);
  const double max_norm = norms_sq.maxCoeff();
  if (!(max_norm > 0.0)) return;
  const double rho_hat = rho / max_norm;
  const VectorXd& lam = blk.eig.values;
  if (lam[0] * lam[0] < rho_hat) return;

  const KronRank1Eig kr = kron_rank1_eigensystem(blk.eig, S.eta);

  // svec of the rank-one eigenvector frames w_ii, one column per i
  MatrixXd Wii(sd, h);
  for (int i = 0; i < h; ++i) Wii.col(i) = rank1_svec(blk.eig.vectors, i);

  const double lam_sq_sum = lam.squaredNorm();
  const double root_eta = std::sqrt(S.eta);
  const double ujf_coef =
      (root_eta - std::sqrt(std::max(S.eta - lam_sq_sum, 0.0))) / (root_eta * lam_sq_sum);
  const double trace_coef =
      (1.0 - std::sqrt(S.zeta_inv_sigma / S.eta)) / S.trace_quad;

  auto push = [&](const VectorXd& bhat) {
    Vhat.conservativeResize(data.m, Vhat.cols() + 1);
    Vhat.col(Vhat.cols() - 1) = bhat;
  };

  // non-mixed directions from the eigensystem of U
  for (int ih = 0; ih < h; ++ih) {
    const double lam_u = kr.U.values[ih];
    if (lam_u < rho_hat) continue;
    const VectorXd what = Wii * kr.U.vectors.col(ih);
    const double screen = lam_u * what.cwiseAbs2().dot(norms_sq);
    if (screen < rho) continue;
    const VectorXd lam_u_vec = lam.cwiseProduct(kr.U.vectors.col(ih));
    const VectorXd uF =
        (lam_u_vec - ujf_coef * lam.dot(lam_u_vec) * lam) / std::sqrt(lam_u);
    const double alpha = lam.dot(uF) * trace_coef;
    const VectorXd combo = Wii * uF.cwiseProduct(lam);
    VectorXd bhat = bt_block_mul(data, off, sd, combo) - alpha * ctx.BtXone;
    if (dinv_norm_sq(bhat, ctx.D) >= rho) push(bhat);
  }

  // mixed directions
  for (const auto& mp : kr.mixed) {
    if (!(mp.value > rho_hat)) continue;
    const VectorXd wij = rank1_svec_mixed(blk.eig.vectors, mp.i, mp.j);
    const double screen = std::sqrt(mp.value) * wij.cwiseAbs2().dot(norms_sq);
    if (screen < rho) continue;
    VectorXd bhat = std::sqrt(mp.value) * bt_block_mul(data, off, sd, wij);
    if (dinv_norm_sq(bhat, ctx.D) >= rho) push(bhat);
  }
}

MatrixXd deterministic_subspace(const KKTContext& ctx, const SubproblemData& data) {
  const double rho = 10.0 * data.prox_diag.sum() / data.m;
  MatrixXd Vhat(data.m, 0);

  for (int j = 0; j < data.prox_lowrank.cols(); ++j) {
    if (dinv_norm_sq(data.prox_lowrank.col(j), ctx.D) >= rho) {
      Vhat.conservativeResize(data.m, Vhat.cols() + 1);
      Vhat.col(Vhat.cols() - 1) = data.prox_lowrank.col(j);
    }
  }
  for (int j = 0; j < data.num_rows(); ++j) {
    const VectorXd col = data.A.row(j).transpose();
    if (ctx.d_w[j] * dinv_norm_sq(col, ctx.D) >= rho) {
      Vhat.conservativeResize(data.m, Vhat.cols() + 1);
      Vhat.col(Vhat.cols() - 1) = ctx.d_w[j] * col;
    }
  }
  if (!data.cone.empty()) {
    append_nonneg_columns(Vhat, ctx, data, rho);
    for (std::size_t b = 0; b < ctx.scaling.psd.size(); ++b)
      append_psd_columns(Vhat, ctx, data, static_cast<int>(b), rho);
  }
  return Vhat;
}

// ---- dense oracles -------------------------------------------------------

double kappa_exact(const VectorXd& D, const MatrixXd& V, const MatrixXd& Omega) {
  MatrixXd H = MatrixXd(D.asDiagonal());
  H.noalias() += V * V.transpose();
  MatrixXd Hp = MatrixXd(D.asDiagonal());
  if (Omega.cols() > 0) {
    const MatrixXd VO = V * Omega;
    Hp.noalias() += VO * VO.transpose();
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> ges(H, Hp);
  if (ges.info() != Eigen::Success)
    throw std::runtime_error("kappa_exact: generalized eigensolver failed");
  const VectorXd ev = ges.eigenvalues();
  return ev[ev.size() - 1] / ev[0];
}

double det_bound(const VectorXd& sigma, const MatrixXd& Omega, int k) {
  const int n = static_cast<int>(sigma.size());
  if (k < 0 || k >= n || Omega.rows() != n)
    throw std::invalid_argument("det_bound: bad split");
  double norm_sq = 0.0;
  if (k > 0) {
    const MatrixXd Omega1 = Omega.topRows(k);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(Omega1);
    if (cod.rank() < k)
      throw std::invalid_argument(
          "det_bound: first k rows of Omega are not linearly independent");
    const MatrixXd F = Omega.bottomRows(n - k) * cod.pseudoInverse();
    const VectorXd scale =
        (sigma.tail(n - k).cwiseAbs2().array() + 1.0).sqrt().matrix();
    const MatrixXd M = scale.asDiagonal() * F;
    Eigen::JacobiSVD<MatrixXd> svd(M);
    norm_sq = svd.singularValues().size() > 0
                  ? svd.singularValues()[0] * svd.singularValues()[0]
                  : 0.0;
  }
  return 2.0 + sigma[k] * sigma[k] + norm_sq;
}

double spec_bound(const VectorXd& D, const MatrixXd& B, const MatrixXd& X, int k) {
  const int n = static_cast<int>(X.rows());
  if (k < 0 || k > n) throw std::invalid_argument("spec_bound: bad k");
  const EigDecomp d = eig_sym(X);
  double bound = 1.0;
  const VectorXd dinv = D.cwiseInverse();
  for (int i = k; i < n; ++i) {
    const VectorXd col = B.transpose() * d.vectors.col(i);
    bound += std::max(d.values[i], 0.0) * col.cwiseAbs2().dot(dinv);
  }
  return bound;
}

namespace {
MatrixXd thin_q(const MatrixXd& Omega) {
  Eigen::ColPivHouseholderQR<MatrixXd> qr(Omega);
  const Eigen::Index r = qr.rank();
  MatrixXd Q = qr.householderQ() * MatrixXd::Identity(Omega.rows(), r);
  return Q;
}
}  // namespace

double proj_bound(const VectorXd& D, const MatrixXd& V, const MatrixXd& Omega) {
  const MatrixXd Q = thin_q(Omega);
  MatrixXd M = D.cwiseSqrt().cwiseInverse().asDiagonal() * V;
  M -= (M * Q) * Q.transpose();
  Eigen::JacobiSVD<MatrixXd> svd(M);
  const double s = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
  return 1.0 + s * s;
}

std::pair<double, double> moments_mc(const VectorXd& sigma, const VectorXd& x,
                                     int k, int trials, Rng& rng) {
  const int n = static_cast<int>(sigma.size());
  if (x.size() != n) throw std::invalid_argument("moments_mc: size mismatch");
  if (k < 1 || trials < 2) throw std::invalid_argument("moments_mc: bad parameters");
  VectorXd a(n);
  double base = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s2 = sigma[i] * sigma[i];
    a[i] = sigma[i] / std::sqrt(1.0 + s2) * x[i];
    base += x[i] * x[i] / (1.0 + s2);
  }
  const double inv_sqrt_k = 1.0 / std::sqrt(static_cast<double>(k));
  double mean = 0.0, m2 = 0.0;
  for (int t = 0; t < trials; ++t) {
    double q = base;
    for (int hrow = 0; hrow < k; ++hrow) {
      double dot = 0.0;
      for (int i = 0; i < n; ++i) dot += a[i] * (rng.normal() * inv_sqrt_k);
      q += dot * dot;
    }
    const double delta = q - mean;
    mean += delta / (t + 1);
    m2 += delta * (q - mean);
  }
  return {mean, m2 / (trials - 1)};
}

double lmax_projector_form(const VectorXd& sigma, const MatrixXd& Omega) {
  const int n = static_cast<int>(sigma.size());
  if (Omega.rows() != n) throw std::invalid_argument("lmax_projector_form: size mismatch");
  const MatrixXd Q = thin_q(Omega);
  const MatrixXd P = Q * Q.transpose();
  const MatrixXd T = MatrixXd::Identity(n, n) +
                     sigma.asDiagonal() * P * sigma.asDiagonal();
  const VectorXd shalf = (sigma.cwiseAbs2().array() + 1.0).sqrt().matrix();
  const MatrixXd M = shalf.asDiagonal() *
                     T.llt().solve(MatrixXd(shalf.asDiagonal()));
  const EigDecomp d = eig_sym(0.5 * (M + M.transpose()));
  return d.values[0];
}

}  // namespace lrkkt
