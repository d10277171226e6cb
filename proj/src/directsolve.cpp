#include "lrkkt/directsolve.hpp"

#include <lapacke.h>

#include <stdexcept>
#include <string>
#include <vector>

namespace lrkkt {

namespace {
constexpr int kMaxOrder = 3000;
}

DenseKKT dense_assemble(const KKTContext& ctx, const SubproblemData& data) {
  const int n = full_order(data);
  if (n > kMaxOrder)
    throw std::invalid_argument("dense_assemble: order " + std::to_string(n) +
                                " exceeds the desk-scale cap");
  const int m = data.m;
  const int hA = data.num_rows();
  const int nt = data.cone.dim();

  DenseKKT out;
  out.m = m;
  out.hA = hA;
  out.nt = nt;
  out.trace_row = data.has_trace_row();
  MatrixXd& K = out.K;
  K = MatrixXd::Zero(n, n);

  MatrixXd H = MatrixXd(data.prox_diag.asDiagonal());
  if (data.prox_lowrank.size() > 0)
    H.noalias() += data.prox_lowrank * data.prox_lowrank.transpose();
  H += MatrixXd(ctx.d_y.asDiagonal());
  K.topLeftCorner(m, m) = H;

  if (hA > 0) {
    K.block(0, m, m, hA) = data.A.transpose();
    K.block(m, 0, hA, m) = data.A;
    std::vector<bool> is_eq(hA, false);
    for (int i : ctx.eq_rows) is_eq[i] = true;
    for (int i = 0; i < hA; ++i)
      if (!is_eq[i]) K(m + i, m + i) = -1.0 / ctx.d_w[i];
  }

  if (nt > 0) {
    MatrixXd Bd(nt, m);
    if (data.B.has_dense()) {
      Bd = data.B.dense();
    } else {
      VectorXd e = VectorXd::Zero(m);
      for (int j = 0; j < m; ++j) {
        e[j] = 1.0;
        Bd.col(j) = data.B.mul(e);
        e[j] = 0.0;
      }
    }
    K.block(m + hA, 0, nt, m) = Bd;
    K.block(0, m + hA, m, nt) = Bd.transpose();

    // -X_t^{-1} blockwise
    const BlockScaling& S = ctx.scaling;
    for (int i = 0; i < S.spec.nonneg_dim; ++i)
      K(m + hA + i, m + hA + i) = -1.0 / S.nonneg_ratio[i];
    for (std::size_t b = 0; b < S.psd.size(); ++b) {
      const int off = m + hA + S.spec.psd_offset(static_cast<int>(b));
      const int sd = svec_dim(S.spec.psd_dims[b]);
      K.block(off, off, sd, sd) = -sym_kron_dense(S.psd[b].Winv, S.psd[b].Winv);
    }

    const VectorXd ones = cone_identity(data.cone);
    K.block(m + hA, n - 1, nt, 1) = -ones;
    K.block(n - 1, m + hA, 1, nt) = -ones.transpose();
    K(n - 1, n - 1) = ctx.scaling.zeta_inv_sigma;
  }
  return out;
}

namespace {

struct BunchKaufman {
  MatrixXd factors;
  std::vector<lapack_int> ipiv;

  explicit BunchKaufman(const MatrixXd& K) : factors(K), ipiv(K.rows()) {
    const lapack_int n = static_cast<lapack_int>(K.rows());
    const lapack_int info =
        LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', n, factors.data(), n, ipiv.data());
    if (info > 0)
      throw std::runtime_error("dense_solve: singular factorization, zero pivot at index " +
                               std::to_string(info));
    if (info < 0)
      throw std::runtime_error("dense_solve: illegal argument to dsytrf");
  }

  VectorXd solve(const VectorXd& rhs) const {
    VectorXd x = rhs;
    const lapack_int n = static_cast<lapack_int>(factors.rows());
    const lapack_int info = LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', n, 1, factors.data(), n,
                                           ipiv.data(), x.data(), n);
    if (info != 0) throw std::runtime_error("dense_solve: dsytrs failed");
    return x;
  }
};

}  // namespace

VectorXd dense_sym_solve(const MatrixXd& K, const VectorXd& rhs) {
  if (K.rows() != K.cols() || K.rows() != rhs.size())
    throw std::invalid_argument("dense_sym_solve: dimension mismatch");
  if (rhs.size() == 0) return rhs;
  const BunchKaufman fac(K);
  VectorXd x = fac.solve(rhs);
  // one step of iterative refinement
  const VectorXd r = rhs - K.selfadjointView<Eigen::Lower>() * x;
  x += fac.solve(r);
  return x;
}

VectorXd dense_solve(const DenseKKT& K, const VectorXd& rhs) {
  return dense_sym_solve(K.K, rhs);
}

YSolver make_dense_y_solver(const KKTContext& ctx, const SubproblemData& data) {
  const int m = data.m;
  const int n_eq = static_cast<int>(ctx.eq_rows.size());
  MatrixXd K = MatrixXd::Zero(m + n_eq, m + n_eq);
  VectorXd e = VectorXd::Zero(m);
  for (int j = 0; j < m; ++j) {
    e[j] = 1.0;
    K.col(j).head(m) = apply_schur_H(ctx, data, e);
    e[j] = 0.0;
  }
  for (int k = 0; k < n_eq; ++k) {
    K.block(m + k, 0, 1, m) = data.A.row(ctx.eq_rows[k]);
    K.block(0, m + k, m, 1) = data.A.row(ctx.eq_rows[k]).transpose();
  }
  return [K, m, n_eq](const VectorXd& r_tilde, const VectorXd& r_eq) {
    VectorXd rhs(m + n_eq);
    rhs << r_tilde, r_eq;
    const VectorXd sol = dense_sym_solve(K, rhs);
    return std::make_pair(VectorXd(sol.head(m)), VectorXd(sol.tail(n_eq)));
  };
}

}  // namespace lrkkt
