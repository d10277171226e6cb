#include "lrkkt/symmat.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrkkt {

namespace {
constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kInvSqrt2 = 0.7071067811865475;

void check_symmetric(const MatrixXd& A, double tol, const char* who) {
  if (A.rows() != A.cols())
    throw std::invalid_argument(std::string(who) + ": matrix not square");
  const double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
  for (int j = 0; j < A.cols(); ++j)
    for (int i = j + 1; i < A.rows(); ++i)
      if (std::abs(A(i, j) - A(j, i)) > tol * scale)
        throw std::invalid_argument(std::string(who) + ": matrix not symmetric");
}
}  // namespace

int svec_dim(int order) { return order * (order + 1) / 2; }

int svec_order(Eigen::Index len) {
  const int h = static_cast<int>((std::sqrt(8.0 * static_cast<double>(len) + 1.0) - 1.0) / 2.0 + 0.5);
  if (static_cast<Eigen::Index>(svec_dim(h)) != len)
    throw std::invalid_argument("svec_order: length " + std::to_string(len) +
                                " is not triangular");
  return h;
}

VectorXd svec(const MatrixXd& A, double sym_tol) {
  check_symmetric(A, sym_tol, "svec");
  const int h = static_cast<int>(A.rows());
  VectorXd v(svec_dim(h));
  int k = 0;
  for (int j = 0; j < h; ++j) {
    v[k++] = A(j, j);
    for (int i = j + 1; i < h; ++i) v[k++] = kSqrt2 * A(i, j);
  }
  return v;
}

MatrixXd smat(const VectorXd& v) {
  const int h = svec_order(v.size());
  MatrixXd A(h, h);
  int k = 0;
  for (int j = 0; j < h; ++j) {
    A(j, j) = v[k++];
    for (int i = j + 1; i < h; ++i) {
      const double a = kInvSqrt2 * v[k++];
      A(i, j) = a;
      A(j, i) = a;
    }
  }
  return A;
}

VectorXd sym_kron_apply(const MatrixXd& F, const MatrixXd& G, const VectorXd& v) {
  const int h = svec_order(v.size());
  if (F.cols() != h || G.cols() != h || F.rows() != G.rows())
    throw std::invalid_argument("sym_kron_apply: dimension mismatch");
  const MatrixXd A = smat(v);
  const MatrixXd M = F * A * G.transpose();
  const MatrixXd S = 0.5 * (M + M.transpose());
  return svec(S, 1e-9);
}

MatrixXd sym_kron_dense(const MatrixXd& F, const MatrixXd& G) {
  const int h = static_cast<int>(F.cols());
  const int rows = svec_dim(static_cast<int>(F.rows()));
  const int cols = svec_dim(h);
  MatrixXd K(rows, cols);
  VectorXd e = VectorXd::Zero(cols);
  for (int j = 0; j < cols; ++j) {
    e[j] = 1.0;
    K.col(j) = sym_kron_apply(F, G, e);
    e[j] = 0.0;
  }
  return K;
}

EigDecomp eig_sym(const MatrixXd& A) {
  if (!A.allFinite())
    throw std::invalid_argument("eig_sym: non-finite entries");
  check_symmetric(A, 1e-10, "eig_sym");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(A);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eig_sym: eigensolver failed");
  EigDecomp d;
  // Eigen sorts ascending; flip to nonincreasing.
  d.values = es.eigenvalues().reverse();
  d.vectors = es.eigenvectors().rowwise().reverse();
  return d;
}

namespace {
MatrixXd apply_spectral(const EigDecomp& d, double (*f)(double)) {
  const double lmax = d.values.size() ? std::abs(d.values[0]) : 0.0;
  const double floor = 1e-14 * std::max(lmax, 1e-300);
  VectorXd fl(d.values.size());
  for (Eigen::Index i = 0; i < d.values.size(); ++i)
    fl[i] = f(std::max(d.values[i], floor));
  return d.vectors * fl.asDiagonal() * d.vectors.transpose();
}
}  // namespace

MatrixXd sym_sqrt(const EigDecomp& d) {
  return apply_spectral(d, +[](double x) { return std::sqrt(x); });
}

MatrixXd sym_inv_sqrt(const EigDecomp& d) {
  return apply_spectral(d, +[](double x) { return 1.0 / std::sqrt(x); });
}

namespace {
void check_spd(const EigDecomp& d, const char* name) {
  if (d.values.size() == 0) return;
  const double lmax = d.values[0];
  if (!(lmax > 0.0) || !(d.values[d.values.size() - 1] > 1e-14 * lmax))
    throw std::invalid_argument(std::string("nt_scaling: matrix ") + name +
                                " is not positive definite");
}
}  // namespace

MatrixXd nt_scaling(const MatrixXd& X, const MatrixXd& Z) {
  const EigDecomp ez = eig_sym(Z);
  check_spd(ez, "Z");
  const EigDecomp ex = eig_sym(X);
  check_spd(ex, "X");
  const MatrixXd zh = sym_sqrt(ez);
  const MatrixXd zih = sym_inv_sqrt(ez);
  const MatrixXd inner = zh * X * zh;
  const MatrixXd inner_sqrt = sym_sqrt(eig_sym(0.5 * (inner + inner.transpose())));
  MatrixXd W = zih * inner_sqrt * zih;
  return 0.5 * (W + W.transpose());
}

VectorXd rank1_svec(const MatrixXd& P, int i) {
  const VectorXd p = P.col(i);
  return svec(MatrixXd(p * p.transpose()), 1e-9);
}

VectorXd rank1_svec_mixed(const MatrixXd& P, int i, int j) {
  const VectorXd pi = P.col(i);
  const VectorXd pj = P.col(j);
  MatrixXd M = pi * pj.transpose();
  M += M.transpose().eval();
  return kInvSqrt2 * svec(M, 1e-9);
}

KronRank1Eig kron_rank1_eigensystem(const EigDecomp& w, double eta) {
  if (!(eta > 0.0))
    throw std::invalid_argument("kron_rank1_eigensystem: eta must be positive");
  const int h = static_cast<int>(w.values.size());
  if (h == 0 || !(w.values[h - 1] > 0.0))
    throw std::invalid_argument("kron_rank1_eigensystem: W must be positive definite");
  const VectorXd lamsq = w.values.cwiseProduct(w.values);
  if (eta < lamsq.sum() * (1.0 - 1e-12))
    throw std::invalid_argument("kron_rank1_eigensystem: eta below sum of squared eigenvalues");
  MatrixXd U = MatrixXd(lamsq.asDiagonal());
  U.noalias() -= (1.0 / eta) * lamsq * lamsq.transpose();
  KronRank1Eig out;
  out.U = eig_sym(U);
  out.mixed.reserve(static_cast<std::size_t>(h) * (h - 1) / 2);
  for (int i = 0; i < h; ++i)
    for (int j = i + 1; j < h; ++j)
      out.mixed.push_back({i, j, w.values[i] * w.values[j]});
  return out;
}

}  // namespace lrkkt
