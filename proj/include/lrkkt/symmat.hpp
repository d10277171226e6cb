#pragma once

#include <Eigen/Dense>
#include <vector>

namespace lrkkt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Symmetric matrices of order h are stored as vectors of length h(h+1)/2 in
// svec layout: the lower triangle stacked columnwise with off-diagonal
// entries scaled by sqrt(2).  With this scaling svec(A).dot(svec(B)) equals
// the trace inner product sum_ij A_ij B_ij.

/// h(h+1)/2
int svec_dim(int order);

/// Order h for a vector of length len; throws if len is not triangular.
int svec_order(Eigen::Index len);

/// Linear index of entry (i,j), i >= j, within the svec layout.
inline int svec_index(int i, int j, int order) {
  return j * order - j * (j - 1) / 2 + (i - j);
}

VectorXd svec(const MatrixXd& A, double sym_tol = 1e-12);
MatrixXd smat(const VectorXd& v);

/// Applies the symmetric Kronecker product:
/// (F ox_s G) svec(A) = 1/2 svec(F A G^T + G A F^T).
VectorXd sym_kron_apply(const MatrixXd& F, const MatrixXd& G, const VectorXd& v);

/// Dense matrix representation of F ox_s G (desk-scale utility).
MatrixXd sym_kron_dense(const MatrixXd& F, const MatrixXd& G);

struct EigDecomp {
  MatrixXd vectors;  ///< orthogonal, columns are eigenvectors
  VectorXd values;   ///< sorted nonincreasingly
};

/// Symmetric eigendecomposition, eigenvalues sorted nonincreasingly.
/// Deterministic for fixed input.
EigDecomp eig_sym(const MatrixXd& A);

/// P f(Lambda) P^T with eigenvalues clamped from below at 1e-14 * lambda_max
/// before taking the root.
MatrixXd sym_sqrt(const EigDecomp& d);
MatrixXd sym_inv_sqrt(const EigDecomp& d);

/// The unique W > 0 with W Z W = X for symmetric positive definite X, Z.
MatrixXd nt_scaling(const MatrixXd& X, const MatrixXd& Z);

/// svec(p_i p_i^T) for column i of P.
VectorXd rank1_svec(const MatrixXd& P, int i);

/// (1/sqrt(2)) svec(p_i p_j^T + p_j p_i^T) for columns i < j of P.
VectorXd rank1_svec_mixed(const MatrixXd& P, int i, int j);

/// Eigensystem of W ox_s W - (1/eta) svec(W^2) svec(W^2)^T for W given by its
/// eigendecomposition.  The non-mixed part is carried by the order-h matrix
/// U = Lam^2 - (1/eta)(Lam^2 1)(Lam^2 1)^T with eigenvectors expanded as
/// sum_j (P_U)_{ji} svec(w_j w_j^T); the mixed eigenvalues are lam_i lam_j
/// (i < j) with eigenvectors rank1_svec_mixed(P_W, i, j).
struct KronRank1Eig {
  EigDecomp U;
  struct MixedPair {
    int i, j;
    double value;
  };
  std::vector<MixedPair> mixed;
};

KronRank1Eig kron_rank1_eigensystem(const EigDecomp& w, double eta);

}  // namespace lrkkt
