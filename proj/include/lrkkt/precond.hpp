#pragma once

#include <functional>
#include <utility>

#include "lrkkt/kkt.hpp"
#include "lrkkt/rng.hpp"

namespace lrkkt {

/// Truncated Woodbury preconditioner for H = D + V V^T built from a column
/// sketch Vhat: only the eigenvalues of Vhat^T D^{-1} Vhat that are >= 1 are
/// kept, and the inverse of D + (Vhat Phat)(Vhat Phat)^T is applied.
struct LowRankPrecond {
  VectorXd D;
  MatrixXd Vhat;   ///< m x k
  MatrixXd Phat;   ///< k x khat, orthonormal columns
  VectorXd Lhat;   ///< kept eigenvalues, nonincreasing, all >= 1
  int khat = 0;

  VectorXd apply(const VectorXd& v) const;
};

LowRankPrecond precond_setup(VectorXd D, MatrixXd Vhat);

/// Top-k right singular directions of D^{-1/2} V (dense test oracle).
MatrixXd svd_subspace(const VectorXd& D, const MatrixXd& V, int k);

/// State carried across consecutive KKT systems by the randomized selection.
struct SelectionState {
  MatrixXd P_old;     ///< n x k_low, orthonormal
  long n_mult = 0;    ///< matvec count of the previous solve
  int khat_prev = 0;  ///< previous truncation rank
};

/// Randomized subspace selection: extends the previously relevant subspace by
/// fresh Gaussian directions, orthonormalizes, and keeps the directions whose
/// Rayleigh spectrum stays above a running threshold.  Returns Vhat = V P and
/// updates the state.
MatrixXd random_subspace(const std::function<VectorXd(const VectorXd&)>& V_mul,
                         int n, const VectorXd& D, SelectionState& state, Rng& rng);

/// Deterministic interior-point-aware column selection for the Gram factor of
/// the Schur operator.  The threshold is rho = (10/m) tr D_H.
MatrixXd deterministic_subspace(const KKTContext& ctx, const SubproblemData& data);

/// Column appenders for the two supported cone blocks (exposed for tests).
void append_nonneg_columns(MatrixXd& Vhat, const KKTContext& ctx,
                           const SubproblemData& data, double rho);
void append_psd_columns(MatrixXd& Vhat, const KKTContext& ctx,
                        const SubproblemData& data, int block, double rho);

// ---- dense condition-number oracles -------------------------------------

/// Condition number of the H_Omega-preconditioned system,
/// H = D + VV^T, H_Omega = D + (V Omega)(V Omega)^T.
double kappa_exact(const VectorXd& D, const MatrixXd& V, const MatrixXd& Omega);

/// Deterministic bound 2 + sigma_{k+1}^2 + ||(I+Sigma_2^2)^{1/2} Omega_2 Omega_1^dagger||^2
/// for the projector preconditioner built from Omega (first k rows must be
/// linearly independent).
double det_bound(const VectorXd& sigma, const MatrixXd& Omega, int k);

/// Spectral selection bound 1 + sum_i (Lam_s)_ii ||B^T (P_s)_i||^2_{D^{-1}}
/// for the split of X into its top-k eigenvectors P_l and the rest P_s.
double spec_bound(const VectorXd& D, const MatrixXd& B, const MatrixXd& X, int k);

/// Projector bound 1 + ||D^{-1/2} V (I - P_Omega)||^2.
double proj_bound(const VectorXd& D, const MatrixXd& V, const MatrixXd& Omega);

/// Monte-Carlo sample mean and variance of the quadratic form
/// q(x) = x^T (I+S^2)^{-1/2}(I + S Omega Omega^T S)(I+S^2)^{-1/2} x
/// over Gaussian Omega with N(0,1/k) entries.
std::pair<double, double> moments_mc(const VectorXd& sigma, const VectorXd& x,
                                     int k, int trials, Rng& rng);

/// lambda_max((I+S^2)^{1/2}(I + S P_Omega S)^{-1}(I+S^2)^{1/2}) for the
/// projector of Omega (probabilistic-bound test helper).
double lmax_projector_form(const VectorXd& sigma, const MatrixXd& Omega);

}  // namespace lrkkt
