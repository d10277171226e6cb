#pragma once

#include <vector>

#include "lrkkt/symmat.hpp"

namespace lrkkt {

/// Product cone R^n_+ x (second order cones, unsupported) x PSD blocks.
/// Elements live in R^{dim()} with the nonnegative block first followed by
/// the svec'd PSD blocks.
struct ConeSpec {
  int nonneg_dim = 0;
  std::vector<int> soc_dims;  ///< declared for format fidelity, rejected on use
  std::vector<int> psd_dims;

  int dim() const;
  /// Number of unit contributions to the trace: n + sum s_i.
  int trace_units() const;
  int psd_offset(int block) const;
  bool empty() const { return dim() == 0; }
  /// Throws on SOC blocks or invalid dimensions.
  void validate() const;
};

/// Trace vector 1_t (ones on the nonnegative block, svec(I) per PSD block).
VectorXd cone_identity(const ConeSpec& spec);

double cone_trace(const ConeSpec& spec, const VectorXd& x);

/// Membership of the closed cone up to tol (per block: xi >= -tol,
/// lambda_min >= -tol*(1+lambda_max)).
bool cone_member(const ConeSpec& spec, const VectorXd& x, double tol);

/// Strict interiority: xi > 0 and lambda_min > 1e-13 * lambda_max.
bool cone_interior(const ConeSpec& spec, const VectorXd& x);

/// Blockwise inverse: componentwise on the nonnegative block, svec(X^{-1})
/// on PSD blocks.
VectorXd cone_inverse(const ConeSpec& spec, const VectorXd& x);

/// Block-diagonal scaling X_t for an interior pair (x,z) together with the
/// factor F_t (X_t = F_t F_t^T), the transformed trace vectors and
/// eta = zeta^{-1} sigma + 1^T X_t 1.  The nonnegative block of X_t is
/// Diag(x/z); PSD blocks are W ox_s W for the Nesterov-Todd scaling W.
struct BlockScaling {
  ConeSpec spec;
  VectorXd nonneg_ratio;  ///< x ./ z on the nonnegative block

  struct PsdBlock {
    MatrixXd W;
    EigDecomp eig;   ///< W = P Lam P^T, values nonincreasing
    MatrixXd VW;     ///< P Lam^{1/2}, so X-block = (VW ox_s VW)(VW^T ox_s VW^T)
    MatrixXd Winv;
  };
  std::vector<PsdBlock> psd;

  VectorXd scaled_trace_vec;  ///< X_t 1_t
  VectorXd factor_trace_vec;  ///< F_t^T 1_t
  double trace_quad = 0.0;    ///< 1^T X_t 1
  double zeta_inv_sigma = 0.0;
  double eta = 0.0;

  VectorXd apply(const VectorXd& v) const;
  VectorXd apply_inverse(const VectorXd& v) const;
  VectorXd apply_factor(const VectorXd& v) const;
  VectorXd apply_factor_transpose(const VectorXd& v) const;
};

BlockScaling build_scaling(const ConeSpec& spec, const VectorXd& x,
                           const VectorXd& z, double zeta, double sigma);

}  // namespace lrkkt
