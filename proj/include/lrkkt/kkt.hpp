#pragma once

#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lrkkt/cones.hpp"

namespace lrkkt {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class TraceMode { EQUALITY, UPPER_BOUND };

/// Dense matrix or matvec-oracle pair for the bundle map B (cone x design).
class LinearMap {
 public:
  using Fn = std::function<VectorXd(const VectorXd&)>;

  LinearMap() = default;
  explicit LinearMap(MatrixXd M) : rows_(static_cast<int>(M.rows())),
                                   cols_(static_cast<int>(M.cols())),
                                   dense_(std::move(M)) {}
  LinearMap(int rows, int cols, Fn mul, Fn mul_transpose)
      : rows_(rows), cols_(cols), mul_(std::move(mul)), mul_t_(std::move(mul_transpose)) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool has_dense() const { return dense_.size() > 0; }
  const MatrixXd& dense() const { return dense_; }

  VectorXd mul(const VectorXd& v) const;              ///< B v
  VectorXd mul_transpose(const VectorXd& v) const;    ///< B^T v
  /// Column j of B^T (row j of B), by slicing or by a unit probe.
  VectorXd transpose_col(int j) const;

 private:
  int rows_ = 0, cols_ = 0;
  MatrixXd dense_;
  Fn mul_, mul_t_;
};

/// One bundle subproblem: proximal term D_H + V_H V_H^T, linear cost b with
/// constant offset, bundle map B(y) = B0 + B y over the cone, polyhedral
/// ground set a_lo <= A y <= a_hi (rows with a_lo = a_hi are equations),
/// box y_lo < y < y_hi (infinite entries allowed), and the trace constraint
/// tr x = tau (EQUALITY) or tr x + sigma = tau (UPPER_BOUND).
struct SubproblemData {
  int m = 0;
  VectorXd prox_diag;     ///< D_H > 0, length m
  MatrixXd prox_lowrank;  ///< V_H, m x h_H (h_H may be 0)
  VectorXd b;
  double offset = 0.0;
  ConeSpec cone;
  VectorXd B0;            ///< length cone.dim()
  LinearMap B;            ///< cone.dim() x m
  MatrixXd A;             ///< h_A x m
  VectorXd a_lo, a_hi;
  VectorXd y_lo, y_hi;
  double tau = 1.0;
  TraceMode trace_mode = TraceMode::EQUALITY;

  int num_rows() const { return static_cast<int>(A.rows()); }
  std::vector<int> equality_rows() const;
  bool has_trace_row() const { return !cone.empty(); }
  void validate() const;
};

/// Interior-point iterate.  Bound multipliers are pinned to zero where the
/// corresponding bound is infinite (and on equality rows of A).
struct IterateState {
  VectorXd y, w;
  VectorXd x;
  double sigma = 0.0;
  VectorXd s;
  VectorXd z;
  double zeta = 1.0;
  VectorXd s_alo, s_ahi, s_ylo, s_yhi;
  double mu = 1.0;
};

/// Per-Newton-step coefficient data.
struct KKTContext {
  VectorXd d_y, c_y;          ///< length m, zero where no finite bound
  VectorXd d_w, c_w;          ///< length h_A, zero on equality rows
  std::vector<int> eq_rows;
  BlockScaling scaling;
  VectorXd BtXone;            ///< B^T X_t 1_t
  VectorXd col_norms_sq;      ///< ||(B^T)_{.,j}||^2_{D^{-1}}, j over cone coords
  VectorXd D;                 ///< D_H + d_y
};

KKTContext build_context(const SubproblemData& data, const IterateState& st);

/// Right-hand side of the Newton system, blocks (r_y, r_s, r_x, r_zeta).
struct KKTRhs {
  VectorXd r_y, r_s, r_x;
  double r_zeta = 0.0;
  VectorXd stacked(bool with_trace_row) const;
};

KKTRhs kkt_rhs(const KKTContext& ctx, const SubproblemData& data, const IterateState& st);

/// Applies the full Newton matrix to delta = (dy, ds, dx, dzeta).
VectorXd apply_full_kkt(const KKTContext& ctx, const SubproblemData& data,
                        const VectorXd& delta);

/// Order of the full system: m + h_A + n(t) + (trace row present ? 1 : 0).
int full_order(const SubproblemData& data);

/// Schur-complemented operator on the design space:
/// [D_H + V_H V_H^T + D_y + B^T (X_t - (X_t 1)(X_t 1)^T / eta) B + A^T D_w A] v.
VectorXd apply_schur_H(const KKTContext& ctx, const SubproblemData& data,
                       const VectorXd& v);

/// Number of columns of the Gram factor V = [V_H | A^T D_w^{1/2} | B^T F_t (...)^{1/2}].
int gram_cols(const KKTContext& ctx, const SubproblemData& data);

VectorXd apply_V(const KKTContext& ctx, const SubproblemData& data, const VectorXd& u);
VectorXd apply_Vt(const KKTContext& ctx, const SubproblemData& data, const VectorXd& v);

/// Full Newton step including eliminated quantities.
struct NewtonStep {
  VectorXd dy, ds, dx;
  double dzeta = 0.0;
  VectorXd dw;
  double dsigma = 0.0;
  VectorXd dz;
  VectorXd ds_alo, ds_ahi, ds_ylo, ds_yhi;
  VectorXd stacked(bool with_trace_row) const;  ///< (dy, ds, dx, dzeta)
};

/// Reduced right-hand side for the Schur system (and the equality rows).
struct ReducedRhs {
  VectorXd r_tilde;  ///< length m
  VectorXd r_eq;     ///< one entry per equality row
};

ReducedRhs reduce_rhs(const KKTContext& ctx, const SubproblemData& data, const KKTRhs& rhs);

/// Solver for the reduced system: given (r_tilde, r_eq) returns (dy, ds_eq).
using YSolver = std::function<std::pair<VectorXd, VectorXd>(const VectorXd&, const VectorXd&)>;

/// Recovers the eliminated quantities from (dy, ds, dx, dzeta).
NewtonStep expand_step(const KKTContext& ctx, const SubproblemData& data,
                       const IterateState& st, VectorXd dy, VectorXd ds,
                       VectorXd dx, double dzeta);

NewtonStep reduce_and_backsolve(const KKTContext& ctx, const SubproblemData& data,
                                const IterateState& st, const KKTRhs& rhs,
                                const YSolver& y_solver);

}  // namespace lrkkt
