#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "lrkkt/precond.hpp"

namespace lrkkt {

enum class SolveStatus { CONVERGED, MAXIT, BREAKDOWN };

const char* to_string(SolveStatus s);

struct SolveReport {
  SolveStatus status = SolveStatus::CONVERGED;
  int iterations = 0;
  long matvecs = 0;  ///< operator applications, including the exit residual
  double precond_residual = 0.0;  ///< final residual in the M^{-1} norm, relative
  double true_residual = 0.0;     ///< ||Ax-b||/||b|| evaluated once at exit
  double cond_estimate = std::numeric_limits<double>::quiet_NaN();
  int precond_columns = 0;
  double wall_seconds = 0.0;
  double safeguard = 1.0;  ///< applied termination factor
  std::vector<double> residual_history;  ///< M^{-1}-norm residual per iteration
};

using LinOpFn = std::function<VectorXd(const VectorXd&)>;

/// Preconditioned MINRES for a symmetric operator with a symmetric positive
/// definite preconditioner.  Terminates when the preconditioner-norm residual
/// drops below rel_tol * safeguard times its initial value.
std::pair<VectorXd, SolveReport> minres(const LinOpFn& op, const LinOpFn& pc,
                                        const VectorXd& b, double rel_tol,
                                        int maxit, double safeguard = 1.0);

/// Safeguard factor ((prod_i (1+l_i)^{-1})^{1/m} * min_i (D^{-1})_i)^{1/2},
/// evaluated in log space.
double termination_factor(const LowRankPrecond& P, int m);

/// Ritz-value condition estimate of the preconditioned operator after a fixed
/// number of Lanczos steps with full reorthogonalization.
double lanczos_cond_estimate(const LinOpFn& op, const LinOpFn& pc, int dim,
                             int iters, std::uint64_t seed = 20240551);

}  // namespace lrkkt
