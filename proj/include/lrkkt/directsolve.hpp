#pragma once

#include "lrkkt/kkt.hpp"

namespace lrkkt {

/// Explicit dense copy of the full Newton matrix (desk scale).
struct DenseKKT {
  MatrixXd K;
  int m = 0, hA = 0, nt = 0;
  bool trace_row = false;
  int order() const { return static_cast<int>(K.rows()); }
};

DenseKKT dense_assemble(const KKTContext& ctx, const SubproblemData& data);

/// Symmetric-indefinite solve (Bunch-Kaufman pivoting) with one step of
/// iterative refinement.
VectorXd dense_solve(const DenseKKT& K, const VectorXd& rhs);

/// Symmetric-indefinite solve of an arbitrary dense system (used for the
/// reduced and augmented reference solves).
VectorXd dense_sym_solve(const MatrixXd& K, const VectorXd& rhs);

/// Exact reference solver for the reduced system: assembles the Schur
/// operator (with the equality rows appended when present) densely and
/// factorizes it.
YSolver make_dense_y_solver(const KKTContext& ctx, const SubproblemData& data);

}  // namespace lrkkt
