#pragma once

#include <vector>

#include "lrkkt/directsolve.hpp"
#include "lrkkt/kkt.hpp"

namespace lrkkt {

struct IPMConfig {
  double mu_reduction = 0.2;
  double step_fraction = 0.95;
  double mu_min = -1.0;  ///< <=0 means 1e-8 * mu_0
  int max_newton = 200;
};

/// Per-KKT relative solve tolerance min{0.01 mu, 1e-6}.
inline double solver_tol(double mu) { return std::min(0.01 * mu, 1e-6); }

/// One replayable Newton system: the iterate, the right-hand side and the
/// direct-solver ground truth (stacked (dy, ds, dx, dzeta)).
struct KKTSnapshot {
  int index = 0;
  double mu = 0.0;
  IterateState state;
  KKTRhs rhs;
  VectorXd ds_solution;
};

IterateState ipm_initialize(const SubproblemData& data);

/// Average of all active complementarity products.
double complementarity_average(const SubproblemData& data, const IterateState& st);

struct IPMResult {
  std::vector<KKTSnapshot> trace;
  IterateState final_state;
  double mu_final = 0.0;
};

/// Centering-only path following; every Newton system is solved by the dense
/// reference solver and recorded for replay.
IPMResult ipm_run(const SubproblemData& data, const IPMConfig& config);

}  // namespace lrkkt
