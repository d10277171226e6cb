#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "lrkkt/ipm.hpp"
#include "lrkkt/krylov.hpp"

namespace lrkkt {

enum class Solver { DS, IT, RP, DP };

const char* to_string(Solver s);
Solver solver_from_string(const std::string& s);

struct RunRecord {
  std::string instance_id;
  int snapshot = 0;
  double mu = 0.0;
  Solver solver = Solver::DS;
  SolveStatus status = SolveStatus::CONVERGED;
  int iterations = 0;
  long matvecs = 0;
  double precond_residual = 0.0;
  double true_residual = 0.0;
  double cond_estimate = std::numeric_limits<double>::quiet_NaN();
  int precond_columns = 0;
  double wall_seconds = 0.0;
  double dy_dev = 0.0;  ///< ||dy - dy_DS|| / ||dy_DS||
  int bundle_size = 0;  ///< number of rows of B
};

/// Desk-scale analogue of the Max-Cut relaxation: one design variable per
/// node, rank-one diagonal coefficient matrices projected onto a random
/// h-dimensional subspace, one nonnegative slack coordinate, unit trace.
SubproblemData gen_maxcut_like(int nodes, double density, int model_order,
                               std::uint64_t seed);

/// Random dense instance exercising the bound and linear-constraint paths.
SubproblemData gen_random(int m, const ConeSpec& spec, int n_ineq, int n_eq,
                          double box_fraction, int rank_vh, TraceMode mode,
                          std::uint64_t seed);

/// Replays every snapshot with every requested solver at tolerance
/// min{0.01 mu, 1e-6}.  The randomized selection state persists across the
/// snapshots of the trace; the deterministic preconditioner is rebuilt per
/// snapshot.  Wall times exclude the condition estimation.
std::vector<RunRecord> replay(const SubproblemData& data,
                              const std::vector<KKTSnapshot>& trace,
                              const std::vector<Solver>& solvers,
                              std::uint64_t seed, const std::string& instance_id);

enum class GroupBy { MU, BUNDLE };
enum class Metric { MATVECS, TIME, COND, COLUMNS, ITERATIONS, DY_DEV, TRUE_RESIDUAL };

Metric metric_from_string(const std::string& s);

struct QuartileSummary {
  std::string group;
  std::string solver;
  int count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_lo = 0, whisker_hi = 0;
};

std::string mu_group_label(double mu);
std::string bundle_group_label(int bundle_size);

std::vector<QuartileSummary> summarize(const std::vector<RunRecord>& records,
                                       GroupBy grouping, Metric metric);

void emit_records_csv(std::ostream& out, const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_records_csv(std::istream& in);
void emit_summary_csv(std::ostream& out, const std::vector<QuartileSummary>& rows);

}  // namespace lrkkt
