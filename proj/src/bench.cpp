#include "lrkkt/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "lrkkt/precond.hpp"
#include "lrkkt/rng.hpp"

namespace lrkkt {

const char* to_string(Solver s) {
  switch (s) {
    case Solver::DS: return "DS";
    case Solver::IT: return "IT";
    case Solver::RP: return "RP";
    case Solver::DP: return "DP";
  }
  return "?";
}

Solver solver_from_string(const std::string& s) {
  if (s == "DS") return Solver::DS;
  if (s == "IT") return Solver::IT;
  if (s == "RP") return Solver::RP;
  if (s == "DP") return Solver::DP;
  throw std::invalid_argument("unknown solver tag: " + s);
}

Metric metric_from_string(const std::string& s) {
  if (s == "matvecs") return Metric::MATVECS;
  if (s == "time") return Metric::TIME;
  if (s == "cond") return Metric::COND;
  if (s == "columns") return Metric::COLUMNS;
  if (s == "iterations") return Metric::ITERATIONS;
  if (s == "dy_dev") return Metric::DY_DEV;
  if (s == "residual") return Metric::TRUE_RESIDUAL;
  throw std::invalid_argument("unknown metric: " + s);
}

SubproblemData gen_maxcut_like(int nodes, double density, int model_order,
                               std::uint64_t seed) {
  if (nodes < 2 || nodes > 500)
    throw std::invalid_argument("gen_maxcut_like: nodes out of range [2,500]");
  if (model_order < 1 || model_order > 20)
    throw std::invalid_argument("gen_maxcut_like: model_order out of range [1,20]");
  if (!(density > 0.0 && density <= 1.0))
    throw std::invalid_argument("gen_maxcut_like: density out of range (0,1]");
  Rng rng(seed);

  const int N = nodes;
  const int h = model_order;

  // random orthonormal subspace
  MatrixXd G(N, h);
  for (int j = 0; j < h; ++j)
    for (int i = 0; i < N; ++i) G(i, j) = rng.normal();
  const MatrixXd P = Eigen::HouseholderQR<MatrixXd>(G).householderQ() *
                     MatrixXd::Identity(N, h);

  // projected graph Laplacian, edges drawn with the given density
  MatrixXd PLP = MatrixXd::Zero(h, h);
  for (int i = 0; i < N; ++i)
    for (int j = i + 1; j < N; ++j)
      if (rng.uniform() < density) {
        const VectorXd d = (P.row(i) - P.row(j)).transpose();
        PLP.noalias() += d * d.transpose();
      }

  SubproblemData data;
  data.m = N;
  data.prox_diag = VectorXd::Ones(N);
  data.prox_lowrank.resize(N, 0);
  data.cone.nonneg_dim = 1;
  data.cone.psd_dims = {h};
  const int nt = data.cone.dim();

  MatrixXd B = MatrixXd::Zero(nt, N);
  for (int i = 0; i < N; ++i) {
    const VectorXd qi = P.row(i).transpose();
    B.col(i).tail(svec_dim(h)) = svec(MatrixXd(static_cast<double>(N) * qi * qi.transpose()), 1e-9);
  }
  data.B = LinearMap(std::move(B));
  data.B0 = VectorXd::Zero(nt);
  data.B0.tail(svec_dim(h)) = svec(0.5 * (PLP + PLP.transpose()), 1e-9);

  VectorXd yhat(N);
  for (int i = 0; i < N; ++i) yhat[i] = rng.normal();
  data.b = -yhat;
  data.offset = 0.5 * yhat.squaredNorm();

  data.A.resize(0, N);
  data.a_lo.resize(0);
  data.a_hi.resize(0);
  data.y_lo = VectorXd::Constant(N, -kInf);
  data.y_hi = VectorXd::Constant(N, kInf);
  data.tau = 1.0;
  data.trace_mode = TraceMode::EQUALITY;
  data.validate();
  return data;
}

SubproblemData gen_random(int m, const ConeSpec& spec, int n_ineq, int n_eq,
                          double box_fraction, int rank_vh, TraceMode mode,
                          std::uint64_t seed) {
  if (m < 1 || m > 500) throw std::invalid_argument("gen_random: m out of range [1,500]");
  spec.validate();
  if (spec.dim() > 300) throw std::invalid_argument("gen_random: cone dimension above 300");
  if (rank_vh != 0 && rank_vh != 2)
    throw std::invalid_argument("gen_random: rank_vh must be 0 or 2");
  if (box_fraction < 0.0 || box_fraction > 1.0)
    throw std::invalid_argument("gen_random: box_fraction out of range [0,1]");

  for (std::uint64_t attempt = 0; attempt < 10; ++attempt) {
    Rng rng(seed + attempt);
    SubproblemData data;
    data.m = m;
    data.prox_diag.resize(m);
    for (int i = 0; i < m; ++i) data.prox_diag[i] = rng.uniform(0.5, 1.5);
    data.prox_lowrank.resize(m, rank_vh);
    if (rank_vh > 0) {
      MatrixXd G(m, rank_vh);
      for (int j = 0; j < rank_vh; ++j)
        for (int i = 0; i < m; ++i) G(i, j) = rng.normal();
      data.prox_lowrank = Eigen::HouseholderQR<MatrixXd>(G).householderQ() *
                          MatrixXd::Identity(m, rank_vh);
    }
    data.cone = spec;
    const int nt = spec.dim();
    MatrixXd B(nt, m);
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < nt; ++i) B(i, j) = rng.normal();
    data.B = LinearMap(std::move(B));
    data.B0.resize(nt);
    for (int i = 0; i < nt; ++i) data.B0[i] = rng.normal();
    data.b.resize(m);
    for (int i = 0; i < m; ++i) data.b[i] = rng.normal();
    data.offset = 0.0;

    VectorXd yhat0(m);
    for (int i = 0; i < m; ++i) yhat0[i] = rng.normal();

    const int hA = n_ineq + n_eq;
    data.A.resize(hA, m);
    for (int i = 0; i < hA; ++i)
      for (int j = 0; j < m; ++j) data.A(i, j) = rng.normal();
    data.a_lo.resize(hA);
    data.a_hi.resize(hA);
    const VectorXd Ay = hA > 0 ? VectorXd(data.A * yhat0) : VectorXd();
    for (int i = 0; i < hA; ++i) {
      if (i < n_ineq) {
        data.a_lo[i] = Ay[i] - rng.uniform(0.5, 1.5);
        data.a_hi[i] = Ay[i] + rng.uniform(0.5, 1.5);
      } else {
        data.a_lo[i] = Ay[i];
        data.a_hi[i] = Ay[i];
      }
    }

    data.y_lo = VectorXd::Constant(m, -kInf);
    data.y_hi = VectorXd::Constant(m, kInf);
    const int nb = static_cast<int>(box_fraction * m);
    for (int i = 0; i < nb; ++i) {
      data.y_lo[i] = yhat0[i] - rng.uniform(0.5, 1.5);
      data.y_hi[i] = yhat0[i] + rng.uniform(0.5, 1.5);
    }
    data.tau = 1.0;
    data.trace_mode = mode;
    try {
      data.validate();
      return data;
    } catch (const std::exception&) {
      continue;
    }
  }
  throw std::runtime_error("gen_random: could not construct a feasible instance");
}

namespace {

struct IterativeSetup {
  LinOpFn pc;
  double safeguard = 1.0;
  int columns = 0;
  double setup_seconds = 0.0;
};

IterativeSetup make_identity_setup() {
  IterativeSetup s;
  s.pc = [](const VectorXd& v) { return v; };
  return s;
}

}  // namespace

std::vector<RunRecord> replay(const SubproblemData& data,
                              const std::vector<KKTSnapshot>& trace,
                              const std::vector<Solver>& solvers,
                              std::uint64_t seed, const std::string& instance_id) {
  using clock = std::chrono::steady_clock;
  std::vector<RunRecord> records;
  SelectionState rp_state;  // persists across the snapshots of this trace
  Rng rp_rng(seed);

  for (std::size_t si = 0; si < trace.size(); ++si) {
    const KKTSnapshot& snap = trace[si];
    const IterateState& st = snap.state;
    const KKTContext ctx = build_context(data, st);
    const KKTRhs& rhs = snap.rhs;
    const int m = data.m;
    const VectorXd dy_ds = snap.ds_solution.head(m);
    const double dy_ds_norm = dy_ds.norm();
    const ReducedRhs red = reduce_rhs(ctx, data, rhs);
    const int n_eq = static_cast<int>(ctx.eq_rows.size());
    const double tol = solver_tol(snap.mu);

    const LinOpFn h_op = [&](const VectorXd& v) { return apply_schur_H(ctx, data, v); };

    for (Solver solver : solvers) {
      RunRecord rec;
      rec.instance_id = instance_id;
      rec.snapshot = static_cast<int>(si);
      rec.mu = snap.mu;
      rec.solver = solver;
      rec.bundle_size = data.cone.dim();

      if (solver == Solver::DS) {
        const auto t0 = clock::now();
        const DenseKKT K = dense_assemble(ctx, data);
        const VectorXd full_rhs = rhs.stacked(data.has_trace_row());
        const VectorXd sol = dense_solve(K, full_rhs);
        rec.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        const double rhs_norm = full_rhs.norm();
        rec.true_residual = rhs_norm > 0.0
                                ? (K.K.selfadjointView<Eigen::Lower>() * sol - full_rhs).norm() / rhs_norm
                                : 0.0;
        rec.dy_dev = 0.0;
        records.push_back(rec);
        continue;
      }

      IterativeSetup setup;
      if (solver == Solver::IT) {
        setup = make_identity_setup();
      } else {
        const auto t0 = clock::now();
        MatrixXd Vhat;
        if (solver == Solver::DP) {
          Vhat = deterministic_subspace(ctx, data);
        } else {
          const auto v_mul = [&](const VectorXd& u) { return apply_V(ctx, data, u); };
          Vhat = random_subspace(v_mul, gram_cols(ctx, data), ctx.D, rp_state, rp_rng);
        }
        auto P = std::make_shared<LowRankPrecond>(precond_setup(ctx.D, std::move(Vhat)));
        setup.pc = [P](const VectorXd& v) { return P->apply(v); };
        setup.safeguard = termination_factor(*P, m);
        setup.columns = P->khat;
        setup.setup_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        if (solver == Solver::RP) rp_state.khat_prev = P->khat;
      }

      LinOpFn op = h_op;
      LinOpFn pc = setup.pc;
      VectorXd rhs_vec = red.r_tilde;
      if (n_eq > 0) {
        // augmented indefinite system [H A_eq^T; A_eq 0] with the
        // H-preconditioner on the leading block
        MatrixXd Aeq(n_eq, m);
        for (int k = 0; k < n_eq; ++k) Aeq.row(k) = data.A.row(ctx.eq_rows[k]);
        op = [&ctx, &data, Aeq, m, n_eq](const VectorXd& v) {
          VectorXd out(m + n_eq);
          out.head(m) = apply_schur_H(ctx, data, v.head(m));
          out.head(m).noalias() += Aeq.transpose() * v.tail(n_eq);
          out.tail(n_eq) = Aeq * v.head(m);
          return out;
        };
        pc = [inner = setup.pc, m, n_eq](const VectorXd& v) {
          VectorXd out(m + n_eq);
          out.head(m) = inner(v.head(m));
          out.tail(n_eq) = v.tail(n_eq);
          return out;
        };
        rhs_vec.conservativeResize(m + n_eq);
        rhs_vec.tail(n_eq) = red.r_eq;
      }
      const int maxit = 5 * static_cast<int>(rhs_vec.size());

      const auto t_solve = clock::now();
      auto [sol, rep] = minres(op, pc, rhs_vec, tol, maxit, setup.safeguard);
      // a-posteriori error control: lambda_min of the Schur operator is at
      // least min_i D_i, so ||dy - dy*|| <= ||r|| max_i (D^{-1})_i is
      // computable; refine with further solves at the same tolerance until
      // the step error clears the replay agreement budget
      const double dinv_max = ctx.D.cwiseInverse().maxCoeff();
      for (int round = 0; round < 4; ++round) {
        const VectorXd r = rhs_vec - op(sol);
        ++rep.matvecs;
        rep.true_residual = rhs_vec.norm() > 0.0 ? r.norm() / rhs_vec.norm() : 0.0;
        const double err_bound = r.norm() * dinv_max;
        if (err_bound <= 50.0 * tol * sol.head(m).norm()) break;
        auto [corr, rep2] = minres(op, pc, r, tol, maxit, setup.safeguard);
        sol += corr;
        rep.matvecs += rep2.matvecs;
        rep.iterations += rep2.iterations;
        if (rep2.status != SolveStatus::CONVERGED) rep.status = rep2.status;
      }
      rep.wall_seconds =
          std::chrono::duration<double>(clock::now() - t_solve).count();
      const VectorXd dy = sol.head(m);
      if (solver == Solver::RP) rp_state.n_mult = rep.matvecs;

      rec.status = rep.status;
      rec.iterations = rep.iterations;
      rec.matvecs = rep.matvecs;
      rec.precond_residual = rep.precond_residual;
      rec.true_residual = rep.true_residual;
      rec.precond_columns = setup.columns;
      rec.wall_seconds = rep.wall_seconds + setup.setup_seconds;
      rec.dy_dev = dy_ds_norm > 0.0 ? (dy - dy_ds).norm() / dy_ds_norm : (dy - dy_ds).norm();
      // condition estimate of the (preconditioned) H block; equality rows are
      // ignored and the time is not charged to the solve
      rec.cond_estimate = lanczos_cond_estimate(h_op, setup.pc, m, std::min(m, 100));
      records.push_back(rec);
    }
  }
  return records;
}

std::string mu_group_label(double mu) {
  if (mu >= 100.0) return "(inf,100]";
  if (mu >= 1.0) return "(100,1]";
  if (mu >= 0.01) return "(1,0.01]";
  return "(0.01,0)";
}

std::string bundle_group_label(int bundle_size) {
  if (bundle_size <= 50) return "(0,50]";
  if (bundle_size <= 500) return "(50,500]";
  if (bundle_size <= 1500) return "(500,1500]";
  return "(1500,inf]";
}

namespace {

double metric_value(const RunRecord& r, Metric metric) {
  switch (metric) {
    case Metric::MATVECS: return static_cast<double>(r.matvecs);
    case Metric::TIME: return r.wall_seconds;
    case Metric::COND: return r.cond_estimate;
    case Metric::COLUMNS: return static_cast<double>(r.precond_columns);
    case Metric::ITERATIONS: return static_cast<double>(r.iterations);
    case Metric::DY_DEV: return r.dy_dev;
    case Metric::TRUE_RESIDUAL: return r.true_residual;
  }
  return 0.0;
}

/// Quantile by linear interpolation between closest ranks of the sorted data.
double quantile(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double h = (static_cast<double>(n) - 1.0) * q;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<QuartileSummary> summarize(const std::vector<RunRecord>& records,
                                       GroupBy grouping, Metric metric) {
  if (records.empty()) throw std::invalid_argument("summarize: empty record set");
  const std::vector<std::string> mu_groups = {"(inf,100]", "(100,1]", "(1,0.01]", "(0.01,0)"};
  const std::vector<std::string> bundle_groups = {"(0,50]", "(50,500]", "(500,1500]", "(1500,inf]"};
  const std::vector<std::string>& groups = grouping == GroupBy::MU ? mu_groups : bundle_groups;
  const std::vector<Solver> solver_order = {Solver::DS, Solver::IT, Solver::RP, Solver::DP};

  std::vector<QuartileSummary> out;
  for (const std::string& g : groups) {
    for (Solver solver : solver_order) {
      std::vector<double> vals;
      for (const RunRecord& r : records) {
        if (r.solver != solver) continue;
        const std::string rg = grouping == GroupBy::MU ? mu_group_label(r.mu)
                                                       : bundle_group_label(r.bundle_size);
        if (rg != g) continue;
        const double v = metric_value(r, metric);
        if (std::isfinite(v)) vals.push_back(v);
      }
      bool solver_present = false;
      for (const RunRecord& r : records)
        if (r.solver == solver) solver_present = true;
      if (!solver_present) continue;

      QuartileSummary s;
      s.group = g;
      s.solver = to_string(solver);
      s.count = static_cast<int>(vals.size());
      if (!vals.empty()) {
        std::sort(vals.begin(), vals.end());
        s.min = vals.front();
        s.max = vals.back();
        s.q1 = quantile(vals, 0.25);
        s.median = quantile(vals, 0.5);
        s.q3 = quantile(vals, 0.75);
        const double iqr = s.q3 - s.q1;
        s.whisker_hi = s.q3;
        for (double v : vals)
          if (v <= s.q3 + 1.5 * iqr) s.whisker_hi = v;
        s.whisker_lo = s.q1;
        for (auto it = vals.rbegin(); it != vals.rend(); ++it)
          if (*it >= s.q1 - 1.5 * iqr) s.whisker_lo = *it;
        // keep min <= whisker_lo <= q1 <= q3 <= whisker_hi <= max even when
        // the nearest datum jumps past the interpolated quartile
        s.whisker_lo = std::min(s.whisker_lo, s.q1);
        s.whisker_hi = std::max(s.whisker_hi, s.q3);
      }
      out.push_back(s);
    }
  }
  return out;
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

void emit_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
  out << "instance,snapshot,mu,solver,status,iterations,matvecs,precond_residual,"
         "true_residual,cond_estimate,precond_columns,wall_seconds,dy_dev,bundle_size\n";
  for (const RunRecord& r : records) {
    out << r.instance_id << ',' << r.snapshot << ',' << fmt(r.mu) << ','
        << to_string(r.solver) << ',' << to_string(r.status) << ',' << r.iterations << ','
        << r.matvecs << ',' << fmt(r.precond_residual) << ',' << fmt(r.true_residual) << ','
        << fmt(r.cond_estimate) << ',' << r.precond_columns << ',' << fmt(r.wall_seconds)
        << ',' << fmt(r.dy_dev) << ',' << r.bundle_size << '\n';
  }
}

std::vector<RunRecord> parse_records_csv(std::istream& in) {
  std::vector<RunRecord> records;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 14) throw std::runtime_error("parse_records_csv: malformed line: " + line);
    RunRecord r;
    r.instance_id = f[0];
    r.snapshot = std::stoi(f[1]);
    r.mu = std::stod(f[2]);
    r.solver = solver_from_string(f[3]);
    r.status = f[4] == "CONVERGED" ? SolveStatus::CONVERGED
               : f[4] == "MAXIT"   ? SolveStatus::MAXIT
                                   : SolveStatus::BREAKDOWN;
    r.iterations = std::stoi(f[5]);
    r.matvecs = std::stol(f[6]);
    r.precond_residual = f[7].empty() ? 0.0 : std::stod(f[7]);
    r.true_residual = f[8].empty() ? 0.0 : std::stod(f[8]);
    r.cond_estimate = f[9].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[9]);
    r.precond_columns = std::stoi(f[10]);
    r.wall_seconds = f[11].empty() ? 0.0 : std::stod(f[11]);
    r.dy_dev = f[12].empty() ? 0.0 : std::stod(f[12]);
    r.bundle_size = std::stoi(f[13]);
    records.push_back(r);
  }
  return records;
}

void emit_summary_csv(std::ostream& out, const std::vector<QuartileSummary>& rows) {
  out << "# quartiles by linear interpolation between closest ranks; whiskers by the 1.5*IQR rule\n";
  out << "group,solver,count,min,q1,median,q3,max,whisker_lo,whisker_hi\n";
  for (const QuartileSummary& s : rows) {
    out << s.group << ',' << s.solver << ',' << s.count << ',';
    if (s.count == 0) {
      out << ",,,,,,\n";
      continue;
    }
    out << fmt(s.min) << ',' << fmt(s.q1) << ',' << fmt(s.median) << ',' << fmt(s.q3) << ','
        << fmt(s.max) << ',' << fmt(s.whisker_lo) << ',' << fmt(s.whisker_hi) << '\n';
  }
}

}  // namespace lrkkt
