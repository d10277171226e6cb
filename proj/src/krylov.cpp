#include "lrkkt/krylov.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lrkkt/rng.hpp"

namespace lrkkt {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::CONVERGED: return "CONVERGED";
    case SolveStatus::MAXIT: return "MAXIT";
    case SolveStatus::BREAKDOWN: return "BREAKDOWN";
  }
  return "?";
}

std::pair<VectorXd, SolveReport> minres(const LinOpFn& op, const LinOpFn& pc,
                                        const VectorXd& b, double rel_tol,
                                        int maxit, double safeguard) {
  const auto t0 = std::chrono::steady_clock::now();
  const Eigen::Index N = b.size();
  SolveReport rep;
  rep.safeguard = safeguard;
  VectorXd x = VectorXd::Zero(N);

  auto finish = [&](SolveStatus status, double res_rel) {
    rep.status = status;
    rep.precond_residual = res_rel;
    if (b.norm() > 0.0) {
      ++rep.matvecs;
      rep.true_residual = (op(x) - b).norm() / b.norm();
    } else {
      rep.true_residual = 0.0;
    }
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return std::make_pair(x, rep);
  };

  VectorXd v_prev = VectorXd::Zero(N);  // unnormalized Lanczos vectors
  VectorXd v = b;
  VectorXd z = pc(v);
  const double gamma0_sq = z.dot(v);
  if (gamma0_sq < 0.0)
    throw std::runtime_error("minres: preconditioner is not positive definite");
  double gamma = std::sqrt(gamma0_sq);
  const double res0 = gamma;
  if (res0 == 0.0) return finish(SolveStatus::CONVERGED, 0.0);
  const double tol_abs = rel_tol * safeguard * res0;

  double gamma_old = 1.0;
  double eta = gamma;
  double s_old = 0.0, s_cur = 0.0;
  double c_old = 1.0, c_cur = 1.0;
  VectorXd w = VectorXd::Zero(N), w_old = VectorXd::Zero(N);

  for (int j = 1; j <= maxit; ++j) {
    z /= gamma;
    VectorXd az = op(z);
    ++rep.matvecs;
    const double delta = z.dot(az);
    VectorXd v_next = az - (delta / gamma) * v - (gamma / gamma_old) * v_prev;
    VectorXd z_next = pc(v_next);
    const double gamma_next_sq = z_next.dot(v_next);
    if (gamma_next_sq < 0.0)
      throw std::runtime_error("minres: preconditioner is not positive definite");
    const double gamma_next = std::sqrt(gamma_next_sq);

    const double alpha0 = c_cur * delta - c_old * s_cur * gamma;
    const double alpha1 = std::sqrt(alpha0 * alpha0 + gamma_next * gamma_next);
    const double alpha2 = s_cur * delta + c_old * c_cur * gamma;
    const double alpha3 = s_old * gamma;
    if (alpha1 == 0.0) return finish(SolveStatus::BREAKDOWN, std::abs(eta) / res0);
    c_old = c_cur;
    s_old = s_cur;
    c_cur = alpha0 / alpha1;
    s_cur = gamma_next / alpha1;

    VectorXd w_next = (z - alpha3 * w_old - alpha2 * w) / alpha1;
    x += c_cur * eta * w_next;
    eta = -s_cur * eta;
    rep.iterations = j;

    const double res = std::abs(eta);
    rep.residual_history.push_back(res / res0);
    if (res <= tol_abs) return finish(SolveStatus::CONVERGED, res / res0);
    if (gamma_next < 1e-15 * res0)
      return finish(SolveStatus::BREAKDOWN, res / res0);

    w_old = std::move(w);
    w = std::move(w_next);
    v_prev = std::move(v);
    v = std::move(v_next);
    z = std::move(z_next);
    gamma_old = gamma;
    gamma = gamma_next;
  }
  return finish(SolveStatus::MAXIT, std::abs(eta) / res0);
}

double termination_factor(const LowRankPrecond& P, int m) {
  double log_prod = 0.0;
  for (Eigen::Index i = 0; i < P.Lhat.size(); ++i)
    log_prod -= std::log1p(P.Lhat[i]);
  const double log_min_dinv = -std::log(P.D.maxCoeff());
  return std::exp(0.5 * (log_prod / m + log_min_dinv));
}

double lanczos_cond_estimate(const LinOpFn& op, const LinOpFn& pc, int dim,
                             int iters, std::uint64_t seed) {
  Rng rng(seed);
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = rng.normal();

  std::vector<VectorXd> vs, zs;  // v_i and z_i = M^{-1} v_i
  std::vector<double> alpha, beta;
  VectorXd z = pc(v);
  double nrm = std::sqrt(std::max(z.dot(v), 0.0));
  if (nrm == 0.0) return 1.0;
  v /= nrm;
  z /= nrm;

  for (int j = 0; j < iters; ++j) {
    vs.push_back(v);
    zs.push_back(z);
    VectorXd t = op(z);
    if (j > 0) t -= beta.back() * vs[j - 1];
    const double a = z.dot(t);
    alpha.push_back(a);
    t -= a * v;
    // full reorthogonalization in the preconditioner inner product
    for (int pass = 0; pass < 2; ++pass)
      for (std::size_t i = 0; i < vs.size(); ++i) t -= zs[i].dot(t) * vs[i];
    VectorXd tz = pc(t);
    const double b = std::sqrt(std::max(tz.dot(t), 0.0));
    if (b < 1e-14 * std::abs(alpha[0] == 0.0 ? 1.0 : alpha[0])) break;
    beta.push_back(b);
    v = t / b;
    z = tz / b;
  }

  const int k = static_cast<int>(alpha.size());
  MatrixXd T = MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    T(i, i) = alpha[static_cast<std::size_t>(i)];
    if (i + 1 < k) {
      T(i, i + 1) = beta[static_cast<std::size_t>(i)];
      T(i + 1, i) = beta[static_cast<std::size_t>(i)];
    }
  }
  const EigDecomp d = eig_sym(T);
  const double lo = d.values[k - 1];
  const double hi = d.values[0];
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

}  // namespace lrkkt
