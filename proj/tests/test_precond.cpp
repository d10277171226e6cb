#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "lrkkt/precond.hpp"
#include "test_instances.hpp"

using namespace lrkkt;
using namespace testutil;

TEST_CASE("precond_setup truncation") {
  Rng rng(1);
  SUBCASE("no columns") {
    const LowRankPrecond P = precond_setup(random_positive(6, rng), MatrixXd(6, 0));
    CHECK(P.khat == 0);
    const VectorXd v = random_vector(6, rng);
    CHECK(rel_err(P.apply(v), VectorXd(v.cwiseQuotient(P.D))) < 1e-14);
  }
  SUBCASE("unit column on the truncation boundary is kept") {
    MatrixXd Vhat = MatrixXd::Zero(4, 1);
    Vhat(2, 0) = 1.0;
    const LowRankPrecond P = precond_setup(VectorXd::Ones(4), Vhat);
    CHECK(P.khat == 1);
    CHECK(P.Lhat[0] == doctest::Approx(1.0));
  }
  SUBCASE("eigenpairs match a dense eigensolver") {
    const VectorXd D = random_positive(50, rng);
    const MatrixXd Vhat = random_matrix(50, 8, rng);
    const LowRankPrecond P = precond_setup(D, Vhat);
    const MatrixXd M = Vhat.transpose() * D.cwiseInverse().asDiagonal() * Vhat;
    const EigDecomp d = eig_sym(0.5 * (M + M.transpose()));
    for (int i = 0; i < P.khat; ++i) {
      CHECK(P.Lhat[i] == doctest::Approx(d.values[i]).epsilon(1e-10));
      CHECK(P.Lhat[i] >= 1.0);
      CHECK(std::abs(std::abs(P.Phat.col(i).dot(d.vectors.col(i))) - 1.0) < 1e-8);
    }
    CHECK((P.Phat.transpose() * P.Phat - MatrixXd::Identity(P.khat, P.khat)).norm() < 1e-10);
  }
  SUBCASE("nonpositive diagonal is rejected") {
    VectorXd D = VectorXd::Ones(3);
    D[1] = 0.0;
    CHECK_THROWS(precond_setup(D, MatrixXd(3, 1)));
  }
}

TEST_CASE("precond_apply is the Woodbury inverse") {
  Rng rng(2);
  SUBCASE("spanned unit direction") {
    MatrixXd Vhat = MatrixXd::Zero(3, 1);
    Vhat(0, 0) = 1.0;
    const LowRankPrecond P = precond_setup(VectorXd::Ones(3), Vhat);
    const VectorXd got = P.apply(Eigen::Vector3d(1, 0, 0));
    CHECK(got[0] == doctest::Approx(0.5));
    CHECK(std::abs(got[1]) + std::abs(got[2]) == 0.0);
  }
  SUBCASE("full-rank untruncated case matches the dense inverse") {
    const int m = 30, k = 5;
    MatrixXd Q = random_matrix(m, k, rng);
    Q = Eigen::HouseholderQR<MatrixXd>(Q).householderQ() * MatrixXd::Identity(m, k);
    MatrixXd Vhat = Q;
    for (int j = 0; j < k; ++j) Vhat.col(j) *= 2.0 + j;  // eigenvalues all >= 1
    const VectorXd D = VectorXd::Ones(m);
    const LowRankPrecond P = precond_setup(D, Vhat);
    REQUIRE(P.khat == k);
    const MatrixXd H = MatrixXd::Identity(m, m) + Vhat * Vhat.transpose();
    const VectorXd v = random_vector(m, rng);
    CHECK((H * P.apply(v) - v).norm() <= 1e-10 * v.norm());
  }
  SUBCASE("dimension mismatch") {
    const LowRankPrecond P = precond_setup(VectorXd::Ones(3), MatrixXd(3, 0));
    CHECK_THROWS(P.apply(VectorXd::Ones(4)));
  }
}

TEST_CASE("Woodbury identity for the truncated preconditioner, m up to 300") {
  Rng rng(3);
  for (int m : {20, 120, 300}) {
    const VectorXd D = random_positive(m, rng, 0.2, 3.0);
    const MatrixXd Vhat = random_matrix(m, 10, rng);
    const LowRankPrecond P = precond_setup(D, Vhat);
    const VectorXd v = random_vector(m, rng);
    // H_trunc = D + (Vhat Phat)(Vhat Phat)^T
    const MatrixXd VP = Vhat * P.Phat;
    const VectorXd hv = D.cwiseProduct(v) + VP * (VP.transpose() * v);
    CHECK(rel_err(P.apply(hv), v) < 1e-9);
  }
}

TEST_CASE("svd_subspace reaches the exact condition number of the truncated SVD") {
  Rng rng(4);
  SUBCASE("k = 0") {
    const int m = 20, n = 6;
    const VectorXd D = random_positive(m, rng);
    const MatrixXd V = random_matrix(m, n, rng);
    Eigen::JacobiSVD<MatrixXd> svd(D.cwiseSqrt().cwiseInverse().asDiagonal() * V);
    const double s1 = svd.singularValues()[0];
    CHECK(kappa_exact(D, V, MatrixXd(n, 0)) ==
          doctest::Approx(1.0 + s1 * s1).epsilon(1e-9));
  }
  SUBCASE("rank-deficient tail gives kappa = 1") {
    const int m = 12, n = 4;
    const VectorXd D = VectorXd::Ones(m);
    MatrixXd V = random_matrix(m, n - 1, rng);
    MatrixXd Vfull(m, n);
    Vfull << V, V.col(0);  // last singular value is zero
    const MatrixXd Omega = svd_subspace(D, Vfull, n - 1);
    CHECK(kappa_exact(D, Vfull, Omega) == doctest::Approx(1.0).epsilon(1e-8));
  }
  SUBCASE("random instance at k = 3") {
    const int m = 40, n = 10, k = 3;
    const VectorXd D = random_positive(m, rng);
    const MatrixXd V = random_matrix(m, n, rng);
    Eigen::JacobiSVD<MatrixXd> svd(D.cwiseSqrt().cwiseInverse().asDiagonal() * V);
    const double sk = svd.singularValues()[k];
    CHECK(kappa_exact(D, V, svd_subspace(D, V, k)) ==
          doctest::Approx(1.0 + sk * sk).epsilon(1e-8));
  }
  SUBCASE("k >= n is rejected") {
    CHECK_THROWS(svd_subspace(VectorXd::Ones(5), MatrixXd::Zero(5, 3), 3));
  }
}

TEST_CASE("kappa is monotone when adding SVD directions") {
  Rng rng(5);
  const int m = 30, n = 8;
  const VectorXd D = random_positive(m, rng);
  const MatrixXd V = random_matrix(m, n, rng);
  double prev = kappa_exact(D, V, MatrixXd(n, 0));
  for (int k = 1; k < n; ++k) {
    const double cur = kappa_exact(D, V, svd_subspace(D, V, k));
    CHECK(cur <= prev * (1.0 + 1e-10));
    prev = cur;
  }
}

TEST_CASE("random_subspace first call with no history requests no columns") {
  Rng rng(6);
  SelectionState state;
  const VectorXd D = VectorXd::Ones(10);
  const MatrixXd V = random_matrix(10, 6, rng);
  const auto mul = [&](const VectorXd& p) { return VectorXd(V * p); };
  const MatrixXd Vhat = random_subspace(mul, 6, D, state, rng);
  CHECK(Vhat.cols() == 0);
  CHECK(state.P_old.cols() == 0);
}

TEST_CASE("random_subspace column counts and retained window") {
  Rng rng(7);
  const int n = 20, m = 25;
  const VectorXd D = VectorXd::Ones(m);

  SUBCASE("small Rayleigh spectrum keeps the minimum window of 3") {
    const MatrixXd V = 0.01 * random_matrix(m, n, rng);
    const auto mul = [&](const VectorXd& p) { return VectorXd(V * p); };
    SelectionState state;
    state.n_mult = 100;
    state.khat_prev = 2;
    // k = min{n, 3+2*2, ceil(sqrt(100*120/4) - 50)} = min{20, 7, 5} = 5
    const MatrixXd Vhat = random_subspace(mul, n, D, state, rng);
    CHECK(Vhat.cols() == 5);
    CHECK(state.P_old.cols() == 3);
    CHECK((state.P_old.transpose() * state.P_old - MatrixXd::Identity(3, 3)).norm() < 1e-10);
  }

  SUBCASE("large leading eigenvalues extend the window past 3") {
    // V with strongly decaying singular values far above the threshold floor
    MatrixXd V = MatrixXd::Zero(m, n);
    for (int i = 0; i < n; ++i) V(i, i) = i < 6 ? 1e4 : 1e-3;
    const auto mul = [&](const VectorXd& p) { return VectorXd(V * p); };
    SelectionState state;
    state.n_mult = 400;  // subsequent-call branch needs history below
    state.khat_prev = 3;
    const MatrixXd Vhat1 = random_subspace(mul, n, D, state, rng);
    // k = min{20, 3+2*3, ceil(sqrt(400*420/4) - 200)} = min{20, 9, 5}
    CHECK(Vhat1.cols() == 5);
    // second call goes through the extension branch
    const long k_low = state.P_old.cols();
    const MatrixXd Vhat2 = random_subspace(mul, n, D, state, rng);
    const int k_expect = static_cast<int>(k_low) +
                         std::max(3, static_cast<int>(std::floor(std::sqrt(400.0) / 2.0)) -
                                         static_cast<int>(k_low));
    CHECK(Vhat2.cols() == k_expect);
    CHECK(state.P_old.cols() >= 3);
  }
}

TEST_CASE("random_subspace is reproducible under a fixed seed") {
  const int n = 20, m = 30;
  Rng data_rng(8);
  const MatrixXd V = random_matrix(m, n, data_rng);
  const VectorXd D = random_positive(m, data_rng);
  const auto mul = [&](const VectorXd& p) { return VectorXd(V * p); };

  MatrixXd first, second;
  for (int run = 0; run < 2; ++run) {
    Rng rng(12345);
    SelectionState state;
    state.n_mult = 100;
    state.khat_prev = 2;
    MatrixXd Vhat = random_subspace(mul, n, D, state, rng);
    Vhat = random_subspace(mul, n, D, state, rng);
    (run == 0 ? first : second) = Vhat;
  }
  CHECK((first - second).norm() == 0.0);
}

TEST_CASE("deterministic_subspace thresholds proximal low-rank columns at 10/m tr D_H") {
  Rng rng(9);
  InstanceConfig cfg;
  cfg.m = 8;
  cfg.nonneg = 1;
  cfg.psd = {};
  cfg.rank_vh = 0;
  SubproblemData data = make_instance(cfg, rng);
  data.prox_diag = VectorXd::Ones(8);       // rho = 10
  data.B = LinearMap(MatrixXd::Zero(1, 8)); // cone contributes nothing
  data.prox_lowrank = MatrixXd::Zero(8, 3);
  data.prox_lowrank(0, 0) = std::sqrt(10.5);  // above
  data.prox_lowrank(1, 1) = std::sqrt(9.5);   // below
  data.prox_lowrank(2, 2) = std::sqrt(11.0);  // above
  const IterateState st = make_state(data, rng);
  const KKTContext ctx = build_context(data, st);
  const MatrixXd Vhat = deterministic_subspace(ctx, data);
  REQUIRE(Vhat.cols() == 2);
  CHECK(Vhat.col(0).isApprox(data.prox_lowrank.col(0)));
  CHECK(Vhat.col(1).isApprox(data.prox_lowrank.col(2)));
}

TEST_CASE("deterministic_subspace returns no columns when everything is small") {
  Rng rng(10);
  InstanceConfig cfg;
  cfg.m = 6;
  cfg.nonneg = 2;
  cfg.psd = {2};
  cfg.rank_vh = 2;
  SubproblemData data = make_instance(cfg, rng);
  data.prox_lowrank *= 1e-3;
  data.B = LinearMap(MatrixXd(1e-3 * data.B.dense()));
  const IterateState st = make_state(data, rng);
  const KKTContext ctx = build_context(data, st);
  CHECK(deterministic_subspace(ctx, data).cols() == 0);
}

TEST_CASE("constraint columns are appended as A^T D_w columns") {
  Rng rng(11);
  InstanceConfig cfg;
  cfg.m = 5;
  cfg.nonneg = 1;
  cfg.psd = {};
  cfg.n_ineq = 2;
  SubproblemData data = make_instance(cfg, rng);
  data.prox_diag = VectorXd::Ones(5);
  data.B = LinearMap(MatrixXd::Zero(1, 5));
  data.A.row(0) *= 20.0;  // push row 0 above the threshold
  IterateState st = make_state(data, rng);
  st.s_alo[1] = 1e-3;  // keep row 1 below it
  st.s_ahi[1] = 1e-3;
  const KKTContext ctx = build_context(data, st);
  const MatrixXd Vhat = deterministic_subspace(ctx, data);
  REQUIRE(Vhat.cols() == 1);
  CHECK(rel_err(VectorXd(Vhat.col(0)), VectorXd(ctx.d_w[0] * data.A.row(0).transpose())) <
        1e-12);
}

namespace {

/// Dense third Gram block: B^T F (I - f f^T / eta)^{1/2} in the svec basis.
MatrixXd dense_cone_factor_block(const KKTContext& ctx, const SubproblemData& data) {
  const BlockScaling& S = ctx.scaling;
  const int nt = S.spec.dim();
  MatrixXd F(nt, nt);
  VectorXd e = VectorXd::Zero(nt);
  for (int j = 0; j < nt; ++j) {
    e[j] = 1.0;
    F.col(j) = S.apply_factor(e);
    e[j] = 0.0;
  }
  const VectorXd nrm = S.factor_trace_vec / std::sqrt(S.trace_quad);
  const MatrixXd R = MatrixXd::Identity(nt, nt) -
                     (1.0 - std::sqrt(S.zeta_inv_sigma / S.eta)) * nrm * nrm.transpose();
  return data.B.dense().transpose() * F * R;
}

}  // namespace

TEST_CASE("append_nonneg_columns") {
  Rng rng(12);
  InstanceConfig cfg;
  cfg.m = 6;
  cfg.nonneg = 3;
  cfg.psd = {};
  SubproblemData data = make_instance(cfg, rng);
  data.prox_diag = VectorXd::Ones(6);
  data.B = LinearMap(MatrixXd(4.0 * random_matrix(3, 6, rng)));

  SUBCASE("mu-scaled inactive coordinates are skipped") {
    IterateState st = make_state(data, rng);
    st.x.head(3) = Eigen::Vector3d(1e-6, 1e-6, 1e-6);
    st.z.head(3) = Eigen::Vector3d(1.0, 1.0, 1.0);
    const KKTContext ctx = build_context(data, st);
    MatrixXd Vhat(6, 0);
    append_nonneg_columns(Vhat, ctx, data, 10.0);
    CHECK(Vhat.cols() == 0);
  }

  SUBCASE("selected columns equal the dense factor columns") {
    IterateState st = make_state(data, rng);
    st.x.head(3) = Eigen::Vector3d(50.0, 1e-6, 40.0);
    st.z.head(3) = Eigen::Vector3d(0.5, 1.0, 0.5);
    const KKTContext ctx = build_context(data, st);
    MatrixXd Vhat(6, 0);
    append_nonneg_columns(Vhat, ctx, data, 10.0);
    REQUIRE(Vhat.cols() == 2);
    const MatrixXd block = dense_cone_factor_block(ctx, data);
    CHECK(rel_err(VectorXd(Vhat.col(0)), VectorXd(block.col(0))) < 1e-9);
    CHECK(rel_err(VectorXd(Vhat.col(1)), VectorXd(block.col(2))) < 1e-9);
  }

  SUBCASE("dominant trace term kills the correction") {
    IterateState st = make_state(data, rng);
    st.x.head(3) = Eigen::Vector3d(50.0, 1.0, 1.0);
    st.z.head(3) = Eigen::Vector3d(0.5, 1.0, 1.0);
    st.sigma = 1e9;  // zeta^{-1} sigma dominates eta
    st.zeta = 1.0;
    const KKTContext ctx = build_context(data, st);
    MatrixXd Vhat(6, 0);
    append_nonneg_columns(Vhat, ctx, data, 10.0);
    REQUIRE(Vhat.cols() >= 1);
    const VectorXd plain = std::sqrt(st.x[0] / st.z[0]) * data.B.transpose_col(0);
    CHECK(rel_err(VectorXd(Vhat.col(0)), plain) < 1e-4);
  }
}

TEST_CASE("append_psd_columns") {
  Rng rng(13);

  SUBCASE("early exit for a uniformly tiny block") {
    InstanceConfig cfg;
    cfg.m = 5;
    cfg.nonneg = 0;
    cfg.psd = {3};
    SubproblemData data = make_instance(cfg, rng);
    data.prox_diag = VectorXd::Ones(5);
    IterateState st = make_state(data, rng);
    st.x = svec(MatrixXd(1e-8 * MatrixXd::Identity(3, 3)));
    st.z = svec(MatrixXd::Identity(3, 3));
    const KKTContext ctx = build_context(data, st);
    MatrixXd Vhat(5, 0);
    append_psd_columns(Vhat, ctx, data, 0, 10.0);
    CHECK(Vhat.cols() == 0);
  }

  SUBCASE("order-1 block reduces to the nonnegative formula") {
    InstanceConfig cfgp;
    cfgp.m = 5;
    cfgp.nonneg = 0;
    cfgp.psd = {1};
    SubproblemData pdata = make_instance(cfgp, rng);
    pdata.prox_diag = VectorXd::Ones(5);
    pdata.B = LinearMap(MatrixXd(5.0 * random_matrix(1, 5, rng)));
    IterateState pst = make_state(pdata, rng);
    pst.x[0] = 30.0;
    pst.z[0] = 0.5;

    SubproblemData ndata = pdata;
    ndata.cone.nonneg_dim = 1;
    ndata.cone.psd_dims = {};
    IterateState nst = pst;

    const KKTContext pctx = build_context(pdata, pst);
    const KKTContext nctx = build_context(ndata, nst);
    MatrixXd Vp(5, 0), Vn(5, 0);
    append_psd_columns(Vp, pctx, pdata, 0, 10.0);
    append_nonneg_columns(Vn, nctx, ndata, 10.0);
    REQUIRE(Vp.cols() == Vn.cols());
    REQUIRE(Vp.cols() == 1);
    CHECK(rel_err(VectorXd(Vp.col(0)), VectorXd(Vn.col(0))) < 1e-9);
  }

  SUBCASE("columns match the dense factor and its singular directions") {
    InstanceConfig cfg;
    cfg.m = 8;
    cfg.nonneg = 0;
    cfg.psd = {3};
    SubproblemData data = make_instance(cfg, rng);
    data.prox_diag = VectorXd::Ones(8);
    data.B = LinearMap(MatrixXd(3.0 * random_matrix(6, 8, rng)));
    IterateState st = make_state(data, rng);
    // one dominant eigен-direction in X against identity Z
    MatrixXd Q = random_matrix(3, 3, rng);
    Q = Eigen::HouseholderQR<MatrixXd>(Q).householderQ();
    const MatrixXd X = Q * Eigen::Vector3d(60.0, 8.0, 1e-4).asDiagonal() * Q.transpose();
    st.x = svec(0.5 * (X + X.transpose()), 1e-9);
    st.z = svec(MatrixXd::Identity(3, 3));
    const KKTContext ctx = build_context(data, st);
    MatrixXd Vhat(8, 0);
    append_psd_columns(Vhat, ctx, data, 0, 10.0);
    REQUIRE(Vhat.cols() >= 2);

    const MatrixXd block = dense_cone_factor_block(ctx, data);
    const BlockScaling::PsdBlock& blk = ctx.scaling.psd[0];
    const KronRank1Eig kr = kron_rank1_eigensystem(blk.eig, ctx.scaling.eta);

    // rebuild every candidate dense column and verify each emitted column
    // appears among them
    std::vector<VectorXd> candidates;
    const VectorXd lam = blk.eig.values;
    const double eta = ctx.scaling.eta;
    const double coef = (std::sqrt(eta) - std::sqrt(eta - lam.squaredNorm())) /
                        (std::sqrt(eta) * lam.squaredNorm());
    for (int ih = 0; ih < 3; ++ih) {
      if (kr.U.values[ih] <= 0) continue;
      const VectorXd lu = lam.cwiseProduct(kr.U.vectors.col(ih));
      const VectorXd uf = (lu - coef * lam.dot(lu) * lam) / std::sqrt(kr.U.values[ih]);
      candidates.push_back(block * svec(MatrixXd(uf.asDiagonal())));
    }
    // mixed right-singular vectors are the coordinate-basis svec frames
    const MatrixXd Id3 = MatrixXd::Identity(3, 3);
    for (const auto& mp : kr.mixed)
      candidates.push_back(block * rank1_svec_mixed(Id3, mp.i, mp.j));

    for (int c = 0; c < Vhat.cols(); ++c) {
      double best = 1e30;
      for (const VectorXd& cand : candidates)
        best = std::min(best, (Vhat.col(c) - cand).norm() / std::max(1.0, cand.norm()));
      CHECK(best < 1e-9);
    }
  }
}

TEST_CASE("deterministic condition bound holds with equality for thin factors") {
  Rng rng(14);
  const int m = 25, n = 7, k = 3;
  const VectorXd D = random_positive(m, rng);
  const MatrixXd V = random_matrix(m, n, rng);
  MatrixXd Q = random_matrix(n, n, rng);
  Q = Eigen::HouseholderQR<MatrixXd>(Q).householderQ();
  const MatrixXd Pl = Q.leftCols(k);
  const MatrixXd Ps = Q.rightCols(n - k);

  const MatrixXd Hp = MatrixXd(D.asDiagonal()) + (V * Pl) * (V * Pl).transpose();
  const EigDecomp hp = eig_sym(Hp);
  const MatrixXd hpinv_sqrt = sym_inv_sqrt(hp);
  const MatrixXd mid = hpinv_sqrt * (V * Ps) * (V * Ps).transpose() * hpinv_sqrt;
  const double bound = 1.0 + eig_sym(0.5 * (mid + mid.transpose())).values[0];
  const double kappa = kappa_exact(D, V, Pl);
  CHECK(kappa <= bound * (1.0 + 1e-10));
  // rank(V Ps) = n-k < m, so the bound is attained
  CHECK(kappa == doctest::Approx(bound).epsilon(1e-8));
}

TEST_CASE("det_bound dominates kappa on Gaussian draws") {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 8, k = 4, p = 2, m = 20;
    VectorXd sigma(n);
    for (int i = 0; i < n; ++i) sigma[i] = std::pow(10.0, rng.uniform(-1.0, 1.5));
    std::sort(sigma.data(), sigma.data() + n, std::greater<double>());
    const VectorXd D = random_positive(m, rng);
    // V with D^{-1/2} V = Q [Sigma; 0] P^T in a random frame
    MatrixXd QF = random_matrix(m, m, rng);
    const MatrixXd Qm = Eigen::HouseholderQR<MatrixXd>(QF).householderQ() *
                        MatrixXd::Identity(m, n);
    MatrixXd PF = random_matrix(n, n, rng);
    const MatrixXd Pn = Eigen::HouseholderQR<MatrixXd>(PF).householderQ();
    const MatrixXd V =
        D.cwiseSqrt().asDiagonal() * (Qm * sigma.asDiagonal() * Pn.transpose());
    const MatrixXd Omega = random_matrix(n, k + p, rng);

    const double bound = det_bound(sigma, Omega, k);
    // same subspace expressed in the world frame, orthonormalized
    const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(MatrixXd(Pn * Omega)).householderQ() *
                       MatrixXd::Identity(n, k + p);
    const double kappa = kappa_exact(D, V, Q);
    CHECK(kappa <= bound * (1.0 + 1e-9));
  }
}

TEST_CASE("det_bound rejects rank-deficient leading rows") {
  Rng rng(16);
  MatrixXd Omega = random_matrix(6, 4, rng);
  Omega.row(1) = Omega.row(0);
  VectorXd sigma(6);
  sigma << 5, 4, 3, 2, 1, 0.5;
  CHECK_THROWS_WITH_AS(det_bound(sigma, Omega, 2), doctest::Contains("linearly independent"),
                       std::invalid_argument);
}

TEST_CASE("spec_bound dominates kappa for every split") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = rng.uniform_int(3, 12), m = 20;
    const VectorXd D = random_positive(m, rng);
    const MatrixXd B = random_matrix(n, m, rng);
    const MatrixXd X = random_spd(n, rng, 0.01);
    const EigDecomp d = eig_sym(X);
    const MatrixXd Xh = sym_sqrt(d);
    const MatrixXd V = B.transpose() * Xh;
    for (int k = 0; k <= n; ++k) {
      const double bound = spec_bound(D, B, X, k);
      const double kappa = kappa_exact(D, V, MatrixXd(d.vectors.leftCols(k)));
      CHECK(kappa <= bound * (1.0 + 1e-9));
    }
  }
}

TEST_CASE("proj_bound dominates kappa for projector preconditioners") {
  Rng rng(18);
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 25, n = 8, k = 3;
    const VectorXd D = random_positive(m, rng);
    const MatrixXd V = random_matrix(m, n, rng);
    const MatrixXd Omega = random_matrix(n, k, rng);
    const MatrixXd Q = Eigen::HouseholderQR<MatrixXd>(Omega).householderQ() *
                       MatrixXd::Identity(n, k);
    CHECK(kappa_exact(D, V, Q) <= proj_bound(D, V, Omega) * (1.0 + 1e-9));
  }
}

TEST_CASE("moment estimates of the preconditioned quadratic form") {
  Rng rng(19);
  const int n = 10, k = 4, trials = 20000;
  VectorXd sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = std::pow(10.0, rng.uniform(-1.0, 1.0));
  const VectorXd x = random_vector(n, rng);
  const auto [mean, var] = moments_mc(sigma, x, k, trials, rng);

  double var_want = 0.0;
  for (int i = 0; i < n; ++i)
    var_want += sigma[i] * sigma[i] / (1.0 + sigma[i] * sigma[i]) * x[i] * x[i];
  var_want = 2.0 / k * var_want * var_want;

  const double se = std::sqrt(var / trials);
  CHECK(std::abs(mean - x.squaredNorm()) <= 4.0 * se);
  CHECK(std::abs(var - var_want) <= 0.1 * var_want);
}

TEST_CASE("probabilistic tail bound holds empirically (smoke)") {
  Rng rng(20);
  const int n = 10, k = 3, p = 4, trials = 200;
  const double t = 1.5, u = 1.5;
  VectorXd sigma(n);
  for (int i = 0; i < n; ++i) sigma[i] = std::pow(10.0, rng.uniform(-0.5, 1.0));
  std::sort(sigma.data(), sigma.data() + n, std::greater<double>());

  double tail = 0.0;
  for (int i = k; i < n; ++i) tail += 1.0 + sigma[i] * sigma[i];
  const double s2 = sigma[k] * sigma[k];
  const double e = std::exp(1.0);
  const double thresh =
      2.0 + s2 +
      std::pow(t * (std::sqrt(3.0 * k / (p + 1.0)) + u * e * std::sqrt(k + p + 0.0) / (p + 1.0)) *
                       (1.0 + s2) +
                   t * e * std::sqrt(k + p + 0.0) / (p + 1.0) * std::sqrt(tail),
               2.0);
  int violations = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const MatrixXd Omega = random_matrix(n, k + p, rng);
    if (lmax_projector_form(sigma, Omega) > thresh) ++violations;
  }
  const double rate = static_cast<double>(violations) / trials;
  const double budget = 2.0 * std::pow(t, -p) + std::exp(-u * u / 2.0);
  CHECK(rate <= budget + 3.0 * std::sqrt(budget * (1.0 - budget) / trials));
}
