#include "lrkkt/cones.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lrkkt {

int ConeSpec::dim() const {
  int d = nonneg_dim;
  for (int q : soc_dims) d += q;
  for (int s : psd_dims) d += svec_dim(s);
  return d;
}

int ConeSpec::trace_units() const {
  int u = nonneg_dim;
  for (int s : psd_dims) u += s;
  return u;
}

int ConeSpec::psd_offset(int block) const {
  int off = nonneg_dim;
  for (int i = 0; i < block; ++i) off += svec_dim(psd_dims[i]);
  return off;
}

void ConeSpec::validate() const {
  if (nonneg_dim < 0) throw std::invalid_argument("ConeSpec: negative nonneg_dim");
  if (!soc_dims.empty())
    throw std::invalid_argument("ConeSpec: second order cone blocks are not supported");
  for (int s : psd_dims)
    if (s < 1) throw std::invalid_argument("ConeSpec: PSD block order must be >= 1");
}

namespace {
void check_dim(const ConeSpec& spec, const VectorXd& x, const char* who) {
  if (x.size() != spec.dim())
    throw std::invalid_argument(std::string(who) + ": vector length does not match cone");
}
}  // namespace

VectorXd cone_identity(const ConeSpec& spec) {
  VectorXd e = VectorXd::Zero(spec.dim());
  e.head(spec.nonneg_dim).setOnes();
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    e.segment(spec.psd_offset(static_cast<int>(b)), svec_dim(s)) =
        svec(MatrixXd::Identity(s, s));
  }
  return e;
}

double cone_trace(const ConeSpec& spec, const VectorXd& x) {
  check_dim(spec, x, "cone_trace");
  double t = x.head(spec.nonneg_dim).sum();
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    // trace of smat(segment): the diagonal entries of the svec layout
    int k = off;
    for (int j = 0; j < s; ++j) {
      t += x[k];
      k += s - j;
    }
  }
  return t;
}

bool cone_member(const ConeSpec& spec, const VectorXd& x, double tol) {
  check_dim(spec, x, "cone_member");
  for (int i = 0; i < spec.nonneg_dim; ++i)
    if (x[i] < -tol) return false;
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const EigDecomp d =
        eig_sym(smat(x.segment(spec.psd_offset(static_cast<int>(b)), svec_dim(s))));
    if (d.values[s - 1] < -tol * (1.0 + std::abs(d.values[0]))) return false;
  }
  return true;
}

bool cone_interior(const ConeSpec& spec, const VectorXd& x) {
  check_dim(spec, x, "cone_interior");
  for (int i = 0; i < spec.nonneg_dim; ++i)
    if (!(x[i] > 0.0)) return false;
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const EigDecomp d =
        eig_sym(smat(x.segment(spec.psd_offset(static_cast<int>(b)), svec_dim(s))));
    if (!(d.values[0] > 0.0) || !(d.values[s - 1] > 1e-13 * d.values[0])) return false;
  }
  return true;
}

VectorXd cone_inverse(const ConeSpec& spec, const VectorXd& x) {
  check_dim(spec, x, "cone_inverse");
  VectorXd inv(x.size());
  for (int i = 0; i < spec.nonneg_dim; ++i) {
    if (x[i] == 0.0) throw std::invalid_argument("cone_inverse: zero coordinate");
    inv[i] = 1.0 / x[i];
  }
  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd X = smat(x.segment(off, svec_dim(s)));
    const EigDecomp d = eig_sym(X);
    if (!(std::abs(d.values[s - 1]) > 0.0))
      throw std::invalid_argument("cone_inverse: singular PSD block");
    inv.segment(off, svec_dim(s)) = svec(
        MatrixXd(d.vectors * d.values.cwiseInverse().asDiagonal() * d.vectors.transpose()),
        1e-9);
  }
  return inv;
}

BlockScaling build_scaling(const ConeSpec& spec, const VectorXd& x,
                           const VectorXd& z, double zeta, double sigma) {
  spec.validate();
  check_dim(spec, x, "build_scaling");
  check_dim(spec, z, "build_scaling");
  if (!(zeta > 0.0)) throw std::invalid_argument("build_scaling: zeta must be positive");
  if (sigma < 0.0) throw std::invalid_argument("build_scaling: sigma must be nonnegative");
  if (!cone_interior(spec, x))
    throw std::invalid_argument("build_scaling: x is not strictly interior");
  if (!cone_interior(spec, z))
    throw std::invalid_argument("build_scaling: z is not strictly interior");

  BlockScaling S;
  S.spec = spec;
  S.nonneg_ratio = x.head(spec.nonneg_dim).cwiseQuotient(z.head(spec.nonneg_dim));
  S.scaled_trace_vec.resize(spec.dim());
  S.factor_trace_vec.resize(spec.dim());
  S.scaled_trace_vec.head(spec.nonneg_dim) = S.nonneg_ratio;
  S.factor_trace_vec.head(spec.nonneg_dim) = S.nonneg_ratio.cwiseSqrt();

  for (std::size_t b = 0; b < spec.psd_dims.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd X = smat(x.segment(off, svec_dim(s)));
    const MatrixXd Z = smat(z.segment(off, svec_dim(s)));
    BlockScaling::PsdBlock blk;
    blk.W = nt_scaling(X, Z);
    blk.eig = eig_sym(blk.W);
    if (!(blk.eig.values[s - 1] > 0.0))
      throw std::invalid_argument("build_scaling: NT scaling not positive definite");
    blk.VW = blk.eig.vectors * blk.eig.values.cwiseSqrt().asDiagonal();
    blk.Winv = blk.eig.vectors * blk.eig.values.cwiseInverse().asDiagonal() *
               blk.eig.vectors.transpose();
    S.scaled_trace_vec.segment(off, svec_dim(s)) = svec(MatrixXd(blk.W * blk.W), 1e-9);
    // F^T 1 on this block is svec(VW^T VW) = svec(Lam_W)
    S.factor_trace_vec.segment(off, svec_dim(s)) =
        svec(MatrixXd(blk.eig.values.asDiagonal()));
    S.psd.push_back(std::move(blk));
  }

  S.trace_quad = S.factor_trace_vec.squaredNorm();
  S.zeta_inv_sigma = sigma / zeta;
  S.eta = S.zeta_inv_sigma + S.trace_quad;
  // guard against rounding pushing eta below ||F^T 1||^2
  const double floor = S.trace_quad * (1.0 + 1e-12);
  if (S.eta < floor && S.trace_quad > 0.0) S.eta = floor;
  return S;
}

VectorXd BlockScaling::apply(const VectorXd& v) const {
  if (v.size() != spec.dim())
    throw std::invalid_argument("BlockScaling::apply: dimension mismatch");
  VectorXd out(v.size());
  out.head(spec.nonneg_dim) = v.head(spec.nonneg_dim).cwiseProduct(nonneg_ratio);
  for (std::size_t b = 0; b < psd.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd A = smat(v.segment(off, svec_dim(s)));
    out.segment(off, svec_dim(s)) = svec(MatrixXd(psd[b].W * A * psd[b].W), 1e-7);
  }
  return out;
}

VectorXd BlockScaling::apply_inverse(const VectorXd& v) const {
  if (v.size() != spec.dim())
    throw std::invalid_argument("BlockScaling::apply_inverse: dimension mismatch");
  VectorXd out(v.size());
  out.head(spec.nonneg_dim) = v.head(spec.nonneg_dim).cwiseQuotient(nonneg_ratio);
  for (std::size_t b = 0; b < psd.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd A = smat(v.segment(off, svec_dim(s)));
    out.segment(off, svec_dim(s)) =
        svec(MatrixXd(psd[b].Winv * A * psd[b].Winv), 1e-7);
  }
  return out;
}

VectorXd BlockScaling::apply_factor(const VectorXd& v) const {
  if (v.size() != spec.dim())
    throw std::invalid_argument("BlockScaling::apply_factor: dimension mismatch");
  VectorXd out(v.size());
  out.head(spec.nonneg_dim) =
      v.head(spec.nonneg_dim).cwiseProduct(nonneg_ratio.cwiseSqrt());
  for (std::size_t b = 0; b < psd.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd A = smat(v.segment(off, svec_dim(s)));
    const MatrixXd M = psd[b].VW * A * psd[b].VW.transpose();
    out.segment(off, svec_dim(s)) = svec(MatrixXd(0.5 * (M + M.transpose())), 1e-7);
  }
  return out;
}

VectorXd BlockScaling::apply_factor_transpose(const VectorXd& v) const {
  if (v.size() != spec.dim())
    throw std::invalid_argument("BlockScaling::apply_factor_transpose: dimension mismatch");
  VectorXd out(v.size());
  out.head(spec.nonneg_dim) =
      v.head(spec.nonneg_dim).cwiseProduct(nonneg_ratio.cwiseSqrt());
  for (std::size_t b = 0; b < psd.size(); ++b) {
    const int s = spec.psd_dims[b];
    const int off = spec.psd_offset(static_cast<int>(b));
    const MatrixXd A = smat(v.segment(off, svec_dim(s)));
    const MatrixXd M = psd[b].VW.transpose() * A * psd[b].VW;
    out.segment(off, svec_dim(s)) = svec(MatrixXd(0.5 * (M + M.transpose())), 1e-7);
  }
  return out;
}

}  // namespace lrkkt
