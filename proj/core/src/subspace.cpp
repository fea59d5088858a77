#include "biasbench/subspace.hpp"

#include <Eigen/Dense>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <vector>

#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

Eigen::VectorXd SubspaceBasis::project(const Eigen::VectorXd& x) const {
  return basis.transpose() * (x - origin);
}

SubspaceBasis pca_subspace(const Eigen::MatrixXd& x, int k) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 2) throw DataError("pca_subspace: need at least 2 samples");
  if (k < 1 || k > d) throw DataError("pca_subspace: k out of range");

  SubspaceBasis out;
  out.origin = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - out.origin.transpose();

  // Thin SVD of the centered data: right singular vectors are the principal
  // directions, singular values give the achievable rank.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  const double scale = sv.size() > 0 ? sv[0] : 0.0;
  const double rank_tol = std::max(1e-12, scale * 1e-10);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > rank_tol) ++rank;
  if (k > rank)
    throw DataError("pca_subspace: requested k=" + std::to_string(k) +
                    " exceeds data rank; achievable k=" + std::to_string(rank));

  out.basis = svd.matrixV().leftCols(k);
  // Sign convention: largest-magnitude entry of each column is positive.
  for (Eigen::Index c = 0; c < out.basis.cols(); ++c) {
    Eigen::Index imax = 0;
    out.basis.col(c).cwiseAbs().maxCoeff(&imax);
    if (out.basis(imax, c) < 0.0) out.basis.col(c) = -out.basis.col(c);
  }
  return out;
}

Eigen::VectorXd principal_angles(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw DataError("principal_angles: bases must share shape");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b1.transpose() * b2);
  Eigen::VectorXd cosines = svd.singularValues();  // descending
  Eigen::VectorXd angles(cosines.size());
  for (Eigen::Index i = 0; i < cosines.size(); ++i)
    angles[i] = std::acos(std::clamp(cosines[i], -1.0, 1.0));
  return angles;  // ascending angles (cosines were descending)
}

int subspace_disagreement_dim(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt, int d_max) {
  if (d_max < 1) throw DataError("subspace_disagreement_dim: d_max must be >= 1");
  Eigen::MatrixXd xu(xs.rows() + xt.rows(), xs.cols());
  xu << xs, xt;

  for (int k = 1; k <= d_max; ++k) {
    const SubspaceBasis bs = pca_subspace(xs, k);
    const SubspaceBasis bt = pca_subspace(xt, k);
    const SubspaceBasis bu = pca_subspace(xu, k);
    const Eigen::VectorXd a = principal_angles(bs.basis, bu.basis);
    const Eigen::VectorXd b = principal_angles(bt.basis, bu.basis);
    const double dk = 0.5 * (std::sin(a[a.size() - 1]) + std::sin(b[b.size() - 1]));
    if (dk >= 1.0 - 1e-9) return k;
  }
  return d_max;  // disagreement never saturates; fall back to the cap
}

AlignmentMatrix sa_align(const SubspaceBasis& bs, const SubspaceBasis& bt) {
  if (bs.k() != bt.k() || bs.ambient_dim() != bt.ambient_dim())
    throw DataError("sa_align: subspace shape mismatch");
  return AlignmentMatrix{bs.basis.transpose() * bt.basis};
}

double sa_objective(const SubspaceBasis& bs, const SubspaceBasis& bt, const Eigen::MatrixXd& a) {
  return (bs.basis * a - bt.basis).squaredNorm();
}

GfkDecomposition gfk_decompose(const SubspaceBasis& bs, const SubspaceBasis& bt,
                               std::uint64_t seed) {
  const int d = bs.ambient_dim();
  const int k = bs.k();
  if (bt.ambient_dim() != d || bt.k() != k)
    throw DataError("gfk_decompose: subspace shape mismatch");
  if (k > d - k)
    throw DataError("gfk_decompose: need k <= d - k for the orthonormal complement (k=" +
                    std::to_string(k) + ", d=" + std::to_string(d) + ")");

  GfkDecomposition dec;
  dec.bs = bs.basis;

  // Orthonormal complement of bs: QR of [bs | seeded Gaussian columns]; any
  // complement yields the same G, seeding keeps runs bitwise stable.
  Rng rng(seed, 0, "gfk_complement");
  Eigen::MatrixXd full(d, d);
  full.leftCols(k) = bs.basis;
  for (Eigen::Index c = k; c < d; ++c)
    for (Eigen::Index r = 0; r < d; ++r) full(r, c) = rng.next_gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(full);
  Eigen::MatrixXd q = qr.householderQ();
  // Re-orient Q's leading block to match bs exactly (QR may flip signs).
  for (int c = 0; c < k; ++c)
    if (q.col(c).dot(bs.basis.col(c)) < 0.0) q.col(c) = -q.col(c);
  dec.rs = q.rightCols(d - k);

  // Generalized SVD pieces: Bs^T Bt = U1 diag(cos theta) V^T and
  // Rs^T Bt V = -U2 diag(sin theta).
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(bs.basis.transpose() * bt.basis,
                                        Eigen::ComputeFullU | Eigen::ComputeFullV);
  dec.u1 = svd.matrixU();
  const Eigen::MatrixXd v = svd.matrixV();
  Eigen::VectorXd cosines = svd.singularValues();
  dec.theta.resize(k);
  for (int i = 0; i < k; ++i)
    dec.theta[i] = std::acos(std::clamp(cosines[i], -1.0, 1.0));

  const Eigen::MatrixXd w = dec.rs.transpose() * bt.basis * v;  // (d-k) x k
  dec.u2 = Eigen::MatrixXd::Zero(d - k, k);
  for (int i = 0; i < k; ++i) {
    const double s = std::sin(dec.theta[i]);
    // Columns with theta ~ 0 never contribute (their integrand terms vanish).
    if (s > 1e-12) dec.u2.col(i) = -w.col(i) / s;
  }
  return dec;
}

Eigen::MatrixXd GfkDecomposition::flow_at(double t) const {
  const Eigen::VectorXd c = (theta.array() * t).cos();
  const Eigen::VectorXd s = (theta.array() * t).sin();
  return bs * u1 * c.asDiagonal() - rs * u2 * s.asDiagonal();
}

GfkMatrix gfk_compute(const SubspaceBasis& bs, const SubspaceBasis& bt, std::uint64_t seed) {
  const GfkDecomposition dec = gfk_decompose(bs, bt, seed);
  const int k = static_cast<int>(dec.theta.size());

  // Closed-form integrals of cos^2, sin*cos and sin^2 over t in [0, 1].
  Eigen::VectorXd l1(k), l2(k), l3(k);
  for (int i = 0; i < k; ++i) {
    const double th = dec.theta[i];
    if (th < 1e-8) {
      l1[i] = 1.0;
      l2[i] = 0.0;
      l3[i] = 0.0;
    } else {
      l1[i] = 0.5 + std::sin(2.0 * th) / (4.0 * th);
      l2[i] = std::sin(th) * std::sin(th) / (2.0 * th);
      l3[i] = 0.5 - std::sin(2.0 * th) / (4.0 * th);
    }
  }

  const Eigen::MatrixXd p = dec.bs * dec.u1;  // d x k
  const Eigen::MatrixXd q = dec.rs * dec.u2;  // d x k
  Eigen::MatrixXd g = p * l1.asDiagonal() * p.transpose() -
                      p * l2.asDiagonal() * q.transpose() -
                      q * l2.asDiagonal() * p.transpose() +
                      q * l3.asDiagonal() * q.transpose();
  // Symmetrize away round-off.
  g = 0.5 * (g + g.transpose()).eval();
  return GfkMatrix{std::move(g)};
}

double gfk_kernel_eval(const GfkMatrix& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                       double sigma) {
  if (sigma <= 0.0) throw DataError("gfk_kernel_eval: sigma must be positive");
  if (xi.size() != xj.size() || xi.size() != g.g.rows())
    throw DataError("gfk_kernel_eval: dimension mismatch");
  const Eigen::VectorXd diff = xi - xj;
  return std::exp(-diff.dot(g.g * diff) / (sigma * sigma));
}

double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd all(a.rows() + b.rows(), a.cols());
  all << a, b;
  const Eigen::Index n = all.rows();
  if (n < 2) throw DataError("median_pairwise_distance: need at least 2 points");
  std::vector<double> dists;
  dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dists.push_back((all.row(i) - all.row(j)).norm());
  std::sort(dists.begin(), dists.end());
  const std::size_t m = dists.size();
  return (m % 2 == 1) ? dists[m / 2] : 0.5 * (dists[m / 2 - 1] + dists[m / 2]);
}

}  // namespace biasbench
