#pragma once

#include <Eigen/Core>
#include <cstdint>

namespace biasbench {

// Column-orthonormal PCA basis together with the centering origin.
struct SubspaceBasis {
  Eigen::MatrixXd basis;   // d x k, columns ordered by descending eigenvalue
  Eigen::VectorXd origin;  // mean used for centering

  int ambient_dim() const { return static_cast<int>(basis.rows()); }
  int k() const { return static_cast<int>(basis.cols()); }
  // (x - origin)^T basis.
  Eigen::VectorXd project(const Eigen::VectorXd& x) const;
};

struct AlignmentMatrix {
  Eigen::MatrixXd a;  // k x k
};

struct GfkMatrix {
  Eigen::MatrixXd g;  // d x d, symmetric PSD
};

// Top-k principal directions of mean-centered X (rows = samples). Column
// signs are fixed so the largest-magnitude entry of each column is positive.
// Throws DataError when k exceeds the achievable rank.
SubspaceBasis pca_subspace(const Eigen::MatrixXd& x, int k);

// Principal angles (radians, ascending) between two column-orthonormal bases
// of equal column count.
Eigen::VectorXd principal_angles(const Eigen::MatrixXd& b1, const Eigen::MatrixXd& b2);

// Subspace-disagreement dimensionality: D(k) = 0.5*(sin a_k + sin b_k) with
// a_k/b_k the largest principal angle between the k-dimensional PCA bases of
// the source/target and of their union. Returns the smallest k with
// D(k) >= 1 - 1e-9, or d_max when no k reaches it.
int subspace_disagreement_dim(const Eigen::MatrixXd& xs, const Eigen::MatrixXd& xt, int d_max);

// Closed-form subspace alignment A = Bs^T Bt. Source features map as
// (x - origin_s)^T Bs A, targets as (x - origin_t)^T Bt.
AlignmentMatrix sa_align(const SubspaceBasis& bs, const SubspaceBasis& bt);

// Frobenius objective || Bs A - Bt ||_F^2 minimized by sa_align.
double sa_objective(const SubspaceBasis& bs, const SubspaceBasis& bt, const Eigen::MatrixXd& a);

// Geodesic-flow kernel matrix G = integral over t in [0,1] of P(t) P(t)^T,
// where P(t) interpolates between the source and target subspaces on the
// Grassmannian. Requires k <= d - k so an orthonormal complement exists.
// `seed` fixes the randomized complement completion so runs are bitwise
// reproducible.
GfkMatrix gfk_compute(const SubspaceBasis& bs, const SubspaceBasis& bt, std::uint64_t seed = 0);

// The pieces of the geodesic parametrization, exposed so numerical
// integration can cross-check the closed form.
struct GfkDecomposition {
  Eigen::MatrixXd bs;      // d x k
  Eigen::MatrixXd rs;      // d x (d-k), orthonormal complement of bs
  Eigen::MatrixXd u1;      // k x k
  Eigen::MatrixXd u2;      // (d-k) x k, zero columns where theta == 0
  Eigen::VectorXd theta;   // principal angles, one per subspace direction
  // Phi(t) = bs * u1 * diag(cos(t*theta)) - rs * u2 * diag(sin(t*theta)).
  Eigen::MatrixXd flow_at(double t) const;
};

GfkDecomposition gfk_decompose(const SubspaceBasis& bs, const SubspaceBasis& bt,
                               std::uint64_t seed = 0);

// exp(-(xi - xj)^T G (xi - xj) / sigma^2); symmetric, in (0, 1].
double gfk_kernel_eval(const GfkMatrix& g, const Eigen::VectorXd& xi, const Eigen::VectorXd& xj,
                       double sigma);

// Median Euclidean distance over all pairs of rows of [a; b]; the sigma_0
// bandwidth used by the landmark method.
double median_pairwise_distance(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

}  // namespace biasbench
