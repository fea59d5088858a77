#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"
#include "biasbench/subspace.hpp"

namespace biasbench {

struct LandmarkSelection {
  Eigen::VectorXd beta;     // simplex weights, one per source sample
  std::vector<bool> alpha;  // beta_m > threshold
  double sigma = 0.0;
  double threshold = 0.0;   // median of all beta values
  double objective = 0.0;   // MMD^2 at beta (constant term included)
};

// Kernel-mean matching of the source onto the target: minimizes
// || sum_m beta_m phi(x_m) - (1/N) sum_n phi(x_n) ||^2 over the simplex,
// with per-class weight mass pinned to the source class proportions
// (sum_{m in c} beta_m = M_c / M). The kernel is the GFK-composed Gaussian
// with bandwidth sigma. alpha thresholds beta at its median.
//
// The constraint set factors into one scaled simplex per class, so the
// projection is exact (sorting algorithm per class); projected gradient with
// a 1/L step then converges monotonically. Classes with a single sample make
// their constraint degenerate; they are kept and a warning is recorded.
LandmarkSelection landmark_select(const Eigen::MatrixXd& source_x,
                                  const std::vector<int>& source_y,
                                  const Eigen::MatrixXd& target_x, const GfkMatrix& gfk,
                                  double sigma, std::vector<std::string>* warnings = nullptr,
                                  int max_iterations = 10000);

// MMD^2 objective (including the target-target constant) for an arbitrary
// weight vector; used by the exhaustive-subset oracle.
double landmark_mmd_objective(const Eigen::MatrixXd& source_x, const Eigen::MatrixXd& target_x,
                              const GfkMatrix& gfk, double sigma, const Eigen::VectorXd& beta);

struct LandmarkClassifierResult {
  std::vector<int> predictions;        // one per target sample
  std::vector<int> used_q;             // q exponents that survived
  std::vector<double> kernel_weights;  // chosen simplex weights, one per used q
  double chosen_c = 0.0;
  double validation_accuracy = 0.0;    // on the held-out source remainder
  bool fell_back_to_plain_svm = false;
  std::vector<std::string> warnings;
};

// Full landmark pipeline: sigma_q = 2^q * sigma_0 (median pairwise distance),
// landmarks per q, auxiliary domain pair (source minus landmarks, target plus
// landmarks) with its own GFK kernel, and a convex kernel combination chosen
// together with C on the source remainder. Falls back to a plain linear SVM
// on the source when every q drops.
LandmarkClassifierResult landmark_classifier(const Dataset& source, const Dataset& target,
                                             const std::vector<int>& q_range,
                                             const std::vector<double>& c_grid,
                                             std::uint64_t seed, int subspace_dim = 0,
                                             double mkl_resolution = 0.1);

}  // namespace biasbench
