#pragma once

#include <Eigen/Core>
#include <vector>

namespace biasbench {

// Max-margin machine over a precomputed kernel, trained by the same
// deterministic dual coordinate descent as the linear solver. The offset is
// folded into the kernel (K + 1), mirroring the augmented-feature convention.
struct KernelModel {
  std::vector<double> alpha;  // dual variables, one per training sample
  std::vector<int> y;         // +1/-1 training labels
  double offset = 0.0;        // sum_i alpha_i y_i (from the +1 kernel block)
};

KernelModel kernel_svm_train(const Eigen::MatrixXd& k, const std::vector<int>& y, double c,
                             double tol = 1e-6, int max_passes = 100000);

// Margin for a point whose kernel row against the training set is `k_row`.
double kernel_svm_margin(const KernelModel& m, const Eigen::VectorXd& k_row);

// One-vs-all wrapper over precomputed kernels.
struct KernelOvaModel {
  std::vector<KernelModel> models;
  std::vector<int> classes;
};

KernelOvaModel kernel_ova_train(const Eigen::MatrixXd& k, const std::vector<int>& y, double c);
int kernel_ova_predict(const KernelOvaModel& m, const Eigen::VectorXd& k_row);
Eigen::VectorXd kernel_ova_margins(const KernelOvaModel& m, const Eigen::VectorXd& k_row);

}  // namespace biasbench
