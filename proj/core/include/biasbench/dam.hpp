#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "biasbench/linear_svm.hpp"

namespace biasbench {

struct DamConfig {
  double theta = 1.0;            // weight of the prediction-agreement terms
  std::vector<double> gammas{};  // one per source model, >= 0, at least one > 0
  double epsilon = 0.1;          // epsilon-insensitive tube
  double c = 1.0;                // regression trade-off
};

// Optional labeled target block for the supervised variant.
struct DamLabeledTarget {
  Eigen::MatrixXd x;
  std::vector<double> y;  // regression targets (e.g. +1/-1)
};

struct DamResult {
  LinearModel model;            // (w, b) of the target predictor
  Eigen::VectorXd f_unlabeled;  // learned prediction variables on the target
  Eigen::VectorXd f_labeled;    // present iff a labeled block was given
  Eigen::VectorXd xi;           // slack of constraint w.x + b - f <= eps + xi
  Eigen::VectorXd xi_star;      // slack of the mirrored constraint
  double objective = 0.0;
  std::vector<double> objective_trace;  // non-increasing across iterations
  int iterations = 0;
};

// Learns a target-domain predictor by regressing onto its own prediction
// variables f, which are pulled toward the gamma-weighted source-model
// predictions (and toward true labels on the optional labeled block):
//
//   min over (w, b, f)   0.5*||w||^2 + C * sum_i L_eps(w.x_i + b - f_i)
//                        + (theta/2) * [ ||f_l - y_l||^2
//                                        + sum_s gamma_s * ||f_u - f_u^s||^2 ]
//
// Solved exactly in f for fixed (w, b) (closed form), leaving a smooth
// strongly-convex problem in (w, b) minimized by monotone gradient descent.
DamResult dam_train(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                    const DamConfig& config,
                    const std::optional<DamLabeledTarget>& labeled = std::nullopt,
                    double grad_tol = 1e-8, int max_iterations = 200000);

// Full objective of Eq.-style DAM at an arbitrary point; used for oracle
// comparisons and the "feasible candidate" bound checks.
double dam_objective(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                     const DamConfig& config, const std::optional<DamLabeledTarget>& labeled,
                     const Eigen::VectorXd& w, double b, const Eigen::VectorXd& f_unlabeled,
                     const Eigen::VectorXd& f_labeled);

// Max-norm of the reduced-problem gradient at (w, b); the f-block optimality
// is exact by construction, so this is the KKT residual of the full system.
double dam_kkt_residual(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                        const DamConfig& config, const std::optional<DamLabeledTarget>& labeled,
                        const Eigen::VectorXd& w, double b);

}  // namespace biasbench
