#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"

namespace biasbench {

// Tie rules baked into every model this library trains: sign(0) = +1 and
// one-vs-all argmax ties resolve to the lowest class index. The tag travels
// with serialized models.
inline constexpr const char* kTieRuleTag = "ties-v1:sign0=+1,argmax=lowest-index";

struct LinearModel {
  Eigen::VectorXd weights;
  double offset = 0.0;
  double trained_c = 0.0;

  int dim() const { return static_cast<int>(weights.size()); }
};

struct OvaModel {
  std::vector<LinearModel> models;       // one per class, aligned with classes
  std::vector<int> classes;              // sorted ascending

  int dim() const { return models.empty() ? 0 : models.front().dim(); }
  std::size_t num_classes() const { return models.size(); }
};

struct CvGrid {
  std::vector<double> c_values;
  int folds = 5;
  std::uint64_t seed = 0;
};

// Default C grid: decades 1e-6 .. 1e3.
std::vector<double> default_c_grid();

// Optional per-pass diagnostics from the solver.
struct SvmDiagnostics {
  std::vector<double> alpha;                   // final dual variables
  std::vector<double> primal_objective_trace;  // one entry per outer pass
  int passes = 0;
  bool converged = false;
};

// Hinge-loss linear SVM trained by deterministic dual coordinate descent with
// fixed cyclic order. The offset is handled through an augmented constant
// feature of value 1 (regularized). Stops when the maximal projected gradient
// over a pass drops below `tol` or after `max_passes` passes.
//
// X: one row per sample. y: +1/-1 labels. Throws DataError when only one
// label is present.
LinearModel svm_train_binary(const Eigen::MatrixXd& x, const std::vector<int>& y, double c,
                             SvmDiagnostics* diag = nullptr, double tol = 1e-6,
                             int max_passes = 100000);

// Primal objective 0.5*||w~||^2 + C * sum hinge, with w~ the augmented weight
// vector (weights and offset).
double svm_primal_objective(const LinearModel& m, const Eigen::MatrixXd& x,
                            const std::vector<int>& y, double c);
// Dual objective sum(alpha) - 0.5 * || sum alpha_i y_i x~_i ||^2.
double svm_dual_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const std::vector<double>& alpha);

double predict_margin(const LinearModel& m, const Eigen::VectorXd& x);
int predict_label(const LinearModel& m, const Eigen::VectorXd& x);  // sign(0) = +1

// One-vs-all multiclass: class c against the rest, prediction by argmax
// margin, ties to the lowest class index.
OvaModel ova_train(const Eigen::MatrixXd& x, const std::vector<int>& y, double c);
OvaModel ova_train(const Dataset& train, double c);
int ova_predict(const OvaModel& m, const Eigen::VectorXd& x);
// Per-class margins aligned with m.classes.
Eigen::VectorXd ova_margins(const OvaModel& m, const Eigen::VectorXd& x);

// Stratified k-fold cross validation over grid.c_values; returns the C with
// the highest mean validation accuracy, ties resolved to the smallest C.
double cv_select_c(const Eigen::MatrixXd& x, const std::vector<int>& y, const CvGrid& grid);
double cv_select_c(const Dataset& train, const CvGrid& grid);

}  // namespace biasbench
