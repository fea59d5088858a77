#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <vector>

#include "biasbench/dataset.hpp"

namespace biasbench {

// Multi-collection max-margin model: a shared visual-world vector plus one
// additive per-collection correction. The per-collection model i is exactly
// w_vw + delta_i; offsets follow the augmented-constant-feature convention
// of the linear solver.
struct UnbiasModel {
  Eigen::VectorXd w_vw;
  double w_vw_offset = 0.0;
  std::vector<Eigen::VectorXd> deltas;
  std::vector<double> delta_offsets;
  double lambda = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  // Slack diagnostics at the returned solution.
  double xi_sum = 0.0;   // hinge mass of the shared model
  double rho_sum = 0.0;  // hinge mass of the per-collection models

  int dim() const { return static_cast<int>(w_vw.size()); }
  std::size_t num_collections() const { return deltas.size(); }
};

struct UnbiasGrid {
  std::vector<double> lambda_candidates{0.5, 1.0, 5.0, 10.0};
  std::vector<double> c1_candidates{1e2, 1e3, 1e4};
  std::vector<double> c2_candidates{10.0, 20.0, 40.0, 60.0, 80.0, 100.0};
};

enum class SelectionMetric { kAveragePrecision, kAccuracy };

struct UnbiasSelection {
  double lambda = 0.0;
  double c1 = 0.0;
  double c2 = 0.0;
  double score = 0.0;  // validation score of the winning triple
  // One row per evaluated triple: lambda, c1, c2, score (NaN when skipped).
  std::vector<std::array<double, 4>> table;
};

// Trains the joint objective
//   0.5*||w_vw||^2 + (lambda/2)*sum_i ||delta_i||^2
//   + C1 * sum hinge(y * w_vw.x) + C2 * sum hinge(y * (w_vw+delta_i).x)
// by deterministic dual coordinate descent; every dataset must carry both
// +1 and -1 labels. Deterministic for fixed inputs.
UnbiasModel unbias_train(const std::vector<Dataset>& datasets, double lambda, double c1,
                         double c2, double tol = 1e-6, int max_passes = 100000);

// Primal objective of the model on the given datasets (evaluates the
// expression above at the model's parameters).
double unbias_objective(const UnbiasModel& m, const std::vector<Dataset>& datasets);

// Margin under the visual-world model.
double unbias_predict_vw(const UnbiasModel& m, const Eigen::VectorXd& x);
// Margin under collection i's model w_vw + delta_i.
double unbias_predict_collection(const UnbiasModel& m, std::size_t i, const Eigen::VectorXd& x);

// Leave-one-collection-out style model selection: each source is split into
// stratified halves (train/validation) with the data-core generator; every
// grid triple trains on the training halves and the visual-world model is
// scored on the validation halves (mean over sources). Ties resolve to the
// first triple in grid order (lambda outer, C1, then C2).
UnbiasSelection unbias_model_select(const std::vector<Dataset>& source_datasets,
                                    const UnbiasGrid& grid,
                                    SelectionMetric metric = SelectionMetric::kAveragePrecision,
                                    std::uint64_t seed = 0);

}  // namespace biasbench
