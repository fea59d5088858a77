#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace biasbench {

// 100 * (self - mean_others) / self, inputs in percentage points.
// Throws DataError when self_pct <= 0 (the measure divides by Self).
double percent_drop(double self_pct, double mean_others_pct);

// Cross-dataset measure: 1 / (1 + exp(-(self - mean_others)/100)).
// Total function; > 0.5 exactly when self > mean_others.
double cd_measure(double self_pct, double mean_others_pct);

// Rank-based average precision: mean of precision@k over the positions of
// positive labels in the score-descending ranking. Ties keep the original
// index order (stable). Throws DataError when no positive labels exist.
double average_precision(const std::vector<double>& scores, const std::vector<int>& binary_labels);

// 100 * correct / total.
double recognition_rate(const std::vector<int>& predictions, const std::vector<int>& labels);

struct PerClassBreakdown {
  std::vector<int> classes;                       // classes reported, ascending
  std::vector<std::optional<double>> accuracy;    // percentage, nullopt when absent from test
  Eigen::MatrixXd confusion_counts;               // K x K, rows = true class
  Eigen::MatrixXd confusion_row_normalized;       // rows sum to 1 (0-rows stay 0)
};

// Per-class recognition table plus the full confusion matrix. `classes`
// fixes the report axes; labels/predictions outside it are rejected.
PerClassBreakdown per_class_breakdown(const std::vector<int>& predictions,
                                      const std::vector<int>& labels,
                                      const std::vector<int>& classes);

// Adjusted Rand index between two flat clusterings; permutation-invariant,
// 1 for identical partitions, ~0 for independent ones.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace biasbench
