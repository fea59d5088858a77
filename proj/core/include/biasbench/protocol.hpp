#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "biasbench/dataset.hpp"
#include "biasbench/linear_svm.hpp"

namespace biasbench {

// Feature preprocessing applied inside the experiment runners. Z-scoring is
// always fitted on the training block only, then followed by L2.
enum class FeatureNorm { kNone, kL2, kZScoreL2 };

struct RowStats {
  double self = 0.0;
  double mean_others = 0.0;
  double pct_drop = 0.0;
  double cd = 0.0;
  bool valid = false;  // false when the row holds a missing cell or Self <= 0
};

// Train-by-test performance matrix in percentage points (AP or recognition
// rate); NaN marks a missing cell. Row statistics always recompute from the
// stored values.
struct CrossDatasetMatrix {
  std::vector<std::string> train_labels;
  std::vector<std::string> test_labels;
  Eigen::MatrixXd values;
  std::vector<RowStats> rows;
};

// Per-row Self / Mean Others / %Drop / CD from a stored matrix. Self is the
// diagonal entry; rows with any missing cell (or with Self <= 0, where the
// drop is undefined) come back invalid.
std::vector<RowStats> compute_row_stats(const Eigen::MatrixXd& values);

CrossDatasetMatrix cross_matrix_from_values(const Eigen::MatrixXd& values,
                                            std::vector<std::string> train_labels,
                                            std::vector<std::string> test_labels);

struct NameTheDatasetResult {
  std::vector<int> train_sizes;
  std::vector<double> mean_accuracy;  // percent, one per size
  std::vector<double> std_accuracy;   // population std over repetitions
  Eigen::MatrixXd mean_confusion;     // counts at the largest size, rows = true collection
  std::vector<std::string> collection_names;
  int repetitions = 0;
};

// Name-the-dataset: samples per collection get the collection index as their
// label, a multi-way one-vs-all model is trained per size with C tuned by
// stratified cross validation, and accuracy is measured on held-out samples.
NameTheDatasetResult run_name_the_dataset(const std::vector<Dataset>& collections,
                                          const std::vector<int>& train_sizes,
                                          int test_per_collection, int reps, const CvGrid& c_grid,
                                          std::uint64_t seed, FeatureNorm norm = FeatureNorm::kL2,
                                          std::size_t jobs = 1);

struct CrossMatrixTask {
  enum class Kind { kBinary, kMulticlass } kind = Kind::kMulticlass;
  // Binary protocol: positives of one class against pooled negatives,
  // scored by average precision.
  int positive_class = 0;
  int train_pos = 0, train_neg = 0, test_pos = 0, test_neg = 0;
  // The test negatives always come from the training collection.
  bool fixed_negatives_from_train_collection = false;
  // Multiclass protocol: one-vs-all per collection, recognition rate.
  int train_per_class = 0, test_per_class = 0;
};

struct CrossMatrixResult {
  CrossDatasetMatrix mean;          // values averaged over repetitions
  Eigen::MatrixXd std;              // per-cell population std over repetitions
  std::vector<std::string> cell_errors;
  int repetitions = 0;
};

CrossMatrixResult run_cross_matrix(const std::vector<Dataset>& collections,
                                   const CrossMatrixTask& task, int reps, const CvGrid& c_grid,
                                   std::uint64_t seed, FeatureNorm norm = FeatureNorm::kL2,
                                   std::size_t jobs = 1);

// Adaptation strategies understood by the noisy-source runner.
inline const std::vector<std::string>& known_adaptation_methods() {
  static const std::vector<std::string> methods = {
      "plain-svm", "sa", "gfk", "landmark", "dam", "reshape-sa", "reshape-dam", "self-label"};
  return methods;
}

struct MethodCurve {
  std::string method;
  std::vector<double> mean;  // percent, one per training size (NaN = gap)
  std::vector<double> std;
  // Self-labeling only: per-size mean/std accuracy per iteration.
  std::vector<std::vector<double>> trace_mean;
  std::vector<std::vector<double>> trace_std;
};

struct NoisySourceResult {
  std::vector<int> train_sizes;
  std::vector<std::string> target_names;
  // curves[target][method]
  std::vector<std::vector<MethodCurve>> curves;
  std::vector<std::string> errors;
  int repetitions = 0;
};

// Trains each method on stratified source splits of increasing size and
// evaluates on fixed-size target test splits, over `reps` random splits.
// test_per_class holds one entry per target. Per-point failures are logged
// and leave a NaN gap in the curve.
NoisySourceResult run_noisy_source_curve(const Dataset& source,
                                         const std::vector<Dataset>& targets,
                                         const std::vector<int>& train_sizes,
                                         const std::vector<int>& test_per_class,
                                         const std::vector<std::string>& methods, int reps,
                                         const CvGrid& c_grid, std::uint64_t seed,
                                         FeatureNorm norm = FeatureNorm::kL2,
                                         std::size_t jobs = 1, int self_label_iterations = 10,
                                         int self_label_per_class = 2);

}  // namespace biasbench
