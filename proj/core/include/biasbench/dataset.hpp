#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace biasbench {

struct LabeledSample {
  Eigen::VectorXd features;
  int class_label = 0;
  int collection_id = 0;
  std::string sample_id;
};

// One collection/domain: a named, homogeneous, immutable set of samples.
class Dataset {
 public:
  Dataset(std::string name, int collection_id, int dim,
          std::vector<LabeledSample> samples);

  const std::string& name() const { return name_; }
  int collection_id() const { return collection_id_; }
  int dim() const { return dim_; }
  std::size_t size() const { return samples_.size(); }
  const std::vector<LabeledSample>& samples() const { return samples_; }
  const LabeledSample& operator[](std::size_t i) const { return samples_[i]; }
  const std::set<int>& class_set() const { return class_set_; }

  // Feature matrix, one row per sample.
  Eigen::MatrixXd feature_matrix() const;
  std::vector<int> labels() const;

  // Indices of samples with the given class label, in dataset order.
  std::vector<std::size_t> indices_of_class(int label) const;

  // Dataset with the same identity but only the given samples (in the given
  // order). Labels may be overridden, e.g. for pseudo-labeling.
  Dataset subset(const std::vector<std::size_t>& indices,
                 const std::string& name_suffix = "") const;

 private:
  std::string name_;
  int collection_id_;
  int dim_;
  std::vector<LabeledSample> samples_;
  std::set<int> class_set_;
};

struct SplitSpec {
  // Uniform count per class, or explicit per-label counts (overrides uniform).
  int train_per_class = 0;
  int test_per_class = 0;
  std::map<int, int> train_counts;  // optional explicit counts
  std::map<int, int> test_counts;
  std::uint64_t seed = 0;
  std::uint64_t repetition_index = 0;
};

struct SynthSpec {
  int n_domains = 0;
  int n_classes = 0;
  int dim = 0;
  std::vector<int> samples_per_class;            // one entry per domain
  std::vector<Eigen::VectorXd> class_means;      // one per class
  std::vector<Eigen::VectorXd> domain_shifts;    // one per domain
  std::vector<std::vector<int>> class_subsets;   // classes present per domain
  double noise_rate = 0.0;                       // label-flip probability
  double cluster_std = 1.0;
  std::uint64_t seed = 0;
};

// Per-dimension z-score statistics fitted on a training set.
struct ZScoreStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd std;  // zeros replaced by 1
};

// v / ||v||_2; the zero vector is returned unchanged. Throws DataError on
// non-finite entries.
Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v);

// Population mean/std per dimension, computed on `train` only.
ZScoreStats zscore_fit(const Dataset& train);
Eigen::VectorXd zscore_apply(const ZScoreStats& stats, const Eigen::VectorXd& v);

// Dataset with every feature vector transformed by fn (labels and ids kept).
Dataset transform_features(const Dataset& ds,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn);

// Stratified train/test split without replacement; deterministic in
// (spec.seed, spec.repetition_index). Throws DataError when a class cannot
// supply the requested counts.
std::pair<Dataset, Dataset> make_split(const Dataset& ds, const SplitSpec& spec);

// Binary-task sampling used by the cross-dataset protocols: n_pos samples of
// `positive_class` against n_neg samples pooled from every other class.
// Returned datasets carry labels +1 / -1. Deterministic in (seed, rep, tag).
std::pair<Dataset, Dataset> make_binary_split(const Dataset& ds, int positive_class,
                                              int train_pos, int train_neg, int test_pos,
                                              int test_neg, std::uint64_t seed,
                                              std::uint64_t repetition_index);

// Deterministic synthetic multi-domain generator. Each domain i draws
// samples_per_class[i] points per class c in class_subsets[i] from
// N(class_means[c] + domain_shifts[i], cluster_std^2 I), then flips each
// label to another in-domain class with probability noise_rate.
std::vector<Dataset> synth_generate(const SynthSpec& spec);

}  // namespace biasbench
