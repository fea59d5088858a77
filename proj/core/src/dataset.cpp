#include "biasbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

Dataset::Dataset(std::string name, int collection_id, int dim,
                 std::vector<LabeledSample> samples)
    : name_(std::move(name)), collection_id_(collection_id), dim_(dim),
      samples_(std::move(samples)) {
  if (dim_ <= 0) throw DataError("Dataset '" + name_ + "': dim must be positive");
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    const LabeledSample& s = samples_[i];
    if (s.features.size() != dim_) {
      std::ostringstream os;
      os << "Dataset '" << name_ << "': sample " << i << " has dim " << s.features.size()
         << ", expected " << dim_;
      throw DataError(os.str());
    }
    if (!s.features.allFinite()) {
      throw DataError("Dataset '" + name_ + "': sample " + std::to_string(i) +
                      " has non-finite features");
    }
    if (s.collection_id != collection_id_) {
      throw DataError("Dataset '" + name_ + "': sample " + std::to_string(i) +
                      " carries collection_id " + std::to_string(s.collection_id) +
                      ", expected " + std::to_string(collection_id_));
    }
    class_set_.insert(s.class_label);
  }
}

Eigen::MatrixXd Dataset::feature_matrix() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(samples_.size()), dim_);
  for (std::size_t i = 0; i < samples_.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = samples_[i].features.transpose();
  return m;
}

std::vector<int> Dataset::labels() const {
  std::vector<int> y(samples_.size());
  for (std::size_t i = 0; i < samples_.size(); ++i) y[i] = samples_[i].class_label;
  return y;
}

std::vector<std::size_t> Dataset::indices_of_class(int label) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < samples_.size(); ++i)
    if (samples_[i].class_label == label) idx.push_back(i);
  return idx;
}

Dataset Dataset::subset(const std::vector<std::size_t>& indices,
                        const std::string& name_suffix) const {
  std::vector<LabeledSample> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= samples_.size())
      throw DataError("Dataset::subset: index " + std::to_string(i) + " out of range");
    out.push_back(samples_[i]);
  }
  return Dataset(name_ + name_suffix, collection_id_, dim_, std::move(out));
}

Eigen::VectorXd l2_normalize(const Eigen::VectorXd& v) {
  if (v.size() == 0) throw DataError("l2_normalize: empty vector");
  if (!v.allFinite()) throw DataError("l2_normalize: non-finite entry");
  const double norm = v.norm();
  if (norm == 0.0) return v;
  return v / norm;
}

ZScoreStats zscore_fit(const Dataset& train) {
  if (train.size() == 0) throw DataError("zscore_fit: empty training set");
  const Eigen::MatrixXd x = train.feature_matrix();
  ZScoreStats stats;
  stats.mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - stats.mean.transpose();
  // Population standard deviation; constant dimensions get divisor 1.
  stats.std = (centered.array().square().colwise().mean()).sqrt();
  for (Eigen::Index k = 0; k < stats.std.size(); ++k)
    if (stats.std[k] == 0.0) stats.std[k] = 1.0;
  return stats;
}

Eigen::VectorXd zscore_apply(const ZScoreStats& stats, const Eigen::VectorXd& v) {
  if (v.size() != stats.mean.size())
    throw DataError("zscore_apply: dimension mismatch (" + std::to_string(v.size()) +
                    " vs stats " + std::to_string(stats.mean.size()) + ")");
  return (v - stats.mean).cwiseQuotient(stats.std);
}

Dataset transform_features(const Dataset& ds,
                           const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn) {
  std::vector<LabeledSample> out;
  out.reserve(ds.size());
  for (const LabeledSample& s : ds.samples()) {
    LabeledSample t = s;
    t.features = fn(s.features);
    out.push_back(std::move(t));
  }
  return Dataset(ds.name(), ds.collection_id(), ds.dim(), std::move(out));
}

namespace {

int requested_count(const std::map<int, int>& explicit_counts, int uniform, int label) {
  auto it = explicit_counts.find(label);
  return it == explicit_counts.end() ? uniform : it->second;
}

}  // namespace

std::pair<Dataset, Dataset> make_split(const Dataset& ds, const SplitSpec& spec) {
  Rng rng(spec.seed, spec.repetition_index, "make_split");
  std::vector<std::size_t> train_idx, test_idx;
  for (int label : ds.class_set()) {
    const int n_train = requested_count(spec.train_counts, spec.train_per_class, label);
    const int n_test = requested_count(spec.test_counts, spec.test_per_class, label);
    if (n_train < 0 || n_test < 0)
      throw DataError("make_split: negative count requested for class " + std::to_string(label));
    std::vector<std::size_t> pool = ds.indices_of_class(label);
    if (static_cast<std::size_t>(n_train + n_test) > pool.size()) {
      std::ostringstream os;
      os << "make_split: class " << label << " has " << pool.size() << " samples in '"
         << ds.name() << "' but " << n_train << "+" << n_test << " were requested";
      throw DataError(os.str());
    }
    rng.shuffle(pool);
    train_idx.insert(train_idx.end(), pool.begin(), pool.begin() + n_train);
    test_idx.insert(test_idx.end(), pool.begin() + n_train, pool.begin() + n_train + n_test);
  }
  return {ds.subset(train_idx, "/train"), ds.subset(test_idx, "/test")};
}

std::pair<Dataset, Dataset> make_binary_split(const Dataset& ds, int positive_class,
                                              int train_pos, int train_neg, int test_pos,
                                              int test_neg, std::uint64_t seed,
                                              std::uint64_t repetition_index) {
  if (!ds.class_set().count(positive_class))
    throw DataError("make_binary_split: class " + std::to_string(positive_class) +
                    " absent from '" + ds.name() + "'");
  Rng rng(seed, repetition_index, "make_binary_split");

  std::vector<std::size_t> pos = ds.indices_of_class(positive_class);
  std::vector<std::size_t> neg;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (ds[i].class_label != positive_class) neg.push_back(i);

  if (pos.size() < static_cast<std::size_t>(train_pos + test_pos))
    throw DataError("make_binary_split: not enough positives in '" + ds.name() + "' (" +
                    std::to_string(pos.size()) + " available)");
  if (neg.size() < static_cast<std::size_t>(train_neg + test_neg))
    throw DataError("make_binary_split: not enough negatives in '" + ds.name() + "' (" +
                    std::to_string(neg.size()) + " available)");

  rng.shuffle(pos);
  rng.shuffle(neg);

  auto relabel = [&](std::vector<std::size_t>::const_iterator first, int count, int label,
                     std::vector<LabeledSample>& out) {
    for (int k = 0; k < count; ++k, ++first) {
      LabeledSample s = ds[*first];
      s.class_label = label;
      out.push_back(std::move(s));
    }
  };

  std::vector<LabeledSample> train, test;
  relabel(pos.cbegin(), train_pos, +1, train);
  relabel(pos.cbegin() + train_pos, test_pos, +1, test);
  relabel(neg.cbegin(), train_neg, -1, train);
  relabel(neg.cbegin() + train_neg, test_neg, -1, test);

  return {Dataset(ds.name() + "/train", ds.collection_id(), ds.dim(), std::move(train)),
          Dataset(ds.name() + "/test", ds.collection_id(), ds.dim(), std::move(test))};
}

std::vector<Dataset> synth_generate(const SynthSpec& spec) {
  if (spec.n_domains <= 0 || spec.n_classes <= 0 || spec.dim <= 0)
    throw DataError("synth_generate: n_domains, n_classes and dim must be positive");
  if (spec.noise_rate < 0.0 || spec.noise_rate > 1.0)
    throw DataError("synth_generate: noise_rate must lie in [0, 1]");
  if (static_cast<int>(spec.class_means.size()) != spec.n_classes)
    throw DataError("synth_generate: class_means must have one entry per class");
  if (static_cast<int>(spec.domain_shifts.size()) != spec.n_domains)
    throw DataError("synth_generate: domain_shifts must have one entry per domain");
  if (static_cast<int>(spec.samples_per_class.size()) != spec.n_domains)
    throw DataError("synth_generate: samples_per_class must have one entry per domain");
  if (static_cast<int>(spec.class_subsets.size()) != spec.n_domains)
    throw DataError("synth_generate: class_subsets must have one entry per domain");
  for (const auto& m : spec.class_means)
    if (m.size() != spec.dim) throw DataError("synth_generate: class mean dim mismatch");
  for (const auto& s : spec.domain_shifts)
    if (s.size() != spec.dim) throw DataError("synth_generate: domain shift dim mismatch");

  std::vector<Dataset> out;
  out.reserve(spec.n_domains);
  for (int d = 0; d < spec.n_domains; ++d) {
    const std::vector<int>& subset = spec.class_subsets[d];
    if (subset.empty())
      throw DataError("synth_generate: domain " + std::to_string(d) + " has an empty class subset");
    for (int c : subset)
      if (c < 0 || c >= spec.n_classes)
        throw DataError("synth_generate: class " + std::to_string(c) +
                        " out of range in domain " + std::to_string(d));

    std::vector<LabeledSample> samples;
    samples.reserve(subset.size() * static_cast<std::size_t>(spec.samples_per_class[d]));
    for (int c : subset) {
      Rng rng(spec.seed, static_cast<std::uint64_t>(d),
              "synth:c" + std::to_string(c));
      const Eigen::VectorXd center = spec.class_means[c] + spec.domain_shifts[d];
      for (int j = 0; j < spec.samples_per_class[d]; ++j) {
        LabeledSample s;
        s.features.resize(spec.dim);
        for (int k = 0; k < spec.dim; ++k)
          s.features[k] = center[k] + spec.cluster_std * rng.next_gaussian();
        s.class_label = c;
        // Label noise: flip uniformly to one of the other in-domain classes.
        if (spec.noise_rate > 0.0 && subset.size() > 1 && rng.next_double() < spec.noise_rate) {
          std::uint64_t pick = rng.next_below(subset.size() - 1);
          for (int other : subset) {
            if (other == c) continue;
            if (pick == 0) {
              s.class_label = other;
              break;
            }
            --pick;
          }
        }
        s.collection_id = d;
        s.sample_id = "synth-d" + std::to_string(d) + "-c" + std::to_string(c) + "-" +
                      std::to_string(j);
        samples.push_back(std::move(s));
      }
    }
    out.emplace_back("domain" + std::to_string(d), d, spec.dim, std::move(samples));
  }
  return out;
}

}  // namespace biasbench
