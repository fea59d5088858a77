#include "biasbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "biasbench/errors.hpp"

namespace biasbench {

double percent_drop(double self_pct, double mean_others_pct) {
  if (self_pct <= 0.0)
    throw DataError("percent_drop: undefined for Self <= 0 (got " + std::to_string(self_pct) + ")");
  return 100.0 * (self_pct - mean_others_pct) / self_pct;
}

double cd_measure(double self_pct, double mean_others_pct) {
  return 1.0 / (1.0 + std::exp(-(self_pct - mean_others_pct) / 100.0));
}

double average_precision(const std::vector<double>& scores,
                         const std::vector<int>& binary_labels) {
  if (scores.size() != binary_labels.size())
    throw DataError("average_precision: scores/labels length mismatch");
  std::size_t positives = 0;
  for (int v : binary_labels) positives += (v > 0) ? 1 : 0;
  if (positives == 0) throw DataError("average_precision: no positive labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (binary_labels[order[rank]] > 0) {
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return ap / static_cast<double>(positives);
}

double recognition_rate(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || labels.empty())
    throw DataError("recognition_rate: prediction/label lengths must match and be non-empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

PerClassBreakdown per_class_breakdown(const std::vector<int>& predictions,
                                      const std::vector<int>& labels,
                                      const std::vector<int>& classes) {
  if (predictions.size() != labels.size())
    throw DataError("per_class_breakdown: prediction/label length mismatch");
  if (classes.empty()) throw DataError("per_class_breakdown: empty class list");

  std::map<int, Eigen::Index> pos;
  for (std::size_t k = 0; k < classes.size(); ++k)
    pos[classes[k]] = static_cast<Eigen::Index>(k);

  const Eigen::Index k = static_cast<Eigen::Index>(classes.size());
  PerClassBreakdown out;
  out.classes = classes;
  out.confusion_counts = Eigen::MatrixXd::Zero(k, k);

  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto ti = pos.find(labels[i]);
    auto pi = pos.find(predictions[i]);
    if (ti == pos.end())
      throw DataError("per_class_breakdown: label " + std::to_string(labels[i]) +
                      " not in the class list");
    if (pi == pos.end())
      throw DataError("per_class_breakdown: prediction " + std::to_string(predictions[i]) +
                      " not in the class list");
    out.confusion_counts(ti->second, pi->second) += 1.0;
  }

  out.confusion_row_normalized = Eigen::MatrixXd::Zero(k, k);
  out.accuracy.resize(classes.size());
  for (Eigen::Index r = 0; r < k; ++r) {
    const double row_sum = out.confusion_counts.row(r).sum();
    if (row_sum > 0.0) {
      out.confusion_row_normalized.row(r) = out.confusion_counts.row(r) / row_sum;
      out.accuracy[static_cast<std::size_t>(r)] =
          100.0 * out.confusion_counts(r, r) / row_sum;
    } else {
      out.accuracy[static_cast<std::size_t>(r)] = std::nullopt;  // class absent: n/a, not 0
    }
  }
  return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw DataError("adjusted_rand_index: partitions must match and be non-empty");

  std::map<int, int> ia, ib;
  for (int v : a) ia.emplace(v, static_cast<int>(ia.size()));
  for (int v : b) ib.emplace(v, static_cast<int>(ib.size()));

  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ia.size()),
                                                static_cast<Eigen::Index>(ib.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    table(ia[a[i]], ib[b[i]]) += 1.0;

  auto choose2 = [](double n) { return n * (n - 1.0) / 2.0; };
  double sum_cells = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r)
    for (Eigen::Index c = 0; c < table.cols(); ++c) sum_cells += choose2(table(r, c));
  double sum_rows = 0.0, sum_cols = 0.0;
  for (Eigen::Index r = 0; r < table.rows(); ++r) sum_rows += choose2(table.row(r).sum());
  for (Eigen::Index c = 0; c < table.cols(); ++c) sum_cols += choose2(table.col(c).sum());
  const double total = choose2(static_cast<double>(a.size()));

  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // degenerate: both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

}  // namespace biasbench
