#pragma once

#include <cstdint>
#include <vector>

#include "biasbench/dataset.hpp"
#include "biasbench/linear_svm.hpp"

namespace biasbench {

struct SelfLabelResult {
  OvaModel model;                        // final model
  double chosen_c = 0.0;
  std::vector<double> accuracy_trace;    // target accuracy per iteration, [0] = source-only
  std::vector<std::size_t> selected_per_iteration;
  std::size_t total_selected = 0;
};

// Iterative pseudo-labeling: train one-vs-all on the source, classify the
// remaining target pool, keep samples whose top margin exceeds the pool
// mean, rank them by the top-1 minus top-2 margin gap, adopt up to
// `per_class` per predicted class with their pseudo-labels, retrain, repeat.
// Selected samples never return to the pool. C is cross-validated once on
// the source and reused. Target labels are read only to build the accuracy
// trace, never for training. An exhausted pool stops early (trace truncated).
SelfLabelResult self_label_train(const Dataset& source, const Dataset& target, int iterations,
                                 int per_class, const CvGrid& grid);

}  // namespace biasbench
