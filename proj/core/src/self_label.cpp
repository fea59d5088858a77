#include "biasbench/self_label.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>

#include "biasbench/errors.hpp"
#include "biasbench/metrics.hpp"

namespace biasbench {

SelfLabelResult self_label_train(const Dataset& source, const Dataset& target, int iterations,
                                 int per_class, const CvGrid& grid) {
  if (iterations < 0) throw DataError("self_label_train: iterations must be >= 0");
  if (per_class < 1) throw DataError("self_label_train: per_class must be >= 1");
  if (source.dim() != target.dim()) throw DataError("self_label_train: dim mismatch");

  const Eigen::MatrixXd xs = source.feature_matrix();
  const std::vector<int> ys = source.labels();
  const Eigen::MatrixXd xt = target.feature_matrix();
  const std::vector<int> yt = target.labels();

  SelfLabelResult out;
  out.chosen_c = grid.c_values.size() == 1 ? grid.c_values.front() : cv_select_c(xs, ys, grid);

  // Growing training set: source features plus adopted pseudo-labeled rows.
  Eigen::MatrixXd x_train = xs;
  std::vector<int> y_train = ys;

  auto evaluate = [&](const OvaModel& m) {
    if (yt.empty()) return 0.0;
    std::vector<int> pred(yt.size());
    for (std::size_t i = 0; i < yt.size(); ++i)
      pred[i] = ova_predict(m, xt.row(static_cast<Eigen::Index>(i)).transpose());
    return recognition_rate(pred, yt);
  };

  OvaModel model = ova_train(x_train, y_train, out.chosen_c);
  if (target.size() > 0) out.accuracy_trace.push_back(evaluate(model));

  std::vector<std::size_t> pool(target.size());
  std::iota(pool.begin(), pool.end(), 0);

  for (int it = 0; it < iterations; ++it) {
    if (pool.empty()) break;

    struct Candidate {
      std::size_t target_index;
      int predicted;
      double top_margin;
      double gap;  // top-1 minus top-2 margin
    };
    std::vector<Candidate> pool_eval;
    pool_eval.reserve(pool.size());
    double mean_top = 0.0;
    for (std::size_t ti : pool) {
      const Eigen::VectorXd margins =
          ova_margins(model, xt.row(static_cast<Eigen::Index>(ti)).transpose());
      Eigen::Index best = 0;
      for (Eigen::Index k = 1; k < margins.size(); ++k)
        if (margins[k] > margins[best]) best = k;
      double second = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < margins.size(); ++k)
        if (k != best && margins[k] > second) second = margins[k];
      Candidate c;
      c.target_index = ti;
      c.predicted = model.classes[static_cast<std::size_t>(best)];
      c.top_margin = margins[best];
      c.gap = margins.size() > 1 ? margins[best] - second : margins[best];
      mean_top += c.top_margin;
      pool_eval.push_back(c);
    }
    mean_top /= static_cast<double>(pool_eval.size());

    // Confidence filter (above the pool-mean top margin), then rank by gap.
    std::vector<const Candidate*> eligible;
    for (const Candidate& c : pool_eval)
      if (c.top_margin > mean_top) eligible.push_back(&c);
    std::stable_sort(eligible.begin(), eligible.end(),
                     [](const Candidate* a, const Candidate* b) { return a->gap > b->gap; });

    std::map<int, int> taken;
    std::vector<const Candidate*> adopted;
    for (const Candidate* c : eligible) {
      if (taken[c->predicted] >= per_class) continue;
      ++taken[c->predicted];
      adopted.push_back(c);
    }
    out.selected_per_iteration.push_back(adopted.size());
    if (adopted.empty()) break;  // nothing above the confidence bar

    const Eigen::Index old_rows = x_train.rows();
    x_train.conservativeResize(old_rows + static_cast<Eigen::Index>(adopted.size()),
                               Eigen::NoChange);
    for (std::size_t j = 0; j < adopted.size(); ++j) {
      x_train.row(old_rows + static_cast<Eigen::Index>(j)) =
          xt.row(static_cast<Eigen::Index>(adopted[j]->target_index));
      y_train.push_back(adopted[j]->predicted);
    }
    out.total_selected += adopted.size();

    std::vector<bool> remove(target.size(), false);
    for (const Candidate* c : adopted) remove[c->target_index] = true;
    std::vector<std::size_t> next_pool;
    for (std::size_t ti : pool)
      if (!remove[ti]) next_pool.push_back(ti);
    pool = std::move(next_pool);

    model = ova_train(x_train, y_train, out.chosen_c);
    out.accuracy_trace.push_back(evaluate(model));
  }

  out.model = std::move(model);
  return out;
}

}  // namespace biasbench
