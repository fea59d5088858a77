#include "biasbench/unbias.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biasbench/errors.hpp"
#include "biasbench/metrics.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

namespace {

struct FlatProblem {
  Eigen::MatrixXd x;               // all samples, row-major over collections
  std::vector<double> y;           // +1/-1
  std::vector<int> collection;     // collection index per sample
  std::vector<double> qd;          // ||x~||^2 per sample
  int n_collections = 0;
};

FlatProblem flatten(const std::vector<Dataset>& datasets) {
  if (datasets.empty()) throw DataError("unbias_train: need at least one dataset");
  const int d = datasets.front().dim();
  std::size_t total = 0;
  for (const Dataset& ds : datasets) {
    if (ds.dim() != d) throw DataError("unbias_train: datasets disagree on dim");
    bool pos = false, neg = false;
    for (const LabeledSample& s : ds.samples()) {
      if (s.class_label == +1) pos = true;
      else if (s.class_label == -1) neg = true;
      else throw DataError("unbias_train: labels must be +1/-1 in '" + ds.name() + "'");
    }
    if (!pos || !neg)
      throw DataError("unbias_train: dataset '" + ds.name() + "' has a single label");
    total += ds.size();
  }

  FlatProblem p;
  p.n_collections = static_cast<int>(datasets.size());
  p.x.resize(static_cast<Eigen::Index>(total), d);
  p.y.resize(total);
  p.collection.resize(total);
  p.qd.resize(total);
  std::size_t r = 0;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    for (const LabeledSample& s : datasets[i].samples()) {
      p.x.row(static_cast<Eigen::Index>(r)) = s.features.transpose();
      p.y[r] = static_cast<double>(s.class_label);
      p.collection[r] = static_cast<int>(i);
      p.qd[r] = s.features.squaredNorm() + 1.0;
      ++r;
    }
  }
  return p;
}

double hinge(double margin) { return std::max(0.0, 1.0 - margin); }

}  // namespace

UnbiasModel unbias_train(const std::vector<Dataset>& datasets, double lambda, double c1,
                         double c2, double tol, int max_passes) {
  if (c1 < 0.0 || c2 < 0.0) throw DataError("unbias_train: C1 and C2 must be >= 0");
  if (lambda < 0.0) throw DataError("unbias_train: lambda must be >= 0");
  if (lambda == 0.0 && c2 > 0.0)
    throw DataError("unbias_train: lambda must be positive when C2 > 0");

  const FlatProblem p = flatten(datasets);
  const Eigen::Index n = p.x.rows();
  const Eigen::Index d = p.x.cols();

  // Dual variables: alpha for the shared-model constraints (box [0, C1]),
  // beta for the per-collection constraints (box [0, C2]). Stationarity gives
  //   w_vw    = sum_i (alpha_i + beta_i) y_i x~_i
  //   delta_c = (1/lambda) * sum_{i in c} beta_i y_i x~_i
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double wb = 0.0;
  Eigen::MatrixXd u = Eigen::MatrixXd::Zero(d, p.n_collections);  // lambda * delta
  Eigen::VectorXd ub = Eigen::VectorXd::Zero(p.n_collections);
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> beta(static_cast<std::size_t>(n), 0.0);

  const double inv_lambda = lambda > 0.0 ? 1.0 / lambda : 0.0;

  for (int pass = 0; pass < max_passes; ++pass) {
    double max_pg = 0.0;

    for (Eigen::Index i = 0; i < n; ++i) {
      const std::size_t si = static_cast<std::size_t>(i);
      const double yi = p.y[si];
      const int c = p.collection[si];

      if (c1 > 0.0) {
        const double g = yi * (p.x.row(i).dot(w) + wb) - 1.0;
        double& a = alpha[si];
        double pg = g;
        if (a <= 0.0 && g > 0.0) pg = 0.0;
        if (a >= c1 && g < 0.0) pg = 0.0;
        max_pg = std::max(max_pg, std::fabs(pg));
        if (pg != 0.0) {
          const double a_new = std::min(std::max(a - g / p.qd[si], 0.0), c1);
          const double delta = a_new - a;
          if (delta != 0.0) {
            w += (delta * yi) * p.x.row(i).transpose();
            wb += delta * yi;
            a = a_new;
          }
        }
      }

      if (c2 > 0.0) {
        const double margin_i =
            p.x.row(i).dot(w + inv_lambda * u.col(c)) + wb + inv_lambda * ub[c];
        const double g = yi * margin_i - 1.0;
        double& bt = beta[si];
        double pg = g;
        if (bt <= 0.0 && g > 0.0) pg = 0.0;
        if (bt >= c2 && g < 0.0) pg = 0.0;
        max_pg = std::max(max_pg, std::fabs(pg));
        if (pg != 0.0) {
          const double h = p.qd[si] * (1.0 + inv_lambda);
          const double b_new = std::min(std::max(bt - g / h, 0.0), c2);
          const double delta = b_new - bt;
          if (delta != 0.0) {
            w += (delta * yi) * p.x.row(i).transpose();
            wb += delta * yi;
            u.col(c) += (delta * yi) * p.x.row(i).transpose();
            ub[c] += delta * yi;
            bt = b_new;
          }
        }
      }
    }
    if (max_pg < tol) break;
  }

  UnbiasModel m;
  m.w_vw = w;
  m.w_vw_offset = wb;
  m.lambda = lambda;
  m.c1 = c1;
  m.c2 = c2;
  m.deltas.resize(datasets.size());
  m.delta_offsets.resize(datasets.size());
  for (int c = 0; c < p.n_collections; ++c) {
    m.deltas[static_cast<std::size_t>(c)] = inv_lambda * u.col(c);
    m.delta_offsets[static_cast<std::size_t>(c)] = inv_lambda * ub[c];
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const int c = p.collection[si];
    const double mvw = p.x.row(i).dot(w) + wb;
    const double mi = p.x.row(i).dot(w + inv_lambda * u.col(c)) + wb + inv_lambda * ub[c];
    m.xi_sum += hinge(p.y[si] * mvw);
    m.rho_sum += hinge(p.y[si] * mi);
  }
  return m;
}

double unbias_objective(const UnbiasModel& m, const std::vector<Dataset>& datasets) {
  if (datasets.size() != m.num_collections())
    throw DataError("unbias_objective: dataset count mismatch");
  double obj = 0.5 * (m.w_vw.squaredNorm() + m.w_vw_offset * m.w_vw_offset);
  for (std::size_t i = 0; i < m.deltas.size(); ++i)
    obj += 0.5 * m.lambda *
           (m.deltas[i].squaredNorm() + m.delta_offsets[i] * m.delta_offsets[i]);
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    for (const LabeledSample& s : datasets[i].samples()) {
      const double y = static_cast<double>(s.class_label);
      obj += m.c1 * hinge(y * unbias_predict_vw(m, s.features));
      obj += m.c2 * hinge(y * unbias_predict_collection(m, i, s.features));
    }
  }
  return obj;
}

double unbias_predict_vw(const UnbiasModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.w_vw.size()) throw DataError("unbias_predict: dim mismatch");
  return m.w_vw.dot(x) + m.w_vw_offset;
}

double unbias_predict_collection(const UnbiasModel& m, std::size_t i, const Eigen::VectorXd& x) {
  if (i >= m.deltas.size())
    throw DataError("unbias_predict: collection index " + std::to_string(i) + " out of range");
  if (x.size() != m.w_vw.size()) throw DataError("unbias_predict: dim mismatch");
  return (m.w_vw + m.deltas[i]).dot(x) + m.w_vw_offset + m.delta_offsets[i];
}

namespace {

// Stratified 50/50 split of a +1/-1 dataset, deterministic in (seed, tag).
std::pair<Dataset, Dataset> stratified_halves(const Dataset& ds, std::uint64_t seed,
                                              std::uint64_t tag) {
  Rng rng(seed, tag, "unbias_halves");
  std::vector<std::size_t> train_idx, valid_idx;
  for (int label : ds.class_set()) {
    std::vector<std::size_t> pool = ds.indices_of_class(label);
    rng.shuffle(pool);
    const std::size_t half = pool.size() / 2;
    for (std::size_t j = 0; j < pool.size(); ++j)
      (j < half ? train_idx : valid_idx).push_back(pool[j]);
  }
  return {ds.subset(train_idx, "/half0"), ds.subset(valid_idx, "/half1")};
}

double score_vw(const UnbiasModel& m, const std::vector<Dataset>& validation,
                SelectionMetric metric) {
  double sum = 0.0;
  for (const Dataset& ds : validation) {
    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(ds.size());
    labels.reserve(ds.size());
    for (const LabeledSample& s : ds.samples()) {
      scores.push_back(unbias_predict_vw(m, s.features));
      labels.push_back(s.class_label);
    }
    if (metric == SelectionMetric::kAveragePrecision) {
      sum += average_precision(scores, labels);
    } else {
      std::size_t correct = 0;
      for (std::size_t i = 0; i < labels.size(); ++i)
        if ((scores[i] >= 0.0 ? +1 : -1) == labels[i]) ++correct;
      sum += labels.empty() ? 0.0 : static_cast<double>(correct) / labels.size();
    }
  }
  return sum / static_cast<double>(validation.size());
}

}  // namespace

UnbiasSelection unbias_model_select(const std::vector<Dataset>& source_datasets,
                                    const UnbiasGrid& grid, SelectionMetric metric,
                                    std::uint64_t seed) {
  if (source_datasets.size() < 2)
    throw DataError("unbias_model_select: need at least 2 source datasets");
  if (grid.lambda_candidates.empty() || grid.c1_candidates.empty() || grid.c2_candidates.empty())
    throw DataError("unbias_model_select: empty grid");

  std::vector<Dataset> train_halves, valid_halves;
  for (std::size_t i = 0; i < source_datasets.size(); ++i) {
    auto [tr, va] = stratified_halves(source_datasets[i], seed, i);
    train_halves.push_back(std::move(tr));
    valid_halves.push_back(std::move(va));
  }

  UnbiasSelection sel;
  sel.score = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (double lambda : grid.lambda_candidates) {
    for (double c1 : grid.c1_candidates) {
      for (double c2 : grid.c2_candidates) {
        double score = std::numeric_limits<double>::quiet_NaN();
        try {
          const UnbiasModel m = unbias_train(train_halves, lambda, c1, c2);
          score = score_vw(m, valid_halves, metric);
        } catch (const Error&) {
          // A failing triple is skipped; its table row keeps NaN.
        }
        sel.table.push_back({lambda, c1, c2, score});
        if (std::isfinite(score) && score > sel.score) {  // strict: first-in-grid wins ties
          sel.score = score;
          sel.lambda = lambda;
          sel.c1 = c1;
          sel.c2 = c2;
          any = true;
        }
      }
    }
  }
  if (!any) throw DataError("unbias_model_select: every grid triple failed");
  return sel;
}

}  // namespace biasbench
