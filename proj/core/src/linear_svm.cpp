#include "biasbench/linear_svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>

#include "biasbench/errors.hpp"
#include "biasbench/rng.hpp"

namespace biasbench {

std::vector<double> default_c_grid() {
  std::vector<double> grid;
  for (int e = -6; e <= 3; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

namespace {

void check_binary_labels(const std::vector<int>& y) {
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == +1) pos = true;
    else if (v == -1) neg = true;
    else throw DataError("svm_train_binary: labels must be +1 or -1");
  }
  if (!pos || !neg) throw DataError("svm_train_binary: degenerate labels (single class)");
}

}  // namespace

LinearModel svm_train_binary(const Eigen::MatrixXd& x, const std::vector<int>& y, double c,
                             SvmDiagnostics* diag, double tol, int max_passes) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != y.size())
    throw DataError("svm_train_binary: sample/label count mismatch");
  if (c <= 0.0) throw DataError("svm_train_binary: C must be positive");
  check_binary_labels(y);

  // Augmented formulation: w~ = (w, b), x~ = (x, 1); Q_ii = ||x~_i||^2.
  Eigen::VectorXd qd(n);
  for (Eigen::Index i = 0; i < n; ++i) qd[i] = x.row(i).squaredNorm() + 1.0;

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);

  LinearModel model;
  model.trained_c = c;

  int pass = 0;
  bool converged = false;
  for (; pass < max_passes; ++pass) {
    double max_pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
      const double margin = yi * (x.row(i).dot(w) + b);
      const double g = margin - 1.0;
      double& a = alpha[static_cast<std::size_t>(i)];

      double pg = g;
      if (a <= 0.0 && g > 0.0) pg = 0.0;
      if (a >= c && g < 0.0) pg = 0.0;
      max_pg = std::max(max_pg, std::fabs(pg));

      if (pg != 0.0) {
        const double a_new = std::min(std::max(a - g / qd[i], 0.0), c);
        const double delta = a_new - a;
        if (delta != 0.0) {
          w += (delta * yi) * x.row(i).transpose();
          b += delta * yi;
          a = a_new;
        }
      }
    }
    if (diag != nullptr) {
      model.weights = w;
      model.offset = b;
      diag->primal_objective_trace.push_back(svm_primal_objective(model, x, y, c));
    }
    if (max_pg < tol) {
      converged = true;
      ++pass;
      break;
    }
  }

  model.weights = w;
  model.offset = b;
  if (diag != nullptr) {
    diag->alpha = alpha;
    diag->passes = pass;
    diag->converged = converged;
  }
  return model;
}

double svm_primal_objective(const LinearModel& m, const Eigen::MatrixXd& x,
                            const std::vector<int>& y, double c) {
  double obj = 0.5 * (m.weights.squaredNorm() + m.offset * m.offset);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double margin = static_cast<double>(y[static_cast<std::size_t>(i)]) *
                          (x.row(i).dot(m.weights) + m.offset);
    obj += c * std::max(0.0, 1.0 - margin);
  }
  return obj;
}

double svm_dual_objective(const Eigen::MatrixXd& x, const std::vector<int>& y,
                          const std::vector<double>& alpha) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(x.cols());
  double b = 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double ay = alpha[static_cast<std::size_t>(i)] *
                      static_cast<double>(y[static_cast<std::size_t>(i)]);
    w += ay * x.row(i).transpose();
    b += ay;
    sum += alpha[static_cast<std::size_t>(i)];
  }
  return sum - 0.5 * (w.squaredNorm() + b * b);
}

double predict_margin(const LinearModel& m, const Eigen::VectorXd& x) {
  if (x.size() != m.weights.size())
    throw DataError("predict_margin: dim mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(m.weights.size()) + ")");
  return m.weights.dot(x) + m.offset;
}

int predict_label(const LinearModel& m, const Eigen::VectorXd& x) {
  return predict_margin(m, x) >= 0.0 ? +1 : -1;
}

OvaModel ova_train(const Eigen::MatrixXd& x, const std::vector<int>& y, double c) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) throw DataError("ova_train: need at least 2 classes");

  OvaModel model;
  model.classes.assign(classes.begin(), classes.end());
  model.models.resize(model.classes.size());
  std::vector<int> rel(y.size());
  for (std::size_t k = 0; k < model.classes.size(); ++k) {
    const int cls = model.classes[k];
    for (std::size_t i = 0; i < y.size(); ++i) rel[i] = (y[i] == cls) ? +1 : -1;
    model.models[k] = svm_train_binary(x, rel, c);
  }
  return model;
}

OvaModel ova_train(const Dataset& train, double c) {
  return ova_train(train.feature_matrix(), train.labels(), c);
}

Eigen::VectorXd ova_margins(const OvaModel& m, const Eigen::VectorXd& x) {
  Eigen::VectorXd margins(static_cast<Eigen::Index>(m.models.size()));
  for (std::size_t k = 0; k < m.models.size(); ++k)
    margins[static_cast<Eigen::Index>(k)] = predict_margin(m.models[k], x);
  return margins;
}

int ova_predict(const OvaModel& m, const Eigen::VectorXd& x) {
  if (m.models.empty()) throw DataError("ova_predict: empty model");
  const Eigen::VectorXd margins = ova_margins(m, x);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < margins.size(); ++k)
    if (margins[k] > margins[best]) best = k;  // strict: ties keep lowest index
  return m.classes[static_cast<std::size_t>(best)];
}

double cv_select_c(const Eigen::MatrixXd& x, const std::vector<int>& y, const CvGrid& grid) {
  if (grid.c_values.empty()) throw DataError("cv_select_c: empty C grid");
  for (double c : grid.c_values)
    if (c <= 0.0) throw DataError("cv_select_c: C values must be positive");
  if (grid.folds < 2) throw DataError("cv_select_c: folds must be >= 2");

  // Stratified fold assignment: per class, shuffle then deal round-robin.
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  std::vector<int> fold_of(y.size(), 0);
  Rng rng(grid.seed, 0, "cv_select_c");
  for (auto& [cls, idx] : by_class) {
    if (static_cast<int>(idx.size()) < grid.folds)
      throw DataError("cv_select_c: class " + std::to_string(cls) + " has fewer samples (" +
                      std::to_string(idx.size()) + ") than folds (" +
                      std::to_string(grid.folds) + ")");
    rng.shuffle(idx);
    for (std::size_t j = 0; j < idx.size(); ++j)
      fold_of[idx[j]] = static_cast<int>(j % static_cast<std::size_t>(grid.folds));
  }

  const bool multiclass = by_class.size() > 2 || by_class.begin()->first != -1 ||
                          std::prev(by_class.end())->first != +1;

  double best_c = grid.c_values.front();
  double best_acc = -1.0;
  for (double c : grid.c_values) {
    double acc_sum = 0.0;
    for (int f = 0; f < grid.folds; ++f) {
      std::vector<std::size_t> tr, va;
      for (std::size_t i = 0; i < y.size(); ++i)
        (fold_of[i] == f ? va : tr).push_back(i);

      Eigen::MatrixXd xtr(static_cast<Eigen::Index>(tr.size()), x.cols());
      std::vector<int> ytr(tr.size());
      for (std::size_t i = 0; i < tr.size(); ++i) {
        xtr.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(tr[i]));
        ytr[i] = y[tr[i]];
      }

      std::size_t correct = 0;
      if (multiclass) {
        const OvaModel m = ova_train(xtr, ytr, c);
        for (std::size_t i : va)
          if (ova_predict(m, x.row(static_cast<Eigen::Index>(i)).transpose()) == y[i]) ++correct;
      } else {
        const LinearModel m = svm_train_binary(xtr, ytr, c);
        for (std::size_t i : va)
          if (predict_label(m, x.row(static_cast<Eigen::Index>(i)).transpose()) == y[i]) ++correct;
      }
      acc_sum += va.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(va.size());
    }
    const double mean_acc = acc_sum / grid.folds;
    // Strictly better wins; ties go to the smallest C.
    if (mean_acc > best_acc + 1e-15 ||
        (std::fabs(mean_acc - best_acc) <= 1e-15 && c < best_c)) {
      best_acc = mean_acc;
      best_c = c;
    }
  }
  return best_c;
}

double cv_select_c(const Dataset& train, const CvGrid& grid) {
  return cv_select_c(train.feature_matrix(), train.labels(), grid);
}

}  // namespace biasbench
