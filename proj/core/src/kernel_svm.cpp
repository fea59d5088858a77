#include "biasbench/kernel_svm.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "biasbench/errors.hpp"

namespace biasbench {

KernelModel kernel_svm_train(const Eigen::MatrixXd& k, const std::vector<int>& y, double c,
                             double tol, int max_passes) {
  const Eigen::Index n = k.rows();
  if (n == 0 || k.cols() != n || static_cast<std::size_t>(n) != y.size())
    throw DataError("kernel_svm_train: kernel must be n x n with n labels");
  if (c <= 0.0) throw DataError("kernel_svm_train: C must be positive");
  bool pos = false, neg = false;
  for (int v : y) (v > 0 ? pos : neg) = true;
  if (!pos || !neg) throw DataError("kernel_svm_train: degenerate labels (single class)");

  KernelModel m;
  m.alpha.assign(static_cast<std::size_t>(n), 0.0);
  m.y = y;

  // f_i = sum_j alpha_j y_j (K_ij + 1), maintained incrementally.
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n);
  for (int pass = 0; pass < max_passes; ++pass) {
    double max_pg = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double yi = static_cast<double>(y[static_cast<std::size_t>(i)]);
      const double g = yi * f[i] - 1.0;
      double& a = m.alpha[static_cast<std::size_t>(i)];

      double pg = g;
      if (a <= 0.0 && g > 0.0) pg = 0.0;
      if (a >= c && g < 0.0) pg = 0.0;
      max_pg = std::max(max_pg, std::fabs(pg));
      if (pg == 0.0) continue;

      const double qii = k(i, i) + 1.0;
      if (qii <= 0.0) continue;  // degenerate diagonal; skip coordinate
      const double a_new = std::min(std::max(a - g / qii, 0.0), c);
      const double delta = a_new - a;
      if (delta != 0.0) {
        f += (delta * yi) * (k.col(i) + Eigen::VectorXd::Ones(n));
        a = a_new;
      }
    }
    if (max_pg < tol) break;
  }

  m.offset = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    m.offset += m.alpha[static_cast<std::size_t>(i)] * static_cast<double>(y[static_cast<std::size_t>(i)]);
  return m;
}

double kernel_svm_margin(const KernelModel& m, const Eigen::VectorXd& k_row) {
  if (static_cast<std::size_t>(k_row.size()) != m.alpha.size())
    throw DataError("kernel_svm_margin: kernel row length mismatch");
  double margin = m.offset;
  for (Eigen::Index i = 0; i < k_row.size(); ++i)
    margin += m.alpha[static_cast<std::size_t>(i)] *
              static_cast<double>(m.y[static_cast<std::size_t>(i)]) * k_row[i];
  return margin;
}

KernelOvaModel kernel_ova_train(const Eigen::MatrixXd& k, const std::vector<int>& y, double c) {
  std::set<int> classes(y.begin(), y.end());
  if (classes.size() < 2) throw DataError("kernel_ova_train: need at least 2 classes");
  KernelOvaModel m;
  m.classes.assign(classes.begin(), classes.end());
  std::vector<int> rel(y.size());
  for (int cls : m.classes) {
    for (std::size_t i = 0; i < y.size(); ++i) rel[i] = (y[i] == cls) ? +1 : -1;
    m.models.push_back(kernel_svm_train(k, rel, c));
  }
  return m;
}

Eigen::VectorXd kernel_ova_margins(const KernelOvaModel& m, const Eigen::VectorXd& k_row) {
  Eigen::VectorXd margins(static_cast<Eigen::Index>(m.models.size()));
  for (std::size_t j = 0; j < m.models.size(); ++j)
    margins[static_cast<Eigen::Index>(j)] = kernel_svm_margin(m.models[j], k_row);
  return margins;
}

int kernel_ova_predict(const KernelOvaModel& m, const Eigen::VectorXd& k_row) {
  const Eigen::VectorXd margins = kernel_ova_margins(m, k_row);
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < margins.size(); ++j)
    if (margins[j] > margins[best]) best = j;
  return m.classes[static_cast<std::size_t>(best)];
}

}  // namespace biasbench
