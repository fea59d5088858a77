#include "biasbench/landmark.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "biasbench/errors.hpp"
#include "biasbench/kernel_svm.hpp"
#include "biasbench/linear_svm.hpp"

namespace biasbench {

namespace {

Eigen::MatrixXd gfk_kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                  const GfkMatrix& gfk, double sigma) {
  if (sigma <= 0.0) throw DataError("landmark: sigma must be positive");
  // exp(-(ai-bj)' G (ai-bj) / sigma^2) via the expanded quadratic form.
  const Eigen::MatrixXd ga = a * gfk.g;  // na x d
  const Eigen::VectorXd qa = (ga.array() * a.array()).rowwise().sum();
  const Eigen::VectorXd qb = ((b * gfk.g).array() * b.array()).rowwise().sum();
  Eigen::MatrixXd cross = ga * b.transpose();  // na x nb
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double inv = 1.0 / (sigma * sigma);
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      k(i, j) = std::exp(-(qa[i] + qb[j] - 2.0 * cross(i, j)) * inv);
  return k;
}

// Euclidean projection of v onto {x >= 0, sum x = s}.
Eigen::VectorXd project_scaled_simplex(const Eigen::VectorXd& v, double s) {
  const Eigen::Index n = v.size();
  std::vector<double> u(v.data(), v.data() + n);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0, tau = 0.0;
  int rho = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    cumsum += u[static_cast<std::size_t>(i)];
    const double t = (cumsum - s) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] - t > 0.0) {
      rho = static_cast<int>(i + 1);
      tau = t;
    }
  }
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) out[i] = std::max(0.0, v[i] - tau);
  (void)rho;
  return out;
}

}  // namespace

double landmark_mmd_objective(const Eigen::MatrixXd& source_x, const Eigen::MatrixXd& target_x,
                              const GfkMatrix& gfk, double sigma, const Eigen::VectorXd& beta) {
  const Eigen::MatrixXd kss = gfk_kernel_matrix(source_x, source_x, gfk, sigma);
  const Eigen::MatrixXd kst = gfk_kernel_matrix(source_x, target_x, gfk, sigma);
  const Eigen::MatrixXd ktt = gfk_kernel_matrix(target_x, target_x, gfk, sigma);
  const double n = static_cast<double>(target_x.rows());
  return beta.dot(kss * beta) - (2.0 / n) * beta.dot(kst.rowwise().sum()) +
         ktt.sum() / (n * n);
}

LandmarkSelection landmark_select(const Eigen::MatrixXd& source_x,
                                  const std::vector<int>& source_y,
                                  const Eigen::MatrixXd& target_x, const GfkMatrix& gfk,
                                  double sigma, std::vector<std::string>* warnings,
                                  int max_iterations) {
  const Eigen::Index m = source_x.rows();
  if (m < 2) throw DataError("landmark_select: need at least 2 source samples");
  if (static_cast<std::size_t>(m) != source_y.size())
    throw DataError("landmark_select: sample/label count mismatch");
  if (target_x.rows() == 0) throw DataError("landmark_select: empty target");

  // Class blocks; each carries weight mass M_c / M.
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < m; ++i) by_class[source_y[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [cls, idx] : by_class) {
    if (idx.size() == 1 && warnings != nullptr)
      warnings->push_back("landmark_select: class " + std::to_string(cls) +
                          " has a single sample; its proportion constraint is degenerate");
  }

  const Eigen::MatrixXd kss = gfk_kernel_matrix(source_x, source_x, gfk, sigma);
  const Eigen::MatrixXd kst = gfk_kernel_matrix(source_x, target_x, gfk, sigma);
  const Eigen::VectorXd target_pull =
      kst.rowwise().sum() / static_cast<double>(target_x.rows());

  auto project = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(m);
    for (const auto& [cls, idx] : by_class) {
      Eigen::VectorXd sub(static_cast<Eigen::Index>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) sub[static_cast<Eigen::Index>(j)] = v[idx[j]];
      const double mass = static_cast<double>(idx.size()) / static_cast<double>(m);
      sub = project_scaled_simplex(sub, mass);
      for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = sub[static_cast<Eigen::Index>(j)];
    }
    return out;
  };

  // Projected gradient with a 1/L step. Kernel entries are positive, so the
  // max row sum bounds the top eigenvalue.
  const double lip = 2.0 * kss.rowwise().sum().maxCoeff();
  const double step = 1.0 / std::max(lip, 1e-12);

  Eigen::VectorXd beta = project(Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m)));
  for (int it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd grad = 2.0 * (kss * beta) - 2.0 * target_pull;
    const Eigen::VectorXd next = project(beta - step * grad);
    const double delta = (next - beta).cwiseAbs().maxCoeff();
    beta = next;
    if (delta < 1e-13) break;
  }

  LandmarkSelection sel;
  sel.beta = beta;
  sel.sigma = sigma;

  std::vector<double> sorted(beta.data(), beta.data() + m);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t half = sorted.size() / 2;
  sel.threshold = (sorted.size() % 2 == 1)
                      ? sorted[half]
                      : 0.5 * (sorted[half - 1] + sorted[half]);
  sel.alpha.resize(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i)
    sel.alpha[static_cast<std::size_t>(i)] = beta[i] > sel.threshold;

  sel.objective = beta.dot(kss * beta) - 2.0 * beta.dot(target_pull) +
                  gfk_kernel_matrix(target_x, target_x, gfk, sigma).sum() /
                      (static_cast<double>(target_x.rows()) * static_cast<double>(target_x.rows()));
  return sel;
}

namespace {

// All compositions of `ticks` into `parts` buckets, each divided by ticks:
// the convex-weight grid at resolution 1/ticks.
void enumerate_simplex_grid(int parts, int ticks, std::vector<int>& cur,
                            std::vector<std::vector<double>>& out) {
  if (parts == 1) {
    std::vector<double> w;
    w.reserve(cur.size() + 1);
    for (int c : cur) w.push_back(static_cast<double>(c) / ticks);
    int used = 0;
    for (int c : cur) used += c;
    w.push_back(static_cast<double>(ticks - used) / ticks);
    out.push_back(std::move(w));
    return;
  }
  int used = 0;
  for (int c : cur) used += c;
  for (int v = 0; v <= ticks - used; ++v) {
    cur.push_back(v);
    enumerate_simplex_grid(parts - 1, ticks, cur, out);
    cur.pop_back();
  }
}

}  // namespace

LandmarkClassifierResult landmark_classifier(const Dataset& source, const Dataset& target,
                                             const std::vector<int>& q_range,
                                             const std::vector<double>& c_grid,
                                             std::uint64_t seed, int subspace_dim,
                                             double mkl_resolution) {
  if (q_range.empty()) throw DataError("landmark_classifier: empty q range");
  if (c_grid.empty()) throw DataError("landmark_classifier: empty C grid");
  LandmarkClassifierResult res;

  const Eigen::MatrixXd xs = source.feature_matrix();
  const Eigen::MatrixXd xt = target.feature_matrix();
  const std::vector<int> ys = source.labels();
  const Eigen::Index m = xs.rows();
  const int d = source.dim();

  auto fallback = [&]() {
    res.fell_back_to_plain_svm = true;
    CvGrid grid;
    grid.c_values = c_grid;
    grid.folds = 2;
    grid.seed = seed;
    const double c = cv_select_c(xs, ys, grid);
    const OvaModel model = ova_train(xs, ys, c);
    res.chosen_c = c;
    for (Eigen::Index i = 0; i < xt.rows(); ++i)
      res.predictions.push_back(ova_predict(model, xt.row(i).transpose()));
    return res;
  };

  // Subspace dimension: caller override or the disagreement measure, capped
  // so the GFK complement exists.
  const int d_cap = std::max(
      1, std::min({d / 2, static_cast<int>(m) - 1, static_cast<int>(xt.rows()) - 1}));
  int k = subspace_dim > 0 ? subspace_dim : subspace_disagreement_dim(xs, xt, d_cap);
  k = std::min(k, d_cap);

  SubspaceBasis bs, bt;
  GfkMatrix g0;
  try {
    bs = pca_subspace(xs, k);
    bt = pca_subspace(xt, k);
    g0 = gfk_compute(bs, bt, seed);
  } catch (const Error& e) {
    res.warnings.push_back(std::string("landmark_classifier: base GFK failed: ") + e.what());
    return fallback();
  }

  const double sigma0 = median_pairwise_distance(xs, xt);
  if (sigma0 <= 0.0) {
    res.warnings.push_back("landmark_classifier: zero median pairwise distance");
    return fallback();
  }

  struct QBlock {
    int q;
    double sigma;
    std::vector<Eigen::Index> landmarks;  // source indices
    GfkMatrix g;
  };
  std::vector<QBlock> blocks;
  std::set<Eigen::Index> union_landmarks;

  for (int q : q_range) {
    const double sigma_q = std::ldexp(sigma0, q);  // 2^q * sigma0
    LandmarkSelection sel;
    try {
      sel = landmark_select(xs, ys, xt, g0, sigma_q, &res.warnings);
    } catch (const Error& e) {
      res.warnings.push_back("landmark_classifier: q=" + std::to_string(q) +
                             " selection failed: " + e.what());
      continue;
    }
    QBlock blk;
    blk.q = q;
    blk.sigma = sigma_q;
    for (Eigen::Index i = 0; i < m; ++i)
      if (sel.alpha[static_cast<std::size_t>(i)]) blk.landmarks.push_back(i);
    if (blk.landmarks.empty() || blk.landmarks.size() == static_cast<std::size_t>(m)) {
      res.warnings.push_back("landmark_classifier: q=" + std::to_string(q) +
                             " selected " + std::to_string(blk.landmarks.size()) +
                             " of " + std::to_string(m) + " source samples; dropped");
      continue;
    }

    // Auxiliary pair: source minus the landmarks vs target plus them.
    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < m; ++i)
      if (!sel.alpha[static_cast<std::size_t>(i)]) rest.push_back(i);
    Eigen::MatrixXd aux_s(static_cast<Eigen::Index>(rest.size()), d);
    for (std::size_t i = 0; i < rest.size(); ++i) aux_s.row(static_cast<Eigen::Index>(i)) = xs.row(rest[i]);
    Eigen::MatrixXd aux_t(xt.rows() + static_cast<Eigen::Index>(blk.landmarks.size()), d);
    aux_t.topRows(xt.rows()) = xt;
    for (std::size_t i = 0; i < blk.landmarks.size(); ++i)
      aux_t.row(xt.rows() + static_cast<Eigen::Index>(i)) = xs.row(blk.landmarks[i]);

    try {
      const int kq = std::min(k, static_cast<int>(rest.size()) - 1);
      const SubspaceBasis abs = pca_subspace(aux_s, kq);
      const SubspaceBasis abt = pca_subspace(aux_t, kq);
      blk.g = gfk_compute(abs, abt, seed);
    } catch (const Error& e) {
      res.warnings.push_back("landmark_classifier: q=" + std::to_string(q) +
                             " auxiliary GFK failed: " + e.what());
      continue;
    }
    for (Eigen::Index i : blk.landmarks) union_landmarks.insert(i);
    blocks.push_back(std::move(blk));
  }

  if (blocks.empty()) {
    res.warnings.push_back("landmark_classifier: every q dropped");
    return fallback();
  }

  std::vector<Eigen::Index> train_idx(union_landmarks.begin(), union_landmarks.end());
  std::vector<Eigen::Index> valid_idx;
  for (Eigen::Index i = 0; i < m; ++i)
    if (!union_landmarks.count(i)) valid_idx.push_back(i);
  if (valid_idx.empty()) {
    res.warnings.push_back("landmark_classifier: no held-out source remainder");
    return fallback();
  }

  Eigen::MatrixXd xtr(static_cast<Eigen::Index>(train_idx.size()), d);
  std::vector<int> ytr(train_idx.size());
  for (std::size_t i = 0; i < train_idx.size(); ++i) {
    xtr.row(static_cast<Eigen::Index>(i)) = xs.row(train_idx[i]);
    ytr[i] = ys[static_cast<std::size_t>(train_idx[i])];
  }
  Eigen::MatrixXd xva(static_cast<Eigen::Index>(valid_idx.size()), d);
  std::vector<int> yva(valid_idx.size());
  for (std::size_t i = 0; i < valid_idx.size(); ++i) {
    xva.row(static_cast<Eigen::Index>(i)) = xs.row(valid_idx[i]);
    yva[i] = ys[static_cast<std::size_t>(valid_idx[i])];
  }

  // Per-q kernel blocks between every sample group and the training set.
  std::vector<Eigen::MatrixXd> k_tr, k_va, k_tg;
  for (const QBlock& blk : blocks) {
    k_tr.push_back(gfk_kernel_matrix(xtr, xtr, blk.g, blk.sigma));
    k_va.push_back(gfk_kernel_matrix(xva, xtr, blk.g, blk.sigma));
    k_tg.push_back(gfk_kernel_matrix(xt, xtr, blk.g, blk.sigma));
  }

  const int ticks = std::max(1, static_cast<int>(std::lround(1.0 / mkl_resolution)));
  std::vector<std::vector<double>> weight_grid;
  {
    std::vector<int> cur;
    enumerate_simplex_grid(static_cast<int>(blocks.size()), ticks, cur, weight_grid);
  }

  double best_acc = -1.0;
  std::vector<double> best_mu;
  double best_c = c_grid.front();
  for (const auto& mu : weight_grid) {
    Eigen::MatrixXd ktr = Eigen::MatrixXd::Zero(xtr.rows(), xtr.rows());
    Eigen::MatrixXd kva = Eigen::MatrixXd::Zero(xva.rows(), xtr.rows());
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      if (mu[b] == 0.0) continue;
      ktr += mu[b] * k_tr[b];
      kva += mu[b] * k_va[b];
    }
    if (ktr.diagonal().maxCoeff() <= 0.0) continue;  // all-zero combination
    for (double c : c_grid) {
      KernelOvaModel model;
      try {
        model = kernel_ova_train(ktr, ytr, c);
      } catch (const Error&) {
        continue;
      }
      std::size_t correct = 0;
      for (Eigen::Index i = 0; i < kva.rows(); ++i)
        if (kernel_ova_predict(model, kva.row(i).transpose()) == yva[static_cast<std::size_t>(i)])
          ++correct;
      const double acc = static_cast<double>(correct) / static_cast<double>(valid_idx.size());
      if (acc > best_acc) {  // strict: first grid point wins ties
        best_acc = acc;
        best_mu = mu;
        best_c = c;
      }
    }
  }
  if (best_mu.empty()) {
    res.warnings.push_back("landmark_classifier: kernel model selection failed");
    return fallback();
  }

  Eigen::MatrixXd ktr = Eigen::MatrixXd::Zero(xtr.rows(), xtr.rows());
  Eigen::MatrixXd ktg = Eigen::MatrixXd::Zero(xt.rows(), xtr.rows());
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    ktr += best_mu[b] * k_tr[b];
    ktg += best_mu[b] * k_tg[b];
  }
  const KernelOvaModel final_model = kernel_ova_train(ktr, ytr, best_c);
  for (Eigen::Index i = 0; i < xt.rows(); ++i)
    res.predictions.push_back(kernel_ova_predict(final_model, ktg.row(i).transpose()));

  for (const QBlock& blk : blocks) res.used_q.push_back(blk.q);
  res.kernel_weights = best_mu;
  res.chosen_c = best_c;
  res.validation_accuracy = best_acc;
  return res;
}

}  // namespace biasbench
