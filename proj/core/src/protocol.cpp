#include "biasbench/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "biasbench/dam.hpp"
#include "biasbench/errors.hpp"
#include "biasbench/kernel_svm.hpp"
#include "biasbench/landmark.hpp"
#include "biasbench/metrics.hpp"
#include "biasbench/reshape.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/self_label.hpp"
#include "biasbench/subspace.hpp"
#include "biasbench/threading.hpp"

namespace biasbench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double population_std(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return std::sqrt(var / static_cast<double>(v.size()));
}

// Fits the requested normalization on `train` and returns a transform
// applicable to any sample of the same dimension.
std::function<Eigen::VectorXd(const Eigen::VectorXd&)> make_norm(const Dataset& train,
                                                                 FeatureNorm norm) {
  switch (norm) {
    case FeatureNorm::kNone:
      return [](const Eigen::VectorXd& v) { return v; };
    case FeatureNorm::kL2:
      return [](const Eigen::VectorXd& v) { return l2_normalize(v); };
    case FeatureNorm::kZScoreL2: {
      const ZScoreStats stats = zscore_fit(train);
      return [stats](const Eigen::VectorXd& v) { return l2_normalize(zscore_apply(stats, v)); };
    }
  }
  throw DataError("unknown FeatureNorm");
}

}  // namespace

std::vector<RowStats> compute_row_stats(const Eigen::MatrixXd& values) {
  if (values.rows() == 0 || values.cols() == 0)
    throw DataError("compute_row_stats: empty matrix");
  std::vector<RowStats> rows(static_cast<std::size_t>(values.rows()));
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    RowStats& st = rows[static_cast<std::size_t>(r)];
    if (r >= values.cols()) continue;  // no diagonal entry: no Self, row stays invalid
    bool missing = false;
    double sum_others = 0.0;
    int n_others = 0;
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (std::isnan(values(r, c))) {
        missing = true;
        break;
      }
      if (c != r) {
        sum_others += values(r, c);
        ++n_others;
      }
    }
    if (missing || n_others == 0) continue;  // poisoned or 1x1: no aggregates
    st.self = values(r, r);
    st.mean_others = sum_others / static_cast<double>(n_others);
    st.cd = cd_measure(st.self, st.mean_others);
    if (st.self <= 0.0) continue;  // drop undefined; row reported invalid
    st.pct_drop = percent_drop(st.self, st.mean_others);
    st.valid = true;
  }
  return rows;
}

CrossDatasetMatrix cross_matrix_from_values(const Eigen::MatrixXd& values,
                                            std::vector<std::string> train_labels,
                                            std::vector<std::string> test_labels) {
  if (static_cast<Eigen::Index>(train_labels.size()) != values.rows() ||
      static_cast<Eigen::Index>(test_labels.size()) != values.cols())
    throw DataError("cross_matrix_from_values: label/shape mismatch");
  CrossDatasetMatrix m;
  m.values = values;
  m.train_labels = std::move(train_labels);
  m.test_labels = std::move(test_labels);
  m.rows = compute_row_stats(values);
  return m;
}

NameTheDatasetResult run_name_the_dataset(const std::vector<Dataset>& collections,
                                          const std::vector<int>& train_sizes,
                                          int test_per_collection, int reps, const CvGrid& c_grid,
                                          std::uint64_t seed, FeatureNorm norm, std::size_t jobs) {
  if (collections.size() < 2) throw DataError("run_name_the_dataset: need >= 2 collections");
  if (train_sizes.empty()) throw DataError("run_name_the_dataset: no training sizes");
  if (test_per_collection < 1) throw DataError("run_name_the_dataset: test size must be >= 1");
  if (reps < 1) throw DataError("run_name_the_dataset: reps must be >= 1");
  const int max_train = *std::max_element(train_sizes.begin(), train_sizes.end());
  for (const Dataset& ds : collections)
    if (ds.size() < static_cast<std::size_t>(max_train + test_per_collection))
      throw DataError("run_name_the_dataset: collection '" + ds.name() + "' has " +
                      std::to_string(ds.size()) + " samples, needs " +
                      std::to_string(max_train + test_per_collection));

  const int n_coll = static_cast<int>(collections.size());
  const std::size_t n_sizes = train_sizes.size();

  // acc[rep][size]; confusion per rep at the largest size.
  std::vector<std::vector<double>> acc(static_cast<std::size_t>(reps),
                                       std::vector<double>(n_sizes, 0.0));
  std::vector<Eigen::MatrixXd> confusions(static_cast<std::size_t>(reps));

  parallel_for(static_cast<std::size_t>(reps), jobs, [&](std::size_t rep) {
    // Per-collection pools: shuffle once per repetition, nested train prefixes.
    std::vector<std::vector<std::size_t>> order(collections.size());
    for (std::size_t ci = 0; ci < collections.size(); ++ci) {
      order[ci].resize(collections[ci].size());
      std::iota(order[ci].begin(), order[ci].end(), 0);
      Rng rng(Rng::derive_key(seed, ci, "ntd-collection"), rep, "shuffle");
      rng.shuffle(order[ci]);
    }

    const int largest = max_train;
    for (std::size_t si = 0; si < n_sizes; ++si) {
      const int sz = train_sizes[si];
      std::vector<LabeledSample> train_rows, test_rows;
      for (std::size_t ci = 0; ci < collections.size(); ++ci) {
        const Dataset& ds = collections[ci];
        for (int j = 0; j < sz; ++j) {
          LabeledSample s = ds[order[ci][static_cast<std::size_t>(j)]];
          s.class_label = static_cast<int>(ci);  // the collection is the label
          s.collection_id = 0;
          train_rows.push_back(std::move(s));
        }
        for (int j = 0; j < test_per_collection; ++j) {
          LabeledSample s = ds[order[ci][static_cast<std::size_t>(max_train + j)]];
          s.class_label = static_cast<int>(ci);
          s.collection_id = 0;
          test_rows.push_back(std::move(s));
        }
      }
      Dataset train("ntd/train", 0, collections.front().dim(), std::move(train_rows));
      Dataset test("ntd/test", 0, collections.front().dim(), std::move(test_rows));

      const auto tf = make_norm(train, norm);
      train = transform_features(train, tf);
      test = transform_features(test, tf);

      CvGrid grid = c_grid;
      grid.seed = Rng::derive_key(seed, rep, "ntd-cv");
      const double c = cv_select_c(train, grid);
      const OvaModel model = ova_train(train, c);

      std::vector<int> pred(test.size());
      for (std::size_t i = 0; i < test.size(); ++i) pred[i] = ova_predict(model, test[i].features);
      acc[rep][si] = recognition_rate(pred, test.labels());

      if (sz == largest) {
        std::vector<int> classes(collections.size());
        std::iota(classes.begin(), classes.end(), 0);
        confusions[rep] = per_class_breakdown(pred, test.labels(), classes).confusion_counts;
      }
    }
  });

  NameTheDatasetResult out;
  out.train_sizes = train_sizes;
  out.repetitions = reps;
  for (const Dataset& ds : collections) out.collection_names.push_back(ds.name());
  out.mean_accuracy.resize(n_sizes);
  out.std_accuracy.resize(n_sizes);
  for (std::size_t si = 0; si < n_sizes; ++si) {
    std::vector<double> col;
    for (int r = 0; r < reps; ++r) col.push_back(acc[static_cast<std::size_t>(r)][si]);
    out.mean_accuracy[si] =
        std::accumulate(col.begin(), col.end(), 0.0) / static_cast<double>(reps);
    out.std_accuracy[si] = population_std(col);
  }
  out.mean_confusion = Eigen::MatrixXd::Zero(n_coll, n_coll);
  for (int r = 0; r < reps; ++r) out.mean_confusion += confusions[static_cast<std::size_t>(r)];
  out.mean_confusion /= static_cast<double>(reps);
  return out;
}

CrossMatrixResult run_cross_matrix(const std::vector<Dataset>& collections,
                                   const CrossMatrixTask& task, int reps, const CvGrid& c_grid,
                                   std::uint64_t seed, FeatureNorm norm, std::size_t jobs) {
  if (collections.empty()) throw DataError("run_cross_matrix: no collections");
  if (reps < 1) throw DataError("run_cross_matrix: reps must be >= 1");
  const int n = static_cast<int>(collections.size());

  // cells[rep](i, j); NaN marks failure.
  std::vector<Eigen::MatrixXd> cells(static_cast<std::size_t>(reps));
  std::vector<std::vector<std::string>> errors(static_cast<std::size_t>(reps));

  parallel_for(static_cast<std::size_t>(reps), jobs, [&](std::size_t rep) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, kNaN);

    // Pre-draw the per-collection splits for this repetition.
    std::vector<std::optional<std::pair<Dataset, Dataset>>> splits(collections.size());
    for (std::size_t ci = 0; ci < collections.size(); ++ci) {
      const std::uint64_t coll_seed = Rng::derive_key(seed, ci, "cross-collection");
      try {
        if (task.kind == CrossMatrixTask::Kind::kBinary) {
          splits[ci] = make_binary_split(collections[ci], task.positive_class, task.train_pos,
                                         task.train_neg, task.test_pos, task.test_neg, coll_seed,
                                         rep);
        } else {
          SplitSpec sp;
          sp.train_per_class = task.train_per_class;
          sp.test_per_class = task.test_per_class;
          sp.seed = coll_seed;
          sp.repetition_index = rep;
          splits[ci] = make_split(collections[ci], sp);
        }
      } catch (const Error& e) {
        errors[rep].push_back("rep " + std::to_string(rep) + ", collection '" +
                              collections[ci].name() + "': " + e.what());
      }
    }

    for (int i = 0; i < n; ++i) {
      if (!splits[static_cast<std::size_t>(i)]) continue;
      try {
        Dataset train = splits[static_cast<std::size_t>(i)]->first;
        const auto tf = make_norm(train, norm);
        train = transform_features(train, tf);

        CvGrid grid = c_grid;
        grid.seed = Rng::derive_key(seed, static_cast<std::uint64_t>(i) * 1000 + rep, "cross-cv");

        if (task.kind == CrossMatrixTask::Kind::kBinary) {
          const double c = cv_select_c(train, grid);
          const LinearModel model = svm_train_binary(train.feature_matrix(), train.labels(), c);
          for (int j = 0; j < n; ++j) {
            if (!splits[static_cast<std::size_t>(j)]) continue;
            try {
              Dataset test = splits[static_cast<std::size_t>(j)]->second;
              if (task.fixed_negatives_from_train_collection && j != i) {
                // Replace the test negatives with the training collection's.
                std::vector<LabeledSample> rows;
                for (const LabeledSample& s : test.samples())
                  if (s.class_label == +1) rows.push_back(s);
                for (const LabeledSample& s :
                     splits[static_cast<std::size_t>(i)]->second.samples())
                  if (s.class_label == -1) {
                    LabeledSample t = s;
                    t.collection_id = test.collection_id();
                    rows.push_back(std::move(t));
                  }
                test = Dataset(test.name() + "+fixedneg", test.collection_id(), test.dim(),
                               std::move(rows));
              }
              test = transform_features(test, tf);
              std::vector<double> scores(test.size());
              for (std::size_t t = 0; t < test.size(); ++t)
                scores[t] = predict_margin(model, test[t].features);
              m(i, j) = 100.0 * average_precision(scores, test.labels());
            } catch (const Error& e) {
              errors[rep].push_back("rep " + std::to_string(rep) + ", cell (" + std::to_string(i) +
                                    "," + std::to_string(j) + "): " + e.what());
            }
          }
        } else {
          const double c = cv_select_c(train, grid);
          const OvaModel model = ova_train(train, c);
          for (int j = 0; j < n; ++j) {
            if (!splits[static_cast<std::size_t>(j)]) continue;
            try {
              const Dataset test =
                  transform_features(splits[static_cast<std::size_t>(j)]->second, tf);
              std::vector<int> pred(test.size());
              for (std::size_t t = 0; t < test.size(); ++t)
                pred[t] = ova_predict(model, test[t].features);
              m(i, j) = recognition_rate(pred, test.labels());
            } catch (const Error& e) {
              errors[rep].push_back("rep " + std::to_string(rep) + ", cell (" + std::to_string(i) +
                                    "," + std::to_string(j) + "): " + e.what());
            }
          }
        }
      } catch (const Error& e) {
        errors[rep].push_back("rep " + std::to_string(rep) + ", row " + std::to_string(i) + " ('" +
                              collections[static_cast<std::size_t>(i)].name() + "'): " + e.what());
      }
    }
    cells[rep] = std::move(m);
  });

  CrossMatrixResult out;
  out.repetitions = reps;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, n);
  out.std = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::vector<double> v;
      bool poisoned = false;
      for (int r = 0; r < reps; ++r) {
        const double x = cells[static_cast<std::size_t>(r)](i, j);
        if (std::isnan(x)) {
          poisoned = true;  // a failed repetition poisons the cell, no imputation
          break;
        }
        v.push_back(x);
      }
      if (poisoned) {
        mean(i, j) = kNaN;
        out.std(i, j) = kNaN;
      } else {
        mean(i, j) = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(reps);
        out.std(i, j) = population_std(v);
      }
    }
  }
  std::vector<std::string> names;
  for (const Dataset& ds : collections) names.push_back(ds.name());
  out.mean = cross_matrix_from_values(mean, names, names);
  for (auto& per_rep : errors)
    out.cell_errors.insert(out.cell_errors.end(), per_rep.begin(), per_rep.end());
  return out;
}

namespace {

// One adaptation run: predictions on the target test set, plus the
// per-iteration trace for self-labeling.
struct MethodRun {
  std::vector<int> predictions;
  std::vector<double> trace;
};

MethodRun run_method(const std::string& method, const Dataset& source_train,
                     const Dataset& target_test, const CvGrid& c_grid, std::uint64_t seed,
                     int sl_iterations, int sl_per_class) {
  MethodRun out;
  const Eigen::MatrixXd xs = source_train.feature_matrix();
  const std::vector<int> ys = source_train.labels();
  const Eigen::MatrixXd xt = target_test.feature_matrix();

  auto cv_c = [&](const Eigen::MatrixXd& x, const std::vector<int>& y, int folds) {
    CvGrid g = c_grid;
    g.folds = folds;
    g.seed = Rng::derive_key(seed, Rng::fnv1a64(method), "method-cv");
    return cv_select_c(x, y, g);
  };

  if (method == "plain-svm") {
    const OvaModel model = ova_train(xs, ys, cv_c(xs, ys, c_grid.folds));
    for (Eigen::Index i = 0; i < xt.rows(); ++i)
      out.predictions.push_back(ova_predict(model, xt.row(i).transpose()));
  } else if (method == "sa") {
    const int d = static_cast<int>(xs.cols());
    const int cap = std::max(
        1, std::min({d, static_cast<int>(xs.rows()) - 1, static_cast<int>(xt.rows()) - 1}));
    const int k = subspace_disagreement_dim(xs, xt, cap);
    const SubspaceBasis bs = pca_subspace(xs, k);
    const SubspaceBasis bt = pca_subspace(xt, k);
    const AlignmentMatrix a = sa_align(bs, bt);
    Eigen::MatrixXd zs(xs.rows(), k), zt(xt.rows(), k);
    for (Eigen::Index i = 0; i < xs.rows(); ++i)
      zs.row(i) = (a.a.transpose() * bs.project(xs.row(i).transpose())).transpose();
    for (Eigen::Index i = 0; i < xt.rows(); ++i)
      zt.row(i) = bt.project(xt.row(i).transpose()).transpose();
    const OvaModel model = ova_train(zs, ys, cv_c(zs, ys, 2));
    for (Eigen::Index i = 0; i < zt.rows(); ++i)
      out.predictions.push_back(ova_predict(model, zt.row(i).transpose()));
  } else if (method == "gfk") {
    const int d = static_cast<int>(xs.cols());
    const int cap = std::max(
        1, std::min({d / 2, static_cast<int>(xs.rows()) - 1, static_cast<int>(xt.rows()) - 1}));
    const int k = subspace_disagreement_dim(xs, xt, cap);
    const SubspaceBasis bs = pca_subspace(xs, k);
    const SubspaceBasis bt = pca_subspace(xt, k);
    const GfkMatrix g = gfk_compute(bs, bt, seed);
    const double sigma = median_pairwise_distance(xs, xt);
    if (sigma <= 0.0) throw DataError("gfk method: degenerate pairwise distances");

    auto kernel_block = [&](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
      Eigen::MatrixXd kk(a.rows(), b.rows());
      for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < b.rows(); ++j)
          kk(i, j) = gfk_kernel_eval(g, a.row(i).transpose(), b.row(j).transpose(), sigma);
      return kk;
    };
    const Eigen::MatrixXd kss = kernel_block(xs, xs);

    // Two-fold kernel CV on the source for C.
    Rng rng(seed, 0, "gfk-cv");
    std::vector<std::size_t> order(static_cast<std::size_t>(xs.rows()));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    double best_c = c_grid.c_values.front();
    double best_acc = -1.0;
    for (double c : c_grid.c_values) {
      double acc = 0.0;
      int folds_done = 0;
      for (int f = 0; f < 2; ++f) {
        std::vector<std::size_t> tr, va;
        for (std::size_t i = 0; i < order.size(); ++i)
          ((i % 2 == static_cast<std::size_t>(f)) ? va : tr).push_back(order[i]);
        Eigen::MatrixXd ktr(tr.size(), tr.size());
        Eigen::MatrixXd kva(va.size(), tr.size());
        std::vector<int> ytr(tr.size());
        for (std::size_t i = 0; i < tr.size(); ++i) {
          ytr[i] = ys[tr[i]];
          for (std::size_t j = 0; j < tr.size(); ++j)
            ktr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kss(static_cast<Eigen::Index>(tr[i]), static_cast<Eigen::Index>(tr[j]));
        }
        for (std::size_t i = 0; i < va.size(); ++i)
          for (std::size_t j = 0; j < tr.size(); ++j)
            kva(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                kss(static_cast<Eigen::Index>(va[i]), static_cast<Eigen::Index>(tr[j]));
        try {
          const KernelOvaModel m = kernel_ova_train(ktr, ytr, c);
          std::size_t correct = 0;
          for (std::size_t i = 0; i < va.size(); ++i)
            if (kernel_ova_predict(m, kva.row(static_cast<Eigen::Index>(i)).transpose()) ==
                ys[va[i]])
              ++correct;
          acc += static_cast<double>(correct) / static_cast<double>(va.size());
          ++folds_done;
        } catch (const Error&) {
        }
      }
      if (folds_done > 0) {
        acc /= folds_done;
        if (acc > best_acc + 1e-15 || (std::fabs(acc - best_acc) <= 1e-15 && c < best_c)) {
          best_acc = acc;
          best_c = c;
        }
      }
    }
    const KernelOvaModel model = kernel_ova_train(kss, ys, best_c);
    const Eigen::MatrixXd kts = kernel_block(xt, xs);
    for (Eigen::Index i = 0; i < xt.rows(); ++i)
      out.predictions.push_back(kernel_ova_predict(model, kts.row(i).transpose()));
  } else if (method == "landmark") {
    const LandmarkClassifierResult r = landmark_classifier(
        source_train, target_test, {-2, -1, 0, 1, 2}, c_grid.c_values, seed);
    out.predictions = r.predictions;
  } else if (method == "dam") {
    // Single source: theta = 1, gamma = 0.5; per-class regressions.
    const double c = cv_c(xs, ys, 2);
    const OvaModel src = ova_train(xs, ys, c);
    DamConfig cfg;
    cfg.theta = 1.0;
    cfg.gammas = {0.5};
    cfg.c = c;
    Eigen::MatrixXd f(xt.rows(), static_cast<Eigen::Index>(src.classes.size()));
    for (std::size_t kc = 0; kc < src.classes.size(); ++kc) {
      const DamResult r = dam_train({src.models[kc]}, xt, cfg);
      f.col(static_cast<Eigen::Index>(kc)) = r.f_unlabeled;
    }
    for (Eigen::Index i = 0; i < xt.rows(); ++i) {
      Eigen::Index best = 0;
      for (Eigen::Index kc = 1; kc < f.cols(); ++kc)
        if (f(i, kc) > f(i, best)) best = kc;
      out.predictions.push_back(src.classes[static_cast<std::size_t>(best)]);
    }
  } else if (method == "reshape-sa" || method == "reshape-dam") {
    const DomainAssignment assignment =
        reshape_discover(xs, ys, 2, Rng::derive_key(seed, 0, "reshape-seed"));
    std::vector<double> gamma_grid;
    for (int g = 1; g <= 10; ++g) gamma_grid.push_back(0.1 * g);
    const ReshapeCombineResult r = reshape_combine(
        xs, ys, assignment, target_test,
        method == "reshape-sa" ? ReshapeCombineMode::kBestSubdomainSa
                               : ReshapeCombineMode::kWeightedDam,
        gamma_grid, c_grid.c_values, seed);
    out.predictions = r.table[r.best_index].predictions;
  } else if (method == "self-label") {
    CvGrid g = c_grid;
    g.seed = Rng::derive_key(seed, 0, "self-label-cv");
    const SelfLabelResult r =
        self_label_train(source_train, target_test, sl_iterations, sl_per_class, g);
    for (std::size_t i = 0; i < target_test.size(); ++i)
      out.predictions.push_back(ova_predict(r.model, target_test[i].features));
    out.trace = r.accuracy_trace;
  } else {
    throw ConfigError("unknown adaptation method '" + method + "'");
  }
  return out;
}

}  // namespace

NoisySourceResult run_noisy_source_curve(const Dataset& source,
                                         const std::vector<Dataset>& targets,
                                         const std::vector<int>& train_sizes,
                                         const std::vector<int>& test_per_class,
                                         const std::vector<std::string>& methods, int reps,
                                         const CvGrid& c_grid, std::uint64_t seed,
                                         FeatureNorm norm, std::size_t jobs,
                                         int self_label_iterations, int self_label_per_class) {
  if (targets.empty()) throw DataError("run_noisy_source_curve: no targets");
  if (targets.size() != test_per_class.size())
    throw DataError("run_noisy_source_curve: one test size per target required");
  if (train_sizes.empty() || methods.empty() || reps < 1)
    throw DataError("run_noisy_source_curve: sizes, methods and reps must be non-empty");
  for (const std::string& m : methods) {
    const auto& known = known_adaptation_methods();
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw ConfigError("run_noisy_source_curve: unknown method '" + m + "'");
  }

  const std::size_t n_tg = targets.size();
  const std::size_t n_sz = train_sizes.size();
  const std::size_t n_me = methods.size();
  const std::size_t n_cells = static_cast<std::size_t>(reps) * n_sz * n_me;

  struct Cell {
    std::vector<double> acc;          // per target
    std::vector<std::vector<double>> trace;  // per target (self-label only)
    bool ok = false;
    std::string error;
  };
  std::vector<Cell> grid(n_cells);

  parallel_for(n_cells, jobs, [&](std::size_t cell) {
    const std::size_t rep = cell / (n_sz * n_me);
    const std::size_t si = (cell / n_me) % n_sz;
    const std::size_t mi = cell % n_me;
    Cell& slot = grid[cell];
    try {
      SplitSpec sp;
      sp.train_per_class = train_sizes[si];
      sp.test_per_class = 0;
      sp.seed = Rng::derive_key(seed, 0, "noisy-source");
      sp.repetition_index = rep;
      Dataset train = make_split(source, sp).first;
      const auto tf = make_norm(train, norm);
      train = transform_features(train, tf);

      for (std::size_t ti = 0; ti < n_tg; ++ti) {
        SplitSpec tp;
        tp.train_per_class = 0;
        tp.test_per_class = test_per_class[ti];
        tp.seed = Rng::derive_key(seed, ti, "noisy-target");
        tp.repetition_index = rep;
        Dataset test = transform_features(make_split(targets[ti], tp).second, tf);

        const std::uint64_t run_seed = Rng::derive_key(seed, rep * 1000 + si, "noisy-run");
        const MethodRun r = run_method(methods[mi], train, test, c_grid, run_seed,
                                       self_label_iterations, self_label_per_class);
        slot.acc.push_back(recognition_rate(r.predictions, test.labels()));
        slot.trace.push_back(r.trace);
      }
      slot.ok = true;
    } catch (const Error& e) {
      slot.error = "rep " + std::to_string(rep) + ", size " + std::to_string(train_sizes[si]) +
                   ", method " + methods[mi] + ": " + e.what();
    }
  });

  NoisySourceResult out;
  out.train_sizes = train_sizes;
  out.repetitions = reps;
  for (const Dataset& t : targets) out.target_names.push_back(t.name());
  out.curves.assign(n_tg, {});

  for (std::size_t ti = 0; ti < n_tg; ++ti) {
    for (std::size_t mi = 0; mi < n_me; ++mi) {
      MethodCurve curve;
      curve.method = methods[mi];
      for (std::size_t si = 0; si < n_sz; ++si) {
        std::vector<double> vals;
        std::vector<std::vector<double>> traces;
        for (int rep = 0; rep < reps; ++rep) {
          const std::size_t cell =
              (static_cast<std::size_t>(rep) * n_sz + si) * n_me + mi;
          if (!grid[cell].ok) continue;
          vals.push_back(grid[cell].acc[ti]);
          traces.push_back(grid[cell].trace[ti]);
        }
        if (vals.size() != static_cast<std::size_t>(reps)) {
          curve.mean.push_back(kNaN);  // a failed repetition leaves a gap
          curve.std.push_back(kNaN);
        } else {
          curve.mean.push_back(std::accumulate(vals.begin(), vals.end(), 0.0) /
                               static_cast<double>(reps));
          curve.std.push_back(population_std(vals));
        }
        if (methods[mi] == "self-label") {
          // Align trace lengths by repeating the final value (an exhausted
          // pool freezes the model), then average elementwise.
          std::size_t len = 0;
          for (const auto& t : traces) len = std::max(len, t.size());
          std::vector<double> tmean(len, kNaN), tstd(len, kNaN);
          if (!traces.empty() && len > 0) {
            for (std::size_t p = 0; p < len; ++p) {
              std::vector<double> col;
              for (const auto& t : traces)
                if (!t.empty()) col.push_back(p < t.size() ? t[p] : t.back());
              if (!col.empty()) {
                tmean[p] = std::accumulate(col.begin(), col.end(), 0.0) /
                           static_cast<double>(col.size());
                tstd[p] = population_std(col);
              }
            }
          }
          curve.trace_mean.push_back(std::move(tmean));
          curve.trace_std.push_back(std::move(tstd));
        }
      }
      out.curves[ti].push_back(std::move(curve));
    }
  }
  for (const Cell& c : grid)
    if (!c.ok && !c.error.empty()) out.errors.push_back(c.error);
  return out;
}

}  // namespace biasbench
