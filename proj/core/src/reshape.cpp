#include "biasbench/reshape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "biasbench/dam.hpp"
#include "biasbench/errors.hpp"
#include "biasbench/metrics.hpp"
#include "biasbench/rng.hpp"
#include "biasbench/subspace.hpp"

namespace biasbench {

namespace {

// Lexicographically smallest cost-minimizing permutation; S is small, so
// plain enumeration is fine.
std::vector<int> best_matching(const Eigen::MatrixXd& cost) {
  const int s = static_cast<int>(cost.rows());
  if (s > 9) throw DataError("reshape: more than 9 domains is not supported");
  std::vector<int> perm(static_cast<std::size_t>(s));
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double c = 0.0;
    for (int j = 0; j < s; ++j) c += cost(j, perm[static_cast<std::size_t>(j)]);
    if (c < best_cost - 1e-15) {  // strict improvement keeps the first (smallest) permutation
      best_cost = c;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

DomainAssignment reshape_discover(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                                  int s_domains, std::uint64_t seed, int max_rounds) {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size())
    throw DataError("reshape_discover: sample/label count mismatch");
  if (s_domains < 1) throw DataError("reshape_discover: need at least one domain");

  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < n; ++i) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);
  for (const auto& [cls, idx] : by_class)
    if (static_cast<int>(idx.size()) < s_domains)
      throw DataError("reshape_discover: class " + std::to_string(cls) + " has only " +
                      std::to_string(idx.size()) + " samples for " +
                      std::to_string(s_domains) + " domains");

  const int k_classes = static_cast<int>(by_class.size());
  const int s = s_domains;

  DomainAssignment out;
  out.n_classes = k_classes;
  out.n_domains = s;
  out.local_cluster.assign(static_cast<std::size_t>(n), 0);
  out.domain.assign(static_cast<std::size_t>(n), 0);

  if (s == 1) {
    int ci = 0;
    for (const auto& [cls, idx] : by_class) {
      for (Eigen::Index i : idx) out.local_cluster[static_cast<std::size_t>(i)] = ci;
      ++ci;
    }
    return out;
  }

  // Per class: S cluster centers, farthest-point seeded.
  struct ClassState {
    std::vector<Eigen::Index> samples;
    Eigen::MatrixXd centers;       // S x d
    std::vector<int> member;       // cluster index per class sample
    std::vector<int> to_domain;    // cluster j -> domain
  };
  std::vector<ClassState> classes;
  classes.reserve(static_cast<std::size_t>(k_classes));
  for (const auto& [cls, idx] : by_class) {
    ClassState st;
    st.samples = idx;
    st.member.assign(idx.size(), 0);
    st.to_domain.resize(static_cast<std::size_t>(s));
    std::iota(st.to_domain.begin(), st.to_domain.end(), 0);

    Rng rng(seed, 0, "reshape:c" + std::to_string(cls));
    st.centers.resize(s, x.cols());
    std::vector<Eigen::Index> chosen;
    chosen.push_back(idx[static_cast<std::size_t>(rng.next_below(idx.size()))]);
    while (static_cast<int>(chosen.size()) < s) {
      Eigen::Index far = idx[0];
      double far_d = -1.0;
      for (Eigen::Index i : idx) {
        double d_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index c : chosen)
          d_min = std::min(d_min, (x.row(i) - x.row(c)).squaredNorm());
        if (d_min > far_d) {
          far_d = d_min;
          far = i;
        }
      }
      chosen.push_back(far);
    }
    for (int j = 0; j < s; ++j) st.centers.row(j) = x.row(chosen[static_cast<std::size_t>(j)]);
    classes.push_back(std::move(st));
  }

  Eigen::MatrixXd domain_centroids(s, x.cols());
  int round = 0;
  for (; round < max_rounds; ++round) {
    bool changed = false;

    // (i) one within-class Lloyd step.
    for (ClassState& st : classes) {
      for (std::size_t a = 0; a < st.samples.size(); ++a) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (int j = 0; j < s; ++j) {
          const double d = (x.row(st.samples[a]) - st.centers.row(j)).squaredNorm();
          if (d < best_d - 1e-15) {
            best_d = d;
            best = j;
          }
        }
        if (st.member[a] != best) {
          st.member[a] = best;
          changed = true;
        }
      }
      // Recompute means; an emptied cluster steals the sample farthest from
      // its own center.
      for (int j = 0; j < s; ++j) {
        std::vector<std::size_t> members;
        for (std::size_t a = 0; a < st.samples.size(); ++a)
          if (st.member[a] == j) members.push_back(a);
        if (members.empty()) {
          std::size_t worst = 0;
          double worst_d = -1.0;
          for (std::size_t a = 0; a < st.samples.size(); ++a) {
            const double d =
                (x.row(st.samples[a]) - st.centers.row(st.member[a])).squaredNorm();
            if (d > worst_d) {
              worst_d = d;
              worst = a;
            }
          }
          st.member[worst] = j;
          members.push_back(worst);
          changed = true;
        }
        Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(x.cols());
        for (std::size_t a : members) mean += x.row(st.samples[a]);
        st.centers.row(j) = mean / static_cast<double>(members.size());
      }
    }

    // (ii) match local clusters to domains. Domain centroids are the means
    // of the cluster centers currently assigned to each domain.
    domain_centroids.setZero();
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(s);
    for (const ClassState& st : classes)
      for (int j = 0; j < s; ++j) {
        domain_centroids.row(st.to_domain[static_cast<std::size_t>(j)]) += st.centers.row(j);
        counts[st.to_domain[static_cast<std::size_t>(j)]] += 1.0;
      }
    for (int dd = 0; dd < s; ++dd)
      if (counts[dd] > 0.0) domain_centroids.row(dd) /= counts[dd];

    for (ClassState& st : classes) {
      Eigen::MatrixXd cost(s, s);
      for (int j = 0; j < s; ++j)
        for (int dd = 0; dd < s; ++dd)
          cost(j, dd) = (st.centers.row(j) - domain_centroids.row(dd)).squaredNorm();
      const std::vector<int> match = best_matching(cost);
      if (match != st.to_domain) {
        st.to_domain = match;
        changed = true;
      }
    }

    if (!changed) break;
  }
  out.rounds = round;

  int ci = 0;
  for (const ClassState& st : classes) {
    for (std::size_t a = 0; a < st.samples.size(); ++a) {
      const std::size_t i = static_cast<std::size_t>(st.samples[a]);
      out.local_cluster[i] = ci * s + st.member[a];
      out.domain[i] = st.to_domain[static_cast<std::size_t>(st.member[a])];
    }
    ++ci;
  }
  return out;
}

namespace {

// SA adaptation of one source block onto the target, scored by recognition
// rate. Shared by reshape_combine's SA mode.
ReshapeCombineEntry sa_adapt_entry(const Eigen::MatrixXd& xs, const std::vector<int>& ys,
                                   const Dataset& target, const std::vector<double>& c_grid,
                                   std::uint64_t seed, const std::string& config) {
  const Eigen::MatrixXd xt = target.feature_matrix();
  const int d = static_cast<int>(xs.cols());
  const int d_cap =
      std::max(1, std::min({d, static_cast<int>(xs.rows()) - 1, static_cast<int>(xt.rows()) - 1}));
  const int k = subspace_disagreement_dim(xs, xt, d_cap);

  const SubspaceBasis bs = pca_subspace(xs, k);
  const SubspaceBasis bt = pca_subspace(xt, k);
  const AlignmentMatrix a = sa_align(bs, bt);

  Eigen::MatrixXd zs(xs.rows(), k);
  for (Eigen::Index i = 0; i < xs.rows(); ++i)
    zs.row(i) = (a.a.transpose() * bs.project(xs.row(i).transpose())).transpose();
  Eigen::MatrixXd zt(xt.rows(), k);
  for (Eigen::Index i = 0; i < xt.rows(); ++i)
    zt.row(i) = bt.project(xt.row(i).transpose()).transpose();

  CvGrid grid;
  grid.c_values = c_grid;
  grid.folds = 2;
  grid.seed = seed;
  const double c = cv_select_c(zs, ys, grid);
  const OvaModel model = ova_train(zs, ys, c);

  ReshapeCombineEntry entry;
  entry.config = config;
  for (Eigen::Index i = 0; i < zt.rows(); ++i)
    entry.predictions.push_back(ova_predict(model, zt.row(i).transpose()));
  entry.accuracy = recognition_rate(entry.predictions, target.labels());
  return entry;
}

}  // namespace

ReshapeCombineResult reshape_combine(const Eigen::MatrixXd& source_x,
                                     const std::vector<int>& source_y,
                                     const DomainAssignment& assignment, const Dataset& target,
                                     ReshapeCombineMode mode,
                                     const std::vector<double>& gamma_grid,
                                     const std::vector<double>& c_grid, std::uint64_t seed) {
  if (assignment.n_domains < 2)
    throw DataError("reshape_combine: need at least 2 discovered domains");
  if (static_cast<std::size_t>(source_x.rows()) != assignment.domain.size() ||
      source_y.size() != assignment.domain.size())
    throw DataError("reshape_combine: assignment does not match the source data");

  // Split the pooled source by discovered domain.
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(assignment.n_domains));
  for (std::size_t i = 0; i < assignment.domain.size(); ++i)
    members[static_cast<std::size_t>(assignment.domain[i])].push_back(
        static_cast<Eigen::Index>(i));
  for (std::size_t dd = 0; dd < members.size(); ++dd)
    if (members[dd].empty())
      throw DataError("reshape_combine: discovered domain " + std::to_string(dd) + " is empty");

  auto block = [&](std::size_t dd, Eigen::MatrixXd& xb, std::vector<int>& yb) {
    xb.resize(static_cast<Eigen::Index>(members[dd].size()), source_x.cols());
    yb.resize(members[dd].size());
    for (std::size_t i = 0; i < members[dd].size(); ++i) {
      xb.row(static_cast<Eigen::Index>(i)) = source_x.row(members[dd][i]);
      yb[i] = source_y[static_cast<std::size_t>(members[dd][i])];
    }
  };

  ReshapeCombineResult out;

  if (mode == ReshapeCombineMode::kBestSubdomainSa) {
    for (std::size_t dd = 0; dd < members.size(); ++dd) {
      Eigen::MatrixXd xb;
      std::vector<int> yb;
      block(dd, xb, yb);
      out.table.push_back(
          sa_adapt_entry(xb, yb, target, c_grid, seed, "source=" + std::to_string(dd)));
    }
  } else {
    if (assignment.n_domains != 2)
      throw DataError("reshape_combine: weighted-DAM mode requires exactly 2 domains");
    if (gamma_grid.empty()) throw DataError("reshape_combine: empty gamma grid");

    const Eigen::MatrixXd xt = target.feature_matrix();
    // Per-domain one-vs-all source models with a shared cross-validated C.
    std::vector<OvaModel> sub_models;
    std::vector<int> classes;
    {
      std::set<int> cls(source_y.begin(), source_y.end());
      classes.assign(cls.begin(), cls.end());
    }
    CvGrid grid;
    grid.c_values = c_grid;
    grid.folds = 2;
    grid.seed = seed;
    for (std::size_t dd = 0; dd < members.size(); ++dd) {
      Eigen::MatrixXd xb;
      std::vector<int> yb;
      block(dd, xb, yb);
      const double c = cv_select_c(xb, yb, grid);
      sub_models.push_back(ova_train(xb, yb, c));
    }

    for (double g1 : gamma_grid) {
      DamConfig cfg;
      cfg.gammas = {g1, 1.0 - g1};

      // One DAM regression per class; prediction by argmax of f^t.
      Eigen::MatrixXd f(xt.rows(), static_cast<Eigen::Index>(classes.size()));
      for (std::size_t kc = 0; kc < classes.size(); ++kc) {
        std::vector<LinearModel> srcs;
        for (const OvaModel& m : sub_models) {
          auto it = std::find(m.classes.begin(), m.classes.end(), classes[kc]);
          if (it == m.classes.end())
            throw DataError("reshape_combine: discovered domain lacks class " +
                            std::to_string(classes[kc]));
          srcs.push_back(m.models[static_cast<std::size_t>(it - m.classes.begin())]);
        }
        const DamResult r = dam_train(srcs, xt, cfg);
        f.col(static_cast<Eigen::Index>(kc)) = r.f_unlabeled;
      }

      ReshapeCombineEntry entry;
      entry.config = "gamma1=" + std::to_string(g1);
      for (Eigen::Index i = 0; i < xt.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index kc = 1; kc < f.cols(); ++kc)
          if (f(i, kc) > f(i, best)) best = kc;
        entry.predictions.push_back(classes[static_cast<std::size_t>(best)]);
      }
      entry.accuracy = recognition_rate(entry.predictions, target.labels());
      out.table.push_back(std::move(entry));
    }
  }

  out.best_index = 0;
  for (std::size_t i = 1; i < out.table.size(); ++i)
    if (out.table[i].accuracy > out.table[out.best_index].accuracy) out.best_index = i;
  return out;
}

}  // namespace biasbench
