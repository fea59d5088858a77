#include "biasbench/dam.hpp"

#include <algorithm>
#include <cmath>

#include "biasbench/errors.hpp"

namespace biasbench {

namespace {

// Per-sample reduced problem: all samples (labeled and unlabeled) become a
// pull target t_i with weight c_i (unlabeled: gamma-weighted source mean,
// c_i = sum gamma; labeled: the label, c_i = 1).
struct Reduced {
  Eigen::MatrixXd x;     // stacked [unlabeled; labeled]
  Eigen::VectorXd t;     // pull targets
  Eigen::VectorXd cw;    // pull weights (theta * c_i collapsed later)
  Eigen::Index n_unlabeled = 0;
};

// min over f of C*max(0, |p - f| - eps) + (k/2) (f - t)^2, k = theta * c_i.
// Piecewise: dead zone within eps, quadratic of width C/k, then linear.
double huber_insensitive(double p, double t, double eps, double c, double k) {
  const double r = std::fabs(p - t);
  if (r <= eps) return 0.0;
  const double z = r - eps;
  if (z <= c / k) return 0.5 * k * z * z;
  return c * z - 0.5 * c * c / k;
}

double huber_insensitive_grad(double p, double t, double eps, double c, double k) {
  const double diff = p - t;
  const double r = std::fabs(diff);
  if (r <= eps) return 0.0;
  const double z = r - eps;
  const double mag = (z <= c / k) ? k * z : c;
  return diff > 0.0 ? mag : -mag;
}

double optimal_f(double p, double t, double eps, double c, double k) {
  if (std::fabs(p - t) <= eps) return t;
  if (p > t) return std::min(t + c / k, p - eps);
  return std::max(t - c / k, p + eps);
}

Reduced build_reduced(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                      const DamConfig& config, const std::optional<DamLabeledTarget>& labeled) {
  if (sources.empty()) throw DataError("dam_train: need at least one source model");
  if (config.gammas.size() != sources.size())
    throw DataError("dam_train: one gamma per source model required");
  double gamma_sum = 0.0;
  for (double g : config.gammas) {
    if (g < 0.0) throw DataError("dam_train: gammas must be >= 0");
    gamma_sum += g;
  }
  if (gamma_sum <= 0.0) throw DataError("dam_train: at least one gamma must be positive");
  if (config.theta <= 0.0) throw DataError("dam_train: theta must be positive");
  if (config.epsilon < 0.0) throw DataError("dam_train: epsilon must be >= 0");
  if (config.c <= 0.0) throw DataError("dam_train: C must be positive");
  if (target_x.rows() == 0) throw DataError("dam_train: empty target");
  for (const LinearModel& m : sources)
    if (m.dim() != target_x.cols()) throw DataError("dam_train: source model dim mismatch");

  const Eigen::Index nu = target_x.rows();
  const Eigen::Index nl = labeled ? labeled->x.rows() : 0;
  if (labeled && labeled->x.cols() != target_x.cols())
    throw DataError("dam_train: labeled target dim mismatch");
  if (labeled && static_cast<std::size_t>(nl) != labeled->y.size())
    throw DataError("dam_train: labeled target x/y size mismatch");

  Reduced r;
  r.n_unlabeled = nu;
  r.x.resize(nu + nl, target_x.cols());
  r.x.topRows(nu) = target_x;
  if (nl > 0) r.x.bottomRows(nl) = labeled->x;

  r.t.resize(nu + nl);
  r.cw.resize(nu + nl);
  for (Eigen::Index i = 0; i < nu; ++i) {
    double acc = 0.0;
    for (std::size_t s = 0; s < sources.size(); ++s)
      acc += config.gammas[s] * predict_margin(sources[s], target_x.row(i).transpose());
    r.t[i] = acc / gamma_sum;
    r.cw[i] = config.theta * gamma_sum;
  }
  for (Eigen::Index i = 0; i < nl; ++i) {
    r.t[nu + i] = labeled->y[static_cast<std::size_t>(i)];
    r.cw[nu + i] = config.theta;
  }
  return r;
}

double reduced_objective(const Reduced& r, const DamConfig& cfg, const Eigen::VectorXd& w,
                         double b) {
  double obj = 0.5 * w.squaredNorm();
  for (Eigen::Index i = 0; i < r.x.rows(); ++i) {
    const double p = r.x.row(i).dot(w) + b;
    obj += huber_insensitive(p, r.t[i], cfg.epsilon, cfg.c, r.cw[i]);
  }
  return obj;
}

void reduced_gradient(const Reduced& r, const DamConfig& cfg, const Eigen::VectorXd& w, double b,
                      Eigen::VectorXd& gw, double& gb) {
  gw = w;
  gb = 0.0;
  for (Eigen::Index i = 0; i < r.x.rows(); ++i) {
    const double p = r.x.row(i).dot(w) + b;
    const double gi = huber_insensitive_grad(p, r.t[i], cfg.epsilon, cfg.c, r.cw[i]);
    if (gi != 0.0) {
      gw += gi * r.x.row(i).transpose();
      gb += gi;
    }
  }
}

}  // namespace

DamResult dam_train(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                    const DamConfig& config, const std::optional<DamLabeledTarget>& labeled,
                    double grad_tol, int max_iterations) {
  const Reduced r = build_reduced(sources, target_x, config, labeled);
  const Eigen::Index d = r.x.cols();

  // Constant gap between the reduced pull term (f - t)^2 and the full
  // per-source agreement sum; added back so the trace reports the true
  // objective.
  double shift = 0.0;
  {
    double gamma_sum = 0.0;
    for (double g : config.gammas) gamma_sum += g;
    for (Eigen::Index i = 0; i < r.n_unlabeled; ++i) {
      double sq = 0.0;
      for (std::size_t s = 0; s < sources.size(); ++s) {
        const double fs = predict_margin(sources[s], target_x.row(i).transpose());
        sq += config.gammas[s] * fs * fs;
      }
      shift += 0.5 * config.theta * (sq - gamma_sum * r.t[i] * r.t[i]);
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0.0;
  double obj = reduced_objective(r, config, w, b);

  // Lipschitz bound of the reduced gradient: 1 + sum_i k_i * ||x~_i||^2.
  double lip = 1.0;
  for (Eigen::Index i = 0; i < r.x.rows(); ++i)
    lip += r.cw[i] * (r.x.row(i).squaredNorm() + 1.0);

  DamResult out;
  out.objective_trace.push_back(obj + shift);

  Eigen::VectorXd gw;
  double gb = 0.0;
  double step = 1.0 / lip;
  int it = 0;
  for (; it < max_iterations; ++it) {
    reduced_gradient(r, config, w, b, gw, gb);
    const double gnorm = std::max(gw.cwiseAbs().maxCoeff(), std::fabs(gb));
    if (gnorm <= grad_tol) break;

    // Backtracking line search (Armijo) starting from a mildly optimistic
    // step; objective trace stays monotone by construction.
    const double g2 = gw.squaredNorm() + gb * gb;
    double s = std::min(step * 4.0, 1.0);
    double next_obj = 0.0;
    for (;;) {
      next_obj = reduced_objective(r, config, w - s * gw, b - s * gb);
      if (next_obj <= obj - 0.5 * s * g2 || s < 1e-18) break;
      s *= 0.5;
    }
    if (next_obj >= obj) break;  // no descent possible at machine precision
    w -= s * gw;
    b -= s * gb;
    obj = next_obj;
    step = s;
    out.objective_trace.push_back(obj + shift);
  }
  out.iterations = it;

  out.model.weights = w;
  out.model.offset = b;
  out.model.trained_c = config.c;

  const Eigen::Index nu = r.n_unlabeled;
  const Eigen::Index n = r.x.rows();
  out.f_unlabeled.resize(nu);
  out.f_labeled.resize(n - nu);
  out.xi.resize(n);
  out.xi_star.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double p = r.x.row(i).dot(w) + b;
    const double f = optimal_f(p, r.t[i], config.epsilon, config.c, r.cw[i]);
    if (i < nu) out.f_unlabeled[i] = f;
    else out.f_labeled[i - nu] = f;
    out.xi[i] = std::max(0.0, (p - f) - config.epsilon);
    out.xi_star[i] = std::max(0.0, (f - p) - config.epsilon);
  }
  out.objective = dam_objective(sources, target_x, config, labeled, w, b, out.f_unlabeled,
                                out.f_labeled);
  return out;
}

double dam_objective(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                     const DamConfig& config, const std::optional<DamLabeledTarget>& labeled,
                     const Eigen::VectorXd& w, double b, const Eigen::VectorXd& f_unlabeled,
                     const Eigen::VectorXd& f_labeled) {
  if (f_unlabeled.size() != target_x.rows())
    throw DataError("dam_objective: f_unlabeled size mismatch");
  const Eigen::Index nl = labeled ? labeled->x.rows() : 0;
  if (f_labeled.size() != nl) throw DataError("dam_objective: f_labeled size mismatch");

  double obj = 0.5 * w.squaredNorm();

  auto tube = [&](double p, double f) {
    return std::max(0.0, std::fabs(p - f) - config.epsilon);  // xi + xi* at optimum slack
  };
  for (Eigen::Index i = 0; i < target_x.rows(); ++i)
    obj += config.c * tube(target_x.row(i).dot(w) + b, f_unlabeled[i]);
  for (Eigen::Index i = 0; i < nl; ++i)
    obj += config.c * tube(labeled->x.row(i).dot(w) + b, f_labeled[i]);

  double agree = 0.0;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < target_x.rows(); ++i) {
      const double fs = predict_margin(sources[s], target_x.row(i).transpose());
      acc += (f_unlabeled[i] - fs) * (f_unlabeled[i] - fs);
    }
    agree += config.gammas[s] * acc;
  }
  for (Eigen::Index i = 0; i < nl; ++i) {
    const double diff = f_labeled[i] - labeled->y[static_cast<std::size_t>(i)];
    agree += diff * diff;
  }
  return obj + 0.5 * config.theta * agree;
}

double dam_kkt_residual(const std::vector<LinearModel>& sources, const Eigen::MatrixXd& target_x,
                        const DamConfig& config, const std::optional<DamLabeledTarget>& labeled,
                        const Eigen::VectorXd& w, double b) {
  const Reduced r = build_reduced(sources, target_x, config, labeled);
  Eigen::VectorXd gw;
  double gb = 0.0;
  reduced_gradient(r, config, w, b, gw, gb);
  return std::max(gw.cwiseAbs().maxCoeff(), std::fabs(gb));
}

}  // namespace biasbench
