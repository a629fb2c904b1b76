#include "prognos/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "prognos/bootstrap.hpp"
#include "prognos/concordance.hpp"
#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

namespace {

/// Breslow partial likelihood in the linear predictor: value, first derivative and the diagonal
/// of the negative second derivative.
class BreslowInEta {
 public:
  explicit BreslowInEta(const SurvivalData& data) : data_(data) {
    const auto n = static_cast<std::size_t>(data.rows());
    order_.resize(n);
    std::iota(order_.begin(), order_.end(), Eigen::Index{0});
    std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) {
      return data.time(a) < data.time(b);
    });
    std::size_t i = 0;
    while (i < n) {
      std::size_t j = i;
      double d = 0;
      while (j < n && data.time(order_[j]) == data.time(order_[i])) {
        d += data.event[static_cast<std::size_t>(order_[j])] != 0;
        ++j;
      }
      groups_.push_back({i, j, d});
      i = j;
    }
  }

  struct State {
    double loglik = 0.0;
    Eigen::VectorXd gradient;  // d loglik / d eta
    Eigen::VectorXd weight;    // -d2 loglik / d eta2 (diagonal)
  };

  State evaluate(const Eigen::VectorXd& eta, bool derivatives = true) const {
    const double shift = eta.maxCoeff();
    const Eigen::VectorXd e = (eta.array() - shift).exp().matrix();
    std::vector<double> risk(groups_.size());
    double s0 = 0.0;
    for (std::size_t g = groups_.size(); g-- > 0;) {
      for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) s0 += e(order_[k]);
      risk[g] = s0;
    }
    State state;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (groups_[g].events == 0) continue;
      state.loglik -= groups_[g].events * (std::log(risk[g]) + shift);
    }
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      if (data_.event[static_cast<std::size_t>(i)]) state.loglik += eta(i);
    }
    if (!derivatives) return state;

    state.gradient.resize(eta.size());
    state.weight.resize(eta.size());
    double a = 0.0;
    double b = 0.0;
    for (std::size_t g = 0; g < groups_.size(); ++g) {
      if (groups_[g].events > 0) {
        a += groups_[g].events / risk[g];
        b += groups_[g].events / (risk[g] * risk[g]);
      }
      for (std::size_t k = groups_[g].begin; k < groups_[g].end; ++k) {
        const Eigen::Index r = order_[k];
        const double delta = data_.event[static_cast<std::size_t>(r)] ? 1.0 : 0.0;
        state.gradient(r) = delta - e(r) * a;
        state.weight(r) = std::max(0.0, e(r) * a - e(r) * e(r) * b);
      }
    }
    return state;
  }

 private:
  struct Group {
    std::size_t begin, end;
    double events;
  };
  const SurvivalData& data_;
  std::vector<Eigen::Index> order_;
  std::vector<Group> groups_;
};

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

std::size_t count_nonzero(const Eigen::VectorXd& beta) {
  return static_cast<std::size_t>((beta.array() != 0.0).count());
}

class PathSolver {
 public:
  PathSolver(const SurvivalData& data, const LassoOptions& options)
      : data_(data), options_(options), likelihood_(data),
        n_events_(static_cast<double>(data.event_count())) {}

  double penalty(const Eigen::VectorXd& beta, double lambda) const {
    return lambda * (options_.alpha * beta.lpNorm<1>() +
                     0.5 * (1.0 - options_.alpha) * beta.squaredNorm());
  }

  double objective(const Eigen::VectorXd& beta, const Eigen::VectorXd& eta, double lambda) const {
    return -likelihood_.evaluate(eta, false).loglik / n_events_ + penalty(beta, lambda);
  }

  /// Solves at one lambda starting from (and overwriting) beta.
  void solve(double lambda, Eigen::VectorXd& beta) const {
    const auto& x = data_.x;
    const Eigen::Index p = x.cols();
    const double l1 = lambda * options_.alpha;
    const double l2 = lambda * (1.0 - options_.alpha);
    Eigen::VectorXd eta = x * beta;

    for (int outer = 0; outer < options_.max_outer; ++outer) {
      const auto state = likelihood_.evaluate(eta);
      Eigen::VectorXd residual = state.gradient;
      const Eigen::VectorXd& w = state.weight;
      const Eigen::VectorXd v = (x.array().square().matrix().transpose() * w) / n_events_;
      const Eigen::VectorXd beta_start = beta;
      const double obj_start = objective(beta, eta, lambda);

      auto update = [&](Eigen::Index j) {
        if (v(j) <= 0.0) {
          if (beta(j) != 0.0) {
            residual.noalias() -= (w.array() * x.col(j).array() * -beta(j)).matrix();
            beta(j) = 0.0;
          }
          return 0.0;
        }
        const double g = x.col(j).dot(residual) / n_events_;
        const double updated = soft_threshold(g + v(j) * beta(j), l1) / (v(j) + l2);
        const double change = updated - beta(j);
        if (change != 0.0) {
          residual.noalias() -= (w.array() * x.col(j).array() * change).matrix();
          beta(j) = updated;
        }
        return std::abs(change);
      };

      int sweeps = 0;
      while (sweeps < options_.max_sweeps) {
        double max_change = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) max_change = std::max(max_change, update(j));
        ++sweeps;
        if (max_change < options_.tol) break;
        std::vector<Eigen::Index> active;
        for (Eigen::Index j = 0; j < p; ++j) {
          if (beta(j) != 0.0) active.push_back(j);
        }
        while (sweeps < options_.max_sweeps) {
          double active_change = 0.0;
          for (Eigen::Index j : active) active_change = std::max(active_change, update(j));
          ++sweeps;
          if (active_change < options_.tol) break;
        }
      }

      Eigen::VectorXd eta_new = x * beta;
      double obj_new = objective(beta, eta_new, lambda);
      // The diagonal weights do not bound the curvature, so guard against overshooting.
      for (int h = 0; h < 30 && obj_new > obj_start + 1e-14 * std::abs(obj_start); ++h) {
        beta = 0.5 * (beta + beta_start);
        eta_new = x * beta;
        obj_new = objective(beta, eta_new, lambda);
      }
      eta = std::move(eta_new);
      const double moved = (beta - beta_start).cwiseAbs().maxCoeff();
      if (moved < options_.tol) break;
    }
  }

 private:
  const SurvivalData& data_;
  const LassoOptions& options_;
  BreslowInEta likelihood_;
  double n_events_;
};

}  // namespace

Eigen::VectorXd cox_score(const Eigen::VectorXd& beta, const SurvivalData& data) {
  validate_survival_data(data);
  const BreslowInEta likelihood(data);
  const auto state = likelihood.evaluate(data.x * beta);
  return data.x.transpose() * state.gradient;
}

RegularizationPath lasso_cox_path(const SurvivalData& data, const LassoOptions& options) {
  validate_survival_data(data);
  if (data.cols() == 0) throw Error(ErrorKind::NoFeatures, "no features to select from");
  if (!(options.alpha > 0.0 && options.alpha <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "elastic-net mixing must lie in (0, 1]");
  }
  if (options.n_lambda == 0 || !(options.lambda_min_ratio > 0.0 && options.lambda_min_ratio < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda grid needs n_lambda >= 1 and ratio in (0, 1)");
  }

  const Eigen::Index p = data.cols();
  const double n_events = static_cast<double>(data.event_count());
  const Eigen::VectorXd score0 = cox_score(Eigen::VectorXd::Zero(p), data);
  const double lambda_max = score0.cwiseAbs().maxCoeff() / (n_events * options.alpha);
  if (!(lambda_max > 0.0)) {
    throw Error(ErrorKind::NoFeatures, "every feature has zero score at the origin");
  }

  RegularizationPath path;
  path.alpha = options.alpha;
  path.event_count = data.event_count();
  const double steps = static_cast<double>(std::max<std::size_t>(options.n_lambda - 1, 1));
  for (std::size_t k = 0; k < options.n_lambda; ++k) {
    path.lambdas.push_back(lambda_max *
                           std::pow(options.lambda_min_ratio, static_cast<double>(k) / steps));
  }

  const PathSolver solver(data, options);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    // At lambda_max the zero vector satisfies the optimality conditions by construction.
    if (k > 0) solver.solve(path.lambdas[k], beta);
    path.coefficients.push_back(beta);
    path.nonzero_counts.push_back(count_nonzero(beta));
  }
  return path;
}

RegularizationPath lasso_cox_path(const Cohort& train, Endpoint endpoint,
                                  const LassoOptions& options) {
  if (!train.has_deep_features()) {
    throw Error(ErrorKind::NoFeatures, "training cohort carries no deep features");
  }
  const std::size_t p = train.participants.front().deep_features->size();
  SurvivalData data;
  data.x.resize(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& f = train.participants[i].deep_features;
    if (!f || f->size() != p) {
      throw Error(ErrorKind::NoFeatures,
                  "participant '" + train.participants[i].id + "' lacks deep features");
    }
    for (std::size_t j = 0; j < p; ++j) {
      data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (*f)[j];
    }
  }
  endpoint_outcomes(train, endpoint, data.time, data.event);
  return lasso_cox_path(data, options);
}

std::size_t resolve_lambda(const RegularizationPath& path, const LambdaChoice& choice) {
  if (path.empty()) throw Error(ErrorKind::EmptyPath, "regularization path is empty");
  if (const auto* idx = std::get_if<LambdaIndex>(&choice)) {
    if (idx->index >= path.size()) {
      throw Error(ErrorKind::InvalidArgument, "lambda index " + std::to_string(idx->index) +
                                                  " is beyond a path of " +
                                                  std::to_string(path.size()));
    }
    return idx->index;
  }
  const double target = std::get<LambdaValue>(choice).lambda;
  if (!(target > 0.0)) throw Error(ErrorKind::InvalidArgument, "lambda must be positive");
  std::size_t best = 0;
  double best_gap = std::abs(std::log(path.lambdas[0] / target));
  for (std::size_t k = 1; k < path.size(); ++k) {
    const double gap = std::abs(std::log(path.lambdas[k] / target));
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

std::size_t lambda_by_concordance(const RegularizationPath& path, const SurvivalData& held_out,
                                  const ConcordanceRule& rule) {
  if (path.empty()) throw Error(ErrorKind::EmptyPath, "regularization path is empty");
  if (held_out.rows() == 0) throw Error(ErrorKind::EmptyInput, "held-out set is empty");
  const auto n = static_cast<std::size_t>(held_out.rows());
  const std::span<const double> time(held_out.time.data(), n);
  std::vector<double> c_at(path.size());
  std::size_t best = 0;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const Eigen::VectorXd risk = held_out.x * path.coefficients[k];
    c_at[k] = concordance(std::span<const double>(risk.data(), n), time, held_out.event).c;
    if (c_at[k] > c_at[best]) best = k;
  }
  if (rule.se_multiplier <= 0.0) return best;

  const Eigen::VectorXd risk = held_out.x * path.coefficients[best];
  auto metric = [&](std::span<const std::size_t> idx) -> std::optional<double> {
    std::vector<double> r, t;
    std::vector<std::uint8_t> e;
    r.reserve(idx.size());
    t.reserve(idx.size());
    e.reserve(idx.size());
    for (std::size_t i : idx) {
      r.push_back(risk(static_cast<Eigen::Index>(i)));
      t.push_back(time[i]);
      e.push_back(held_out.event[i]);
    }
    const auto c = concordance(r, t, e);
    if (c.degenerate()) return std::nullopt;
    return c.c;
  };
  BootstrapOptions bo;
  bo.replicates = rule.bootstrap;
  bo.seed = rule.seed;
  const auto reps = bootstrap_ci(n, metric, bo).replicates;
  const double mean = std::accumulate(reps.begin(), reps.end(), 0.0) / static_cast<double>(reps.size());
  double ss = 0.0;
  for (double v : reps) ss += (v - mean) * (v - mean);
  const double se = std::sqrt(ss / static_cast<double>(reps.size() - 1));
  for (std::size_t k = 0; k < best; ++k) {
    if (c_at[k] >= c_at[best] - rule.se_multiplier * se) return k;
  }
  return best;
}

std::size_t lambda_by_support(const RegularizationPath& path, std::size_t k) {
  if (path.empty()) throw Error(ErrorKind::EmptyPath, "regularization path is empty");
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (path.nonzero_counts[i] >= k) return i;
  }
  return path.size() - 1;
}

std::vector<std::size_t> select_features(const Eigen::VectorXd& coefficients, std::size_t k) {
  std::vector<std::size_t> nonzero;
  for (Eigen::Index j = 0; j < coefficients.size(); ++j) {
    if (coefficients(j) != 0.0) nonzero.push_back(static_cast<std::size_t>(j));
  }
  std::stable_sort(nonzero.begin(), nonzero.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(coefficients(static_cast<Eigen::Index>(a)));
    const double mb = std::abs(coefficients(static_cast<Eigen::Index>(b)));
    if (ma != mb) return ma > mb;
    return a < b;
  });
  if (nonzero.size() > k) nonzero.resize(k);
  return nonzero;
}

std::vector<std::size_t> select_features(const RegularizationPath& path, const LambdaChoice& choice,
                                         std::size_t k) {
  return select_features(path.coefficients[resolve_lambda(path, choice)], k);
}

std::string path_csv(const RegularizationPath& path) {
  std::ostringstream out;
  out << "lambda,nonzero_count";
  const Eigen::Index p = path.empty() ? 0 : path.coefficients.front().size();
  for (Eigen::Index j = 0; j < p; ++j) out << ",beta_" << j;
  out << '\n';
  for (std::size_t k = 0; k < path.size(); ++k) {
    out << detail::format_double(path.lambdas[k]) << ',' << path.nonzero_counts[k];
    for (Eigen::Index j = 0; j < p; ++j) out << ',' << detail::format_double(path.coefficients[k](j));
    out << '\n';
  }
  return out.str();
}

}  // namespace prognos
