#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "prognos/cohort.hpp"
#include "prognos/cox.hpp"

namespace prognos {

/// Penalized Cox solutions along a descending lambda grid.
struct RegularizationPath {
  std::vector<double> lambdas;
  std::vector<Eigen::VectorXd> coefficients;
  std::vector<std::size_t> nonzero_counts;
  double alpha = 1.0;
  std::size_t event_count = 0;

  std::size_t size() const noexcept { return lambdas.size(); }
  bool empty() const noexcept { return lambdas.empty(); }
};

struct LassoOptions {
  std::size_t n_lambda = 100;
  double lambda_min_ratio = 0.01;
  double tol = 1e-7;
  /// Elastic-net mixing; 1 is the pure lasso.
  double alpha = 1.0;
  int max_outer = 100;
  int max_sweeps = 10000;
};

/// Cyclic coordinate descent on the Breslow partial likelihood penalized as
///   -loglik(beta) / n_events + lambda * (alpha * |beta|_1 + (1 - alpha) / 2 * |beta|_2^2),
/// with a quadratic approximation in the linear predictor refreshed every outer cycle and warm
/// starts down a log-spaced grid from lambda_max = max_j |score_j(0)| / (n_events * alpha).
RegularizationPath lasso_cox_path(const SurvivalData& data, const LassoOptions& options = {});

/// Path over a cohort's (already standardized) deep features.
RegularizationPath lasso_cox_path(const Cohort& train, Endpoint endpoint,
                                  const LassoOptions& options = {});

/// Breslow score (gradient of the log partial likelihood) at beta.
Eigen::VectorXd cox_score(const Eigen::VectorXd& beta, const SurvivalData& data);

/// Explicit path index or lambda value (the nearest grid point on a log scale is used).
struct LambdaIndex {
  std::size_t index;
};
struct LambdaValue {
  double lambda;
};
using LambdaChoice = std::variant<LambdaIndex, LambdaValue>;

std::size_t resolve_lambda(const RegularizationPath& path, const LambdaChoice& choice);

struct ConcordanceRule {
  /// 0 takes the best held-out C. Otherwise the largest lambda whose C is within this many
  /// bootstrap standard errors of the best (the one-standard-error rule at 1).
  double se_multiplier = 0.0;
  std::size_t bootstrap = 200;
  std::uint64_t seed = 42;
};

/// Path index chosen by Harrell's C on held-out data. Ties go to the larger lambda (sparser
/// model).
std::size_t lambda_by_concordance(const RegularizationPath& path, const SurvivalData& held_out,
                                  const ConcordanceRule& rule = {});

/// First path index with at least `k` nonzero coefficients, or the last index.
std::size_t lambda_by_support(const RegularizationPath& path, std::size_t k);

/// Top min(k, #nonzero) coefficient indices at the chosen lambda, by descending magnitude with
/// ties broken by ascending index.
std::vector<std::size_t> select_features(const RegularizationPath& path, const LambdaChoice& choice,
                                         std::size_t k = 16);

std::vector<std::size_t> select_features(const Eigen::VectorXd& coefficients, std::size_t k = 16);

/// CSV: lambda,nonzero_count,beta_0..beta_{p-1}
std::string path_csv(const RegularizationPath& path);

}  // namespace prognos
