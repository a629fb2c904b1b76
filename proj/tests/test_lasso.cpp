#include <gtest/gtest.h>

#include <cmath>

#include "prognos/errors.hpp"
#include "prognos/lasso.hpp"
#include "prognos/simulate.hpp"
#include "support.hpp"

using namespace prognos;

namespace {

SurvivalData sparse_instance(std::uint64_t seed, std::size_t n = 300) {
  CoxSimulationSpec spec;
  spec.n = n;
  spec.beta = {0.8, 0.0, -0.6, 0.0, 0.0, 0.3, 0.0, 0.0};
  spec.censoring_rate = 0.05;
  spec.seed = seed;
  return simulate_cox(spec);
}

double max_abs(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

}  // namespace

TEST(LassoPath, LambdaMaxGivesZeros) {
  const auto d = sparse_instance(1);
  const auto path = lasso_cox_path(d);
  ASSERT_EQ(path.size(), 100u);
  EXPECT_EQ(max_abs(path.coefficients[0]), 0.0);
  EXPECT_EQ(path.nonzero_counts[0], 0u);
  // lambda_max is the smallest lambda with an all-zero solution: the largest score equals it.
  const Eigen::VectorXd score = cox_score(Eigen::VectorXd::Zero(d.cols()), d);
  EXPECT_NEAR(max_abs(score) / static_cast<double>(d.event_count()), path.lambdas[0], 1e-12);
  EXPECT_NEAR(path.lambdas.back() / path.lambdas.front(), 0.01, 1e-12);
}

TEST(LassoPath, KktConditionsHoldAlongPath) {
  for (std::uint64_t seed : {2u, 3u, 4u}) {
    const auto d = sparse_instance(seed);
    const auto path = lasso_cox_path(d);
    const double m = static_cast<double>(d.event_count());
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Eigen::VectorXd g = cox_score(path.coefficients[k], d) / m;
      const double lambda = path.lambdas[k];
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        const double b = path.coefficients[k](j);
        if (b != 0.0) {
          EXPECT_NEAR(g(j), lambda * (b > 0 ? 1.0 : -1.0), 1e-5) << "k=" << k << " j=" << j;
        } else {
          EXPECT_LE(std::abs(g(j)), lambda * (1.0 + 1e-5)) << "k=" << k << " j=" << j;
        }
      }
    }
  }
}

TEST(LassoPath, SmallestLambdaApproachesUnpenalizedFit) {
  const auto d = sparse_instance(5, 500);
  LassoOptions o;
  o.lambda_min_ratio = 1e-4;
  o.tol = 1e-10;
  const auto path = lasso_cox_path(d, o);
  CoxFitOptions fo;
  fo.ties = TieMethod::Breslow;
  const auto fit = fit_cox(d, fo);
  EXPECT_LT(max_abs(path.coefficients.back() - fit.beta), 1e-3);
}

TEST(LassoPath, DuplicateColumnsShareTheSignal) {
  auto d = sparse_instance(6);
  Eigen::MatrixXd x(d.rows(), d.cols() + 1);
  x << d.x, d.x.col(0);
  d.x = x;
  const auto path = lasso_cox_path(d);
  // The first variable to enter is one of the duplicated pair.
  std::size_t first = 0;
  while (first < path.size() && path.nonzero_counts[first] == 0) ++first;
  ASSERT_LT(first, path.size());
  const auto& b = path.coefficients[first];
  EXPECT_TRUE(b(0) != 0.0 || b(d.cols() - 1) != 0.0);
  for (Eigen::Index j = 1; j + 1 < d.cols(); ++j) EXPECT_EQ(b(j), 0.0);
}

TEST(LassoPath, Deterministic) {
  const auto d = sparse_instance(7);
  const auto a = lasso_cox_path(d);
  const auto b = lasso_cox_path(d);
  EXPECT_EQ(path_csv(a), path_csv(b));
}

TEST(LassoPath, PlantedFeatureEntersFirst) {
  SyntheticCohortSpec spec;
  spec.n = 800;
  const auto train = zscore_apply(zscore_fit(simulate_cohort(spec).cohort), simulate_cohort(spec).cohort);
  const auto path = lasso_cox_path(train, Endpoint::LateAmd);
  std::size_t first = 0;
  while (first < path.size() && path.nonzero_counts[first] == 0) ++first;
  ASSERT_LT(first, path.size());
  EXPECT_NE(path.coefficients[first](7), 0.0);
}

TEST(LassoPath, RejectsDataWithoutEvents) {
  auto d = sparse_instance(8, 20);
  std::fill(d.event.begin(), d.event.end(), 0);
  try {
    lasso_cox_path(d);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoEvents);
  }
}

TEST(SelectFeatures, TopKByMagnitudeWithIndexTieBreak) {
  Eigen::VectorXd b(6);
  b << 0.0, -0.5, 0.2, 0.5, 0.0, 0.1;
  EXPECT_EQ(select_features(b, 2), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(select_features(b, 16), (std::vector<std::size_t>{1, 3, 2, 5}));
  EXPECT_TRUE(select_features(Eigen::VectorXd::Zero(4), 3).empty());
  Eigen::VectorXd c(4);
  c << 0.0, 0.5, -0.7, 0.0;
  EXPECT_EQ(select_features(c, 16), (std::vector<std::size_t>{2, 1}));
  Eigen::VectorXd many = Eigen::VectorXd::LinSpaced(20, 1.0, 20.0);
  EXPECT_EQ(select_features(many, 16).size(), 16u);
}

TEST(SelectFeatures, PathChoices) {
  const auto d = sparse_instance(9);
  const auto path = lasso_cox_path(d);
  const auto last = select_features(path, LambdaIndex{path.size() - 1}, 3);
  EXPECT_EQ(last.size(), 3u);
  EXPECT_EQ(resolve_lambda(path, LambdaValue{path.lambdas[10] * 1.0001}), 10u);
  EXPECT_EQ(resolve_lambda(path, LambdaValue{1e9}), 0u);
  EXPECT_EQ(resolve_lambda(path, LambdaValue{1e-12}), path.size() - 1);
  EXPECT_THROW(resolve_lambda(path, LambdaIndex{path.size()}), Error);
  EXPECT_THROW(resolve_lambda(path, LambdaValue{-1.0}), Error);
}

TEST(SelectFeatures, EmptyPathRejected) {
  try {
    select_features(RegularizationPath{}, LambdaIndex{0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyPath);
  }
}

TEST(LambdaRules, SupportAndConcordance) {
  const auto d = sparse_instance(10, 400);
  const auto path = lasso_cox_path(d);
  const auto k = lambda_by_support(path, 2);
  EXPECT_GE(path.nonzero_counts[k], 2u);
  if (k > 0) EXPECT_LT(path.nonzero_counts[k - 1], 2u);
  EXPECT_EQ(lambda_by_support(path, 1000), path.size() - 1);
  const auto held = sparse_instance(11, 200);
  const auto best = lambda_by_concordance(path, held);
  EXPECT_LT(best, path.size());
  EXPECT_GT(path.nonzero_counts[best], 0u);
  ConcordanceRule one_se;
  one_se.se_multiplier = 1.0;
  const auto sparse = lambda_by_concordance(path, held, one_se);
  EXPECT_LE(sparse, best);
  EXPECT_EQ(sparse, lambda_by_concordance(path, held, one_se));
}
