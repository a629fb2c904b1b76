#include "prognos/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "prognos/errors.hpp"

namespace prognos {

double BaselineSurvival::survival_at(double t) const {
  auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return 1.0;
  return s0[static_cast<std::size_t>(std::distance(time.begin(), it)) - 1];
}

BaselineSurvival breslow_baseline(const Eigen::VectorXd& beta, const SurvivalData& data) {
  validate_survival_data(data);
  if (beta.size() != data.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "beta does not match the design matrix");
  }
  const Eigen::Index n = data.rows();
  const Eigen::VectorXd eta = data.x * beta;
  const double shift = eta.maxCoeff();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return data.time(a) < data.time(b); });

  // Risk-set sums from the latest time backwards, then the hazard accumulated forwards.
  std::vector<double> group_time, group_events, group_risk;
  double risk = 0.0;
  std::size_t k = order.size();
  while (k > 0) {
    const double t = data.time(order[k - 1]);
    double d = 0.0;
    while (k > 0 && data.time(order[k - 1]) == t) {
      const Eigen::Index r = order[k - 1];
      risk += std::exp(eta(r) - shift);
      d += data.event[static_cast<std::size_t>(r)] != 0 ? 1.0 : 0.0;
      --k;
    }
    if (d > 0) {
      group_time.push_back(t);
      group_events.push_back(d);
      group_risk.push_back(risk);
    }
  }

  BaselineSurvival out;
  double cumulative = 0.0;
  const double scale = std::exp(-shift);
  for (std::size_t g = group_time.size(); g-- > 0;) {
    cumulative += group_events[g] * scale / group_risk[g];
    out.time.push_back(group_time[g]);
    out.s0.push_back(std::exp(-cumulative));
  }
  return out;
}

BaselineSurvival breslow_baseline(const CoxModel& model, const Cohort& train) {
  SurvivalData data;
  try {
    data = survival_data(train, model.covariate_names, model.endpoint, model.normalization);
  } catch (const Error& e) {
    throw Error(ErrorKind::ModelDataMismatch, std::string("cohort does not fit the model: ") + e.what());
  }
  if (!model.train_fingerprint.empty() && data_fingerprint(data) != model.train_fingerprint) {
    throw Error(ErrorKind::ModelDataMismatch,
                "cohort fingerprint " + data_fingerprint(data) +
                    " differs from the model's training fingerprint " + model.train_fingerprint);
  }
  return breslow_baseline(model.beta, data);
}

ProgressionEstimate progression_at(const BaselineSurvival& baseline, double linear_predictor,
                                   double horizon_years) {
  if (!(horizon_years >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "prediction horizon must be nonnegative");
  }
  const double s0 = baseline.survival_at(horizon_years);
  ProgressionEstimate out;
  out.probability = 1.0 - std::pow(s0, std::exp(linear_predictor));
  out.extrapolated = baseline.extrapolated(horizon_years);
  return out;
}

ProgressionEstimate predict_progression(const CoxModel& model, const BaselineSurvival& baseline,
                                        std::span<const double> standardized_covariates,
                                        double horizon_years) {
  return progression_at(baseline, model.linear_predictor(standardized_covariates), horizon_years);
}

}  // namespace prognos
