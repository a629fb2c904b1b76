#include "prognos/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include "prognos/errors.hpp"

namespace prognos {

namespace {

double weibull_time(double u, double scale, double shape, double lp) {
  return std::pow(-std::log(u) / (scale * std::exp(lp)), 1.0 / shape);
}

double open_unit(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double u = unit(rng);
  while (u <= 0.0) u = unit(rng);
  return u;
}

}  // namespace

SurvivalData simulate_cox(const CoxSimulationSpec& spec) {
  if (spec.n == 0 || spec.beta.empty()) {
    throw Error(ErrorKind::InvalidArgument, "simulation needs n > 0 and at least one covariate");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(spec.n);
  const auto p = static_cast<Eigen::Index>(spec.beta.size());

  SurvivalData data;
  data.x.resize(n, p);
  data.time.resize(n);
  data.event.resize(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double lp = 0.0;
    for (Eigen::Index j = 0; j < p; ++j) {
      data.x(i, j) = normal(rng);
      lp += spec.beta[static_cast<std::size_t>(j)] * data.x(i, j);
    }
    double t = weibull_time(open_unit(rng), spec.weibull_scale, spec.weibull_shape, lp);
    double c = spec.censoring_rate > 0.0 ? -std::log(open_unit(rng)) / spec.censoring_rate
                                         : std::numeric_limits<double>::infinity();
    if (spec.time_grid > 0.0) {
      t = std::ceil(t / spec.time_grid) * spec.time_grid;
      c = std::ceil(c / spec.time_grid) * spec.time_grid;
    }
    data.event[static_cast<std::size_t>(i)] = t <= c ? 1 : 0;
    data.time(i) = std::min(t, c);
  }
  return data;
}

SyntheticCohort simulate_cohort(const SyntheticCohortSpec& spec) {
  if (spec.n == 0) throw Error(ErrorKind::InvalidArgument, "simulation needs n > 0");
  if (spec.with_features && spec.planted_feature >= kDeepFeatureCount) {
    throw Error(ErrorKind::InvalidArgument, "planted feature index is beyond the feature block");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::discrete_distribution<int> smoking({0.45, 0.45, 0.10});
  std::discrete_distribution<int> cfh({0.40, 0.45, 0.15});
  std::discrete_distribution<int> arms2({0.60, 0.33, 0.07});

  SyntheticCohort out;
  out.cohort.participants.reserve(spec.n);
  out.true_linear_predictor.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    Participant p;
    char id[16];
    std::snprintf(id, sizeof id, "S%05zu", i + 1);
    p.id = id;
    const double severity = normal(rng);
    p.age = std::clamp(70.0 + 6.0 * normal(rng), 55.0, 90.0);
    p.smoking = static_cast<Smoking>(smoking(rng));
    p.genotype.cfh = static_cast<Cfh>(cfh(rng));
    p.genotype.arms2 = static_cast<Arms2>(arms2(rng));
    p.genotype.grs = normal(rng);

    for (EyeGrade* eye : {&p.left_eye, &p.right_eye}) {
      const double drusen_signal = severity + 0.7 * normal(rng);
      eye->drusen = drusen_signal > 0.8    ? Drusen::Large
                    : drusen_signal > -0.3 ? Drusen::Medium
                                           : Drusen::NoneSmall;
      eye->pigment = severity + 0.8 * normal(rng) > 0.6 ? Pigment::Present : Pigment::Absent;
    }

    if (spec.with_features) {
      std::vector<double> features(kDeepFeatureCount);
      for (double& f : features) f = normal(rng);
      features[spec.planted_feature] = severity;
      p.deep_features = std::move(features);
    }

    const double lp = spec.severity_log_hr * severity + spec.age_log_hr * (p.age - 70.0) +
                      spec.grs_log_hr * *p.genotype.grs;
    const double event_time = weibull_time(open_unit(rng), spec.weibull_scale, spec.weibull_shape, lp);
    const double follow_up = spec.follow_up_min + (spec.follow_up_max - spec.follow_up_min) * unit(rng);
    const bool progressed = event_time <= follow_up;
    const double time = std::min(event_time, follow_up);
    const bool is_ga = unit(rng) < spec.ga_fraction;
    const bool central = is_ga && unit(rng) < spec.central_ga_fraction;

    p.outcomes[Endpoint::LateAmd] = {time, progressed};
    // Subtype endpoints treat the other subtype as censoring at its onset.
    p.outcomes[Endpoint::Ga] = {time, progressed && is_ga};
    p.outcomes[Endpoint::Nv] = {time, progressed && !is_ga};
    p.outcomes[Endpoint::LateAmdCentralGa] = {time, progressed && (!is_ga || central)};

    out.true_linear_predictor.push_back(lp);
    out.cohort.participants.push_back(std::move(p));
  }
  return out;
}

}  // namespace prognos
