#pragma once

#include <cstdint>
#include <vector>

#include "prognos/cohort.hpp"
#include "prognos/cox.hpp"

namespace prognos {

/// Proportional-hazards data with standard-normal covariates, a Weibull baseline
/// h0(t) = scale * shape * t^(shape-1) and independent exponential censoring.
struct CoxSimulationSpec {
  std::size_t n = 1000;
  std::vector<double> beta{0.5};
  double weibull_shape = 1.5;
  double weibull_scale = 0.1;
  /// Exponential censoring rate; 0 disables censoring.
  double censoring_rate = 0.05;
  /// Times are rounded up to multiples of this (0 keeps them continuous).
  double time_grid = 0.0;
  std::uint64_t seed = 1;
};

SurvivalData simulate_cox(const CoxSimulationSpec& spec);

/// Synthetic participants whose progression hazard follows a known Cox model. A latent severity
/// drives the hazard; it is exposed as one deep feature (the planted feature) and, noisily, as
/// drusen and pigment grades, so severity-scale groups carry a risk gradient.
struct SyntheticCohortSpec {
  std::size_t n = 2000;
  std::uint64_t seed = 42;
  bool with_features = true;
  std::size_t planted_feature = 7;
  /// Log hazard ratio per unit of latent severity (standard normal).
  double severity_log_hr = 1.0986122886681098;  // ln 3
  double age_log_hr = 0.0;
  double grs_log_hr = 0.0;
  double weibull_shape = 1.2;
  double weibull_scale = 0.06;
  /// Share of late-AMD events that are geographic atrophy (the rest are neovascular).
  double ga_fraction = 0.55;
  /// Share of GA events that involve the central macula.
  double central_ga_fraction = 0.7;
  double follow_up_min = 2.0;
  double follow_up_max = 12.0;
};

struct SyntheticCohort {
  Cohort cohort;
  /// True linear predictor of each participant's late-AMD hazard.
  std::vector<double> true_linear_predictor;
};

SyntheticCohort simulate_cohort(const SyntheticCohortSpec& spec);

}  // namespace prognos
