#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "prognos/cohort.hpp"
#include "prognos/cox.hpp"

namespace prognos {

/// Baseline survival S0(t) as a right-continuous step function. S0 = 1 before the first knot.
struct BaselineSurvival {
  std::vector<double> time;
  std::vector<double> s0;

  bool empty() const noexcept { return time.empty(); }
  double last_time() const noexcept { return time.empty() ? 0.0 : time.back(); }
  double survival_at(double t) const;
  /// True when t lies past the last knot, where the step function is clamped.
  bool extrapolated(double t) const noexcept { return !time.empty() && t > time.back(); }

  friend bool operator==(const BaselineSurvival&, const BaselineSurvival&) = default;
};

/// Breslow cumulative-hazard baseline at the given coefficients.
BaselineSurvival breslow_baseline(const Eigen::VectorXd& beta, const SurvivalData& data);

/// Baseline for a fitted model on its own training cohort. Throws ModelDataMismatch when the
/// cohort is not the one the model was fitted on.
BaselineSurvival breslow_baseline(const CoxModel& model, const Cohort& train);

struct ProgressionEstimate {
  double probability = 0.0;
  bool extrapolated = false;
};

/// 1 - S0(t)^exp(lp).
ProgressionEstimate progression_at(const BaselineSurvival& baseline, double linear_predictor,
                                   double horizon_years);

/// Progression probability for standardized covariates.
ProgressionEstimate predict_progression(const CoxModel& model, const BaselineSurvival& baseline,
                                        std::span<const double> standardized_covariates,
                                        double horizon_years);

struct HorizonRisk {
  int horizon_years = 0;
  double probability = 0.0;
  bool extrapolated = false;
};

struct RiskProfile {
  std::map<Endpoint, std::vector<HorizonRisk>> endpoints;
};

inline constexpr int kMinHorizon = 1;
inline constexpr int kMaxHorizon = 12;

}  // namespace prognos
