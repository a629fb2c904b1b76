#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "prognos/cox.hpp"

namespace prognos {

struct WaldRow {
  std::string covariate;
  double beta = 0.0;
  double se = 0.0;
  double hazard_ratio = 1.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  double z = 0.0;
  double p = 1.0;
};

inline constexpr double kNormalQuantile975 = 1.96;

/// Two-sided p-value of a standard normal statistic.
double normal_two_sided_p(double z);

WaldRow wald_row(std::string covariate, double beta, double se);

/// Hazard ratios with 95% intervals and Wald tests. Throws NotConverged for unconverged models.
std::vector<WaldRow> wald_report(const CoxModel& model);

/// Fixed-width table in the layout of a multivariate hazard-ratio summary.
std::string format_wald_table(const std::vector<WaldRow>& rows);

/// CSV: covariate,beta,se,hazard_ratio,ci95_low,ci95_high,z,p
std::string wald_csv(const std::vector<WaldRow>& rows);

}  // namespace prognos
