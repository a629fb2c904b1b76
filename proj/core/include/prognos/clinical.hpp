#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/cohort.hpp"

namespace prognos {

/// Person-level Simplified Severity Scale (0-4) from both eyes' drusen and pigment grades.
/// One point per eye with large drusen, one per eye with pigmentary abnormalities; with the
/// bilateral-medium modifier, one point when both eyes have medium drusen and neither has large.
int sss_score(const EyeGrade& left, const EyeGrade& right, bool modifier_bilateral_medium = true);

/// Five-year late-AMD risk per severity score.
class RiskTable {
 public:
  /// Default table: 0.5%, 3%, 12%, 25%, 50% for scores 0..4.
  RiskTable();
  /// Throws InvalidArgument unless the entries lie in [0,1] and strictly increase.
  explicit RiskTable(const std::array<double, 5>& entries);

  /// Reads {"0":0.005,"1":0.03,"2":0.12,"3":0.25,"4":0.50}.
  static RiskTable from_json(std::string_view json_text);
  std::string to_json() const;

  const std::array<double, 5>& entries() const noexcept { return entries_; }

 private:
  std::array<double, 5> entries_;
};

struct SSSResult {
  int score = 0;
  double five_year_risk = 0.0;
};

/// Throws ScoreOutOfRange for scores outside 0..4.
double sss_risk(int score, const RiskTable& table = RiskTable());

SSSResult sss_assess(const EyeGrade& left, const EyeGrade& right, const RiskTable& table = RiskTable(),
                     bool modifier_bilateral_medium = true);

/// Covariate names of the calculator-style model, in vector order.
std::vector<std::string> calculator_covariate_names(bool with_genotype);

/// Drusen level per eye (0/1/2), pigment per eye (0/1), age, former and current smoking
/// indicators, then CFH and ARMS2 allele counts when requested. Throws MissingGenotype.
std::vector<double> calculator_covariates(const Participant& participant, bool with_genotype);

}  // namespace prognos
