#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "prognos/cohort.hpp"

namespace prognos {

struct KMKnot {
  double time = 0.0;
  double survival = 1.0;
  std::size_t at_risk = 0;
  std::size_t events = 0;
};

/// Product-limit estimate with knots at the distinct event times.
struct KMCurve {
  std::vector<KMKnot> knots;

  /// S(t), right-continuous.
  double survival_at(double t) const;
  /// S(t-), the value just before t.
  double survival_before(double t) const;
};

KMCurve kaplan_meier(std::span<const double> time, std::span<const std::uint8_t> event);

/// Predicted survival probability for subject i at time t.
using SurvivalPredictor = std::function<double(std::size_t subject, double t)>;

struct BrierCurve {
  std::vector<double> grid;
  std::vector<double> scores;
  /// Set when the censoring survival reached zero and later grid points were dropped.
  bool truncated = false;
  std::vector<std::string> warnings;
};

/// Inverse-probability-of-censoring weighted Brier score (Graf et al.) on a time grid. The
/// censoring distribution G is the Kaplan-Meier estimate with censorings as events.
/// Throws GridOutOfRange for grid points outside [0, max follow-up].
BrierCurve brier_curve(const SurvivalPredictor& predicted_survival,
                       std::span<const double> time, std::span<const std::uint8_t> event,
                       std::span<const double> grid);

/// Predicted progression probability for subject i at time t.
using ProgressionPredictor = std::function<double(std::size_t subject, double t)>;

struct CalibrationRow {
  int group = 0;
  double time = 0.0;
  double observed = 0.0;   // 1 - KM survival
  double predicted = 0.0;  // mean predicted progression
};

struct CalibrationTable {
  std::vector<CalibrationRow> rows;
  std::vector<int> empty_groups;
};

/// Observed (Kaplan-Meier) versus mean predicted progression per group. Groups with no members
/// are skipped and listed in `empty_groups`.
CalibrationTable calibration_by_group(std::span<const int> group_of, std::span<const double> time,
                                      std::span<const std::uint8_t> event,
                                      const ProgressionPredictor& predicted_progression,
                                      std::span<const double> grid, std::span<const int> groups);

CalibrationTable calibration_by_group(const Cohort& cohort, Endpoint endpoint,
                                      const std::function<int(const Participant&)>& group_fn,
                                      const ProgressionPredictor& predicted_progression,
                                      std::span<const double> grid, std::span<const int> groups);

}  // namespace prognos
