#include "prognos/survival_curves.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Core>

#include "prognos/cox.hpp"
#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

double KMCurve::survival_at(double t) const {
  auto it = std::upper_bound(knots.begin(), knots.end(), t,
                             [](double value, const KMKnot& k) { return value < k.time; });
  if (it == knots.begin()) return 1.0;
  return std::prev(it)->survival;
}

double KMCurve::survival_before(double t) const {
  auto it = std::lower_bound(knots.begin(), knots.end(), t,
                             [](const KMKnot& k, double value) { return k.time < value; });
  if (it == knots.begin()) return 1.0;
  return std::prev(it)->survival;
}

KMCurve kaplan_meier(std::span<const double> time, std::span<const std::uint8_t> event) {
  if (time.empty()) throw Error(ErrorKind::EmptyInput, "Kaplan-Meier needs at least one subject");
  if (time.size() != event.size()) {
    throw Error(ErrorKind::LengthMismatch, "time and event vectors differ in length");
  }
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  KMCurve curve;
  double survival = 1.0;
  std::size_t at_risk = time.size();
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = time[order[k]];
    std::size_t d = 0;
    std::size_t m = 0;
    while (k + m < order.size() && time[order[k + m]] == t) {
      d += event[order[k + m]] != 0;
      ++m;
    }
    if (d > 0) {
      survival *= static_cast<double>(at_risk - d) / static_cast<double>(at_risk);
      curve.knots.push_back({t, survival, at_risk, d});
    }
    at_risk -= m;
    k += m;
  }
  return curve;
}

BrierCurve brier_curve(const SurvivalPredictor& predicted_survival, std::span<const double> time,
                       std::span<const std::uint8_t> event, std::span<const double> grid) {
  const std::size_t n = time.size();
  if (n == 0) throw Error(ErrorKind::EmptyInput, "Brier score needs at least one subject");
  if (event.size() != n) throw Error(ErrorKind::LengthMismatch, "time and event differ in length");
  const double max_time = *std::max_element(time.begin(), time.end());
  for (std::size_t g = 0; g < grid.size(); ++g) {
    if (!(grid[g] >= 0.0) || grid[g] > max_time) {
      throw Error(ErrorKind::GridOutOfRange, "grid point " + detail::format_double(grid[g]) +
                                                 " lies outside the follow-up range [0, " +
                                                 detail::format_double(max_time) + "]");
    }
    if (g > 0 && grid[g] <= grid[g - 1]) {
      throw Error(ErrorKind::InvalidArgument, "Brier grid must be strictly ascending");
    }
  }

  std::vector<std::uint8_t> censored(n);
  for (std::size_t i = 0; i < n; ++i) censored[i] = event[i] ? 0 : 1;
  const KMCurve censoring = kaplan_meier(time, censored);

  BrierCurve curve;
  for (double t : grid) {
    const double g_t = censoring.survival_at(t);
    if (!(g_t > 0.0)) {
      curve.truncated = true;
      curve.warnings.push_back("censoring survival reaches zero at t=" + detail::format_double(t) +
                               "; grid truncated");
      break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (time[i] <= t && event[i]) {
        const double s = predicted_survival(i, t);
        total += s * s / censoring.survival_before(time[i]);
      } else if (time[i] > t) {
        const double s = predicted_survival(i, t);
        total += (1.0 - s) * (1.0 - s) / g_t;
      }
    }
    curve.grid.push_back(t);
    curve.scores.push_back(total / static_cast<double>(n));
  }
  return curve;
}

CalibrationTable calibration_by_group(std::span<const int> group_of, std::span<const double> time,
                                      std::span<const std::uint8_t> event,
                                      const ProgressionPredictor& predicted_progression,
                                      std::span<const double> grid, std::span<const int> groups) {
  const std::size_t n = time.size();
  if (group_of.size() != n || event.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "group, time and event vectors differ in length");
  }
  CalibrationTable table;
  for (int group : groups) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < n; ++i) {
      if (group_of[i] == group) members.push_back(i);
    }
    if (members.empty()) {
      table.empty_groups.push_back(group);
      continue;
    }
    std::vector<double> t(members.size());
    std::vector<std::uint8_t> e(members.size());
    for (std::size_t k = 0; k < members.size(); ++k) {
      t[k] = time[members[k]];
      e[k] = event[members[k]];
    }
    const KMCurve km = kaplan_meier(t, e);
    for (double at : grid) {
      double predicted = 0.0;
      for (std::size_t i : members) predicted += predicted_progression(i, at);
      predicted /= static_cast<double>(members.size());
      table.rows.push_back({group, at, 1.0 - km.survival_at(at), predicted});
    }
  }
  return table;
}

CalibrationTable calibration_by_group(const Cohort& cohort, Endpoint endpoint,
                                      const std::function<int(const Participant&)>& group_fn,
                                      const ProgressionPredictor& predicted_progression,
                                      std::span<const double> grid, std::span<const int> groups) {
  Eigen::VectorXd time;
  std::vector<std::uint8_t> event;
  endpoint_outcomes(cohort, endpoint, time, event);
  std::vector<int> group_of;
  group_of.reserve(cohort.size());
  for (const auto& p : cohort.participants) group_of.push_back(group_fn(p));
  return calibration_by_group(group_of, std::span<const double>(time.data(), cohort.size()), event,
                              predicted_progression, grid, groups);
}

}  // namespace prognos
