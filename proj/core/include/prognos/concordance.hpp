#pragma once

#include <cstdint>
#include <optional>
#include <span>

namespace prognos {

struct ConcordanceResult {
  double c = 0.5;
  std::uint64_t comparable_pairs = 0;
  std::uint64_t concordant_pairs = 0;
  std::uint64_t tied_risk_pairs = 0;
  std::optional<double> horizon_years;

  /// Concordant count with tied risks credited one half.
  double concordant() const noexcept {
    return static_cast<double>(concordant_pairs) + 0.5 * static_cast<double>(tied_risk_pairs);
  }
  /// No comparable pairs; c is reported as 0.5.
  bool degenerate() const noexcept { return comparable_pairs == 0; }
};

/// Harrell's C. A pair is comparable when the earlier time is an event and the other subject's
/// time is strictly later, or equal with a censoring. The earlier-event subject should carry the
/// higher risk; tied risks count one half.
///
/// With a horizon, follow-up is first truncated administratively: times past the horizon become
/// censorings at the horizon. Runs in O(n log n).
ConcordanceResult concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const std::uint8_t> event,
                              std::optional<double> horizon_years = std::nullopt);

}  // namespace prognos
