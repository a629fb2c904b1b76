#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace prognos {

/// A statistic evaluated on a resample, given as indices into the original data. Returns
/// nullopt when the statistic is undefined on that resample (the resample is then redrawn).
using ResampleMetric = std::function<std::optional<double>(std::span<const std::size_t> indices)>;

struct BootstrapOptions {
  std::size_t replicates = 200;
  std::uint64_t seed = 42;
  /// Worker threads; 0 uses the hardware concurrency. Results do not depend on this.
  unsigned threads = 1;
  /// Redraw budget per replicate before DegenerateResample is thrown.
  std::size_t max_redraws = 1000;
};

struct BootstrapResult {
  double point = 0.0;
  double lo95 = 0.0;
  double hi95 = 0.0;
  std::size_t redraws = 0;
  std::vector<double> replicates;
};

/// Percentile interval with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

/// Nonparametric bootstrap: each replicate samples n indices with replacement from a random
/// stream seeded by (seed, replicate index), so results are identical for any thread count.
/// With more than one thread the metric is called concurrently.
BootstrapResult bootstrap_ci(std::size_t n, const ResampleMetric& metric,
                             const BootstrapOptions& options = {});

}  // namespace prognos
