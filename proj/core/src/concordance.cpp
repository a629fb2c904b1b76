#include "prognos/concordance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "prognos/errors.hpp"

namespace prognos {

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}

  void add(std::size_t index) {
    for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Count of inserted indices < index.
  std::uint64_t prefix(std::size_t index) const {
    std::uint64_t total = 0;
    for (std::size_t i = index; i > 0; i -= i & (~i + 1)) total += tree_[i];
    return total;
  }

 private:
  std::vector<std::uint64_t> tree_;
};

}  // namespace

ConcordanceResult concordance(std::span<const double> risk, std::span<const double> time,
                              std::span<const std::uint8_t> event,
                              std::optional<double> horizon_years) {
  const std::size_t n = risk.size();
  if (time.size() != n || event.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "risk, time and event vectors have lengths " +
                                               std::to_string(n) + ", " +
                                               std::to_string(time.size()) + ", " +
                                               std::to_string(event.size()));
  }
  std::vector<double> t(time.begin(), time.end());
  std::vector<std::uint8_t> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(risk[i]) || !std::isfinite(time[i])) {
      throw Error(ErrorKind::NonFiniteInput, "non-finite risk or time at index " + std::to_string(i));
    }
    e[i] = event[i] != 0 ? 1 : 0;
    if (horizon_years && t[i] > *horizon_years) {
      t[i] = *horizon_years;
      e[i] = 0;
    }
  }

  std::vector<double> levels(risk.begin(), risk.end());
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  std::vector<std::size_t> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    rank[i] = static_cast<std::size_t>(
        std::lower_bound(levels.begin(), levels.end(), risk[i]) - levels.begin());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return t[a] > t[b]; });

  ConcordanceResult out;
  out.horizon_years = horizon_years;
  Fenwick later(levels.size());
  std::uint64_t later_count = 0;
  std::vector<std::size_t> censored_ranks;

  std::size_t g = 0;
  while (g < n) {
    std::size_t end = g;
    censored_ranks.clear();
    while (end < n && t[order[end]] == t[order[g]]) {
      if (!e[order[end]]) censored_ranks.push_back(rank[order[end]]);
      ++end;
    }
    std::sort(censored_ranks.begin(), censored_ranks.end());
    for (std::size_t k = g; k < end; ++k) {
      const std::size_t i = order[k];
      if (!e[i]) continue;
      const std::size_t r = rank[i];
      const auto c_lo = std::lower_bound(censored_ranks.begin(), censored_ranks.end(), r);
      const auto c_hi = std::upper_bound(censored_ranks.begin(), censored_ranks.end(), r);
      const std::uint64_t below = later.prefix(r) + static_cast<std::uint64_t>(c_lo - censored_ranks.begin());
      const std::uint64_t equal = (later.prefix(r + 1) - later.prefix(r)) +
                                  static_cast<std::uint64_t>(c_hi - c_lo);
      out.comparable_pairs += later_count + censored_ranks.size();
      out.concordant_pairs += below;
      out.tied_risk_pairs += equal;
    }
    for (std::size_t k = g; k < end; ++k) later.add(rank[order[k]]);
    later_count += end - g;
    g = end;
  }

  out.c = out.comparable_pairs > 0 ? out.concordant() / static_cast<double>(out.comparable_pairs)
                                   : 0.5;
  return out;
}

}  // namespace prognos
