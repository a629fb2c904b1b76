#include "prognos/bootstrap.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "prognos/errors.hpp"

namespace prognos {

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::mt19937_64 replicate_stream(std::uint64_t seed, std::size_t replicate) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replicate),
                    static_cast<std::uint32_t>(static_cast<std::uint64_t>(replicate) >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

BootstrapResult bootstrap_ci(std::size_t n, const ResampleMetric& metric,
                             const BootstrapOptions& options) {
  if (n == 0) throw Error(ErrorKind::EmptyInput, "bootstrap needs at least one observation");
  if (options.replicates < 2) {
    throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto point = metric(all);
  if (!point) {
    throw Error(ErrorKind::DegenerateResample, "statistic is undefined on the full data");
  }

  BootstrapResult result;
  result.point = *point;
  result.replicates.assign(options.replicates, 0.0);
  std::vector<std::size_t> redraws(options.replicates, 0);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    std::vector<std::size_t> indices(n);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t b = next++; b < options.replicates; b = next++) {
      try {
        auto rng = replicate_stream(options.seed, b);
        for (std::size_t attempt = 0;; ++attempt) {
          if (attempt > options.max_redraws) {
            throw Error(ErrorKind::DegenerateResample,
                        "statistic undefined on " + std::to_string(attempt) +
                            " consecutive resamples of replicate " + std::to_string(b));
          }
          for (auto& idx : indices) idx = pick(rng);
          if (auto value = metric(indices)) {
            result.replicates[b] = *value;
            redraws[b] = attempt;
            break;
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = options.replicates;
      }
    }
  };

  unsigned threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                          : options.threads;
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, options.replicates));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  result.redraws = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
  result.lo95 = percentile(result.replicates, 0.025);
  result.hi95 = percentile(result.replicates, 0.975);
  return result;
}

}  // namespace prognos
