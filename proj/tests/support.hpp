#pragma once

// Independent reference implementations used as test oracles. They are written for clarity, not
// speed, and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "prognos/cohort.hpp"
#include "prognos/cox.hpp"

namespace oracle {

struct PairCount {
  std::uint64_t comparable = 0;
  std::uint64_t concordant = 0;
  std::uint64_t tied = 0;

  double c() const {
    return comparable == 0 ? 0.5
                           : (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) /
                                 static_cast<double>(comparable);
  }
};

/// Every ordered pair, after truncating follow-up at the horizon.
inline PairCount brute_concordance(const std::vector<double>& risk, const std::vector<double>& time_in,
                                   const std::vector<std::uint8_t>& event_in,
                                   std::optional<double> horizon = std::nullopt) {
  std::vector<double> time = time_in;
  std::vector<std::uint8_t> event = event_in;
  if (horizon) {
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] > *horizon) {
        time[i] = *horizon;
        event[i] = 0;
      }
    }
  }
  PairCount out;
  for (std::size_t i = 0; i < time.size(); ++i) {
    if (!event[i]) continue;
    for (std::size_t j = 0; j < time.size(); ++j) {
      if (i == j) continue;
      const bool later = time[j] > time[i] || (time[j] == time[i] && !event[j]);
      if (!later) continue;
      ++out.comparable;
      if (risk[i] > risk[j]) {
        ++out.concordant;
      } else if (risk[i] == risk[j]) {
        ++out.tied;
      }
    }
  }
  return out;
}

/// Log partial likelihood from the textbook risk-set formula.
inline double partial_loglik(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                             const Eigen::VectorXd& time, const std::vector<std::uint8_t>& event,
                             bool efron) {
  const Eigen::Index n = x.rows();
  const Eigen::VectorXd eta = x * beta;
  std::vector<double> event_times;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (event[static_cast<std::size_t>(i)]) event_times.push_back(time(i));
  }
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());

  double ll = 0.0;
  for (double t : event_times) {
    double risk_sum = 0.0;
    double tied_sum = 0.0;
    int d = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (time(i) >= t) risk_sum += std::exp(eta(i));
      if (time(i) == t && event[static_cast<std::size_t>(i)]) {
        tied_sum += std::exp(eta(i));
        ll += eta(i);
        ++d;
      }
    }
    for (int l = 0; l < d; ++l) {
      const double frac = efron ? static_cast<double>(l) / d : 0.0;
      ll -= std::log(risk_sum - frac * tied_sum);
    }
  }
  return ll;
}

inline Eigen::VectorXd fd_gradient(const Eigen::VectorXd& beta, const Eigen::MatrixXd& x,
                                   const Eigen::VectorXd& time, const std::vector<std::uint8_t>& event,
                                   bool efron, double h = 1e-5) {
  Eigen::VectorXd g(beta.size());
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    Eigen::VectorXd up = beta, down = beta;
    up(j) += h;
    down(j) -= h;
    g(j) = (partial_loglik(up, x, time, event, efron) - partial_loglik(down, x, time, event, efron)) /
           (2 * h);
  }
  return g;
}

/// Central differences of an analytic gradient give the hessian.
template <typename GradientFn>
Eigen::MatrixXd fd_jacobian(const Eigen::VectorXd& beta, GradientFn gradient, double h = 1e-5) {
  const Eigen::Index p = beta.size();
  Eigen::MatrixXd out(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    Eigen::VectorXd up = beta, down = beta;
    up(j) += h;
    down(j) -= h;
    out.col(j) = (gradient(up) - gradient(down)) / (2 * h);
  }
  return out;
}

/// Graf's IPCW Brier score at t written as a literal sum. G is the censoring product-limit
/// estimate recomputed from scratch for every lookup.
template <typename SurvivalFn>
double graf_brier(SurvivalFn predicted_survival, const std::vector<double>& time,
                  const std::vector<std::uint8_t>& event, double t) {
  const std::size_t n = time.size();
  auto censoring_survival = [&](double s, bool strictly_before) {
    std::vector<double> times;
    for (std::size_t i = 0; i < n; ++i) {
      if (!event[i] && (strictly_before ? time[i] < s : time[i] <= s)) times.push_back(time[i]);
    }
    std::sort(times.begin(), times.end());
    times.erase(std::unique(times.begin(), times.end()), times.end());
    double g = 1.0;
    for (double u : times) {
      double at_risk = 0.0, censored = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (time[i] >= u) at_risk += 1.0;
        if (time[i] == u && !event[i]) censored += 1.0;
      }
      g *= 1.0 - censored / at_risk;
    }
    return g;
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = predicted_survival(i, t);
    if (time[i] <= t && event[i]) {
      total += (0.0 - s) * (0.0 - s) / censoring_survival(time[i], true);
    } else if (time[i] > t) {
      total += (1.0 - s) * (1.0 - s) / censoring_survival(t, false);
    }
  }
  return total / static_cast<double>(n);
}

/// Grid maximizer of a one-covariate partial likelihood over [lo, hi].
inline double grid_argmax(const Eigen::MatrixXd& x, const Eigen::VectorXd& time,
                          const std::vector<std::uint8_t>& event, bool efron, double lo = -3.0,
                          double hi = 3.0, double step = 1e-4) {
  double best = lo;
  double best_ll = -INFINITY;
  const auto steps = static_cast<long>(std::llround((hi - lo) / step));
  Eigen::VectorXd b(1);
  for (long k = 0; k <= steps; ++k) {
    b(0) = lo + static_cast<double>(k) * step;
    const double ll = partial_loglik(b, x, time, event, efron);
    if (ll > best_ll) {
      best_ll = ll;
      best = b(0);
    }
  }
  return best;
}

/// Random survival instance with a chance of tied times.
inline prognos::SurvivalData random_instance(std::mt19937_64& rng, int n, int p, bool allow_ties) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  prognos::SurvivalData d;
  d.x.resize(n, p);
  d.time.resize(n);
  d.event.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) d.x(i, j) = normal(rng);
    double t = -std::log(1.0 - unit(rng)) * 3.0;
    if (allow_ties) t = std::ceil(t);
    d.time(i) = t;
    d.event[static_cast<std::size_t>(i)] = unit(rng) < 0.7 ? 1 : 0;
  }
  d.event[0] = 1;
  return d;
}

}  // namespace oracle

namespace testutil {

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("prognos_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline prognos::Participant participant(const std::string& id, double age, prognos::Smoking smoking,
                                        double time_lateamd, bool event_lateamd) {
  prognos::Participant p;
  p.id = id;
  p.age = age;
  p.smoking = smoking;
  p.outcomes[prognos::Endpoint::LateAmd] = {time_lateamd, event_lateamd};
  return p;
}

}  // namespace testutil
