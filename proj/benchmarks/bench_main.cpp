#include <benchmark/benchmark.h>

#include <vector>

#include "prognos/bootstrap.hpp"
#include "prognos/concordance.hpp"
#include "prognos/cox.hpp"
#include "prognos/lasso.hpp"
#include "prognos/simulate.hpp"

using namespace prognos;

namespace {

SurvivalData instance(std::size_t n, std::size_t p, double grid = 0.0) {
  CoxSimulationSpec spec;
  spec.n = n;
  spec.beta.assign(p, 0.0);
  spec.beta[0] = 0.7;
  if (p > 2) spec.beta[2] = -0.4;
  spec.time_grid = grid;
  return simulate_cox(spec);
}

std::vector<double> risk_of(const SurvivalData& d) {
  return {d.x.col(0).data(), d.x.col(0).data() + d.rows()};
}

std::vector<double> times_of(const SurvivalData& d) { return {d.time.data(), d.time.data() + d.rows()}; }

}  // namespace

static void BM_PartialLoglik(benchmark::State& state) {
  const auto d = instance(static_cast<std::size_t>(state.range(0)), 10, 0.25);
  const Eigen::VectorXd beta = Eigen::VectorXd::Constant(10, 0.05);
  const auto ties = state.range(1) ? TieMethod::Efron : TieMethod::Breslow;
  for (auto _ : state) benchmark::DoNotOptimize(partial_loglik(beta, d, ties).loglik);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_PartialLoglik)->ArgsProduct({{1000, 4000, 16000}, {0, 1}})->Complexity();

static void BM_FitCox(benchmark::State& state) {
  const auto d = instance(static_cast<std::size_t>(state.range(0)), 20);
  for (auto _ : state) benchmark::DoNotOptimize(fit_cox(d).beta);
}
BENCHMARK(BM_FitCox)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

static void BM_Concordance(benchmark::State& state) {
  const auto d = instance(static_cast<std::size_t>(state.range(0)), 1);
  const auto risk = risk_of(d);
  const auto time = times_of(d);
  for (auto _ : state) benchmark::DoNotOptimize(concordance(risk, time, d.event, 5.0).c);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Concordance)->RangeMultiplier(4)->Range(1 << 10, 1 << 16)->Complexity(benchmark::oNLogN);

// Quadratic pair loop, for comparison with the tree-based count.
static void BM_ConcordancePairs(benchmark::State& state) {
  const auto d = instance(static_cast<std::size_t>(state.range(0)), 1);
  const auto risk = risk_of(d);
  const auto time = times_of(d);
  for (auto _ : state) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < risk.size(); ++i) {
      if (!d.event[i]) continue;
      for (std::size_t j = 0; j < risk.size(); ++j) {
        if (time[j] > time[i] || (time[j] == time[i] && !d.event[j])) {
          den += 1.0;
          num += risk[i] > risk[j] ? 1.0 : (risk[i] == risk[j] ? 0.5 : 0.0);
        }
      }
    }
    benchmark::DoNotOptimize(num / den);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConcordancePairs)->RangeMultiplier(4)->Range(1 << 10, 1 << 14)->Complexity(benchmark::oNSquared);

static void BM_LassoPath(benchmark::State& state) {
  const auto d = instance(2000, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lasso_cox_path(d).size());
}
BENCHMARK(BM_LassoPath)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_BootstrapConcordance(benchmark::State& state) {
  const auto d = instance(2000, 1);
  const auto risk = risk_of(d);
  const auto time = times_of(d);
  const ResampleMetric metric = [&](std::span<const std::size_t> idx) -> std::optional<double> {
    std::vector<double> r, t;
    std::vector<std::uint8_t> e;
    r.reserve(idx.size());
    t.reserve(idx.size());
    e.reserve(idx.size());
    for (auto i : idx) {
      r.push_back(risk[i]);
      t.push_back(time[i]);
      e.push_back(d.event[i]);
    }
    const auto res = concordance(r, t, e);
    if (res.degenerate()) return std::nullopt;
    return res.c;
  };
  BootstrapOptions o;
  o.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(bootstrap_ci(risk.size(), metric, o).point);
}
BENCHMARK(BM_BootstrapConcordance)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_MAIN();
