// Acceptance suite: one PASS/FAIL line per headline criterion, tolerances pinned below.
// Exit status is nonzero when any criterion fails.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "prognos/bootstrap.hpp"
#include "prognos/clinical.hpp"
#include "prognos/concordance.hpp"
#include "prognos/covariates.hpp"
#include "prognos/errors.hpp"
#include "prognos/lasso.hpp"
#include "prognos/model_io.hpp"
#include "prognos/simulate.hpp"
#include "prognos/survival_curves.hpp"
#include "support.hpp"

using namespace prognos;
namespace fs = std::filesystem;

namespace {

constexpr double kRecoverySe = 3.0;
constexpr double kRecoverySeconds = 10.0;
constexpr double kDerivativeRel = 1e-6;
constexpr double kGridTol = 1e-3;
constexpr double kTieFreeTol = 1e-10;
constexpr double kKktRel = 1e-5;
constexpr double kLassoUnpenalizedTol = 1e-3;
constexpr double kBrierOracleTol = 1e-12;
constexpr double kEndToEndMargin = 0.02;
constexpr double kRoundTripTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s  %-28s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c);
  return buf;
}

double rel_err(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
}

Outcome cox_recovery() {
  const std::vector<double> truth{0.5, -0.5, 1.0, 0.0, 0.25};
  double worst_z = 0.0, slowest = 0.0, censored = 0.0;
  int ok = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CoxSimulationSpec spec;
    spec.n = 5000;
    spec.beta = truth;
    spec.weibull_shape = 1.5;
    spec.weibull_scale = 0.1;
    spec.censoring_rate = 0.08;
    spec.seed = seed;
    const auto data = simulate_cox(spec);
    censored += 1.0 - static_cast<double>(data.event_count()) / 5000.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto fit = fit_cox(data);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    slowest = std::max(slowest, secs);
    double z_max = 0.0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const auto k = static_cast<Eigen::Index>(j);
      z_max = std::max(z_max, std::abs(fit.beta(k) - truth[j]) / std::sqrt(fit.info_inverse(k, k)));
    }
    worst_z = std::max(worst_z, z_max);
    if (fit.converged && z_max <= kRecoverySe && secs < kRecoverySeconds) ++ok;
  }
  return {ok == 10, fmt("%.0f/10 seeds; worst |b-truth|/se %.2f; slowest fit %.3f s", ok, worst_z, slowest) +
                        fmt("; censored %.1f%%", 10.0 * censored)};
}

Outcome derivatives() {
  std::mt19937_64 rng(2024);
  double worst_g = 0.0, worst_h = 0.0;
  int instances = 0;
  for (int k = 0; k < 50; ++k) {
    const int n = 10 + k % 41;
    const int p = 1 + k % 4;
    const auto d = oracle::random_instance(rng, n, p, k % 2 == 0);
    std::normal_distribution<double> normal(0.0, 0.5);
    Eigen::VectorXd beta(p);
    for (int j = 0; j < p; ++j) beta(j) = normal(rng);
    for (TieMethod ties : {TieMethod::Breslow, TieMethod::Efron}) {
      const bool efron = ties == TieMethod::Efron;
      const auto pl = partial_loglik(beta, d, ties);
      const Eigen::VectorXd fd_g = oracle::fd_gradient(beta, d.x, d.time, d.event, efron);
      const Eigen::MatrixXd fd_h = oracle::fd_jacobian(
          beta, [&](const Eigen::VectorXd& b) { return partial_loglik(b, d, ties).gradient; });
      worst_g = std::max(worst_g, rel_err(pl.gradient, fd_g));
      worst_h = std::max(worst_h, rel_err(pl.hessian, fd_h));
      ++instances;
    }
  }
  return {worst_g < kDerivativeRel && worst_h < kDerivativeRel,
          fmt("%.0f instance/tie pairs; max rel err gradient %.2e, hessian %.2e", instances, worst_g, worst_h)};
}

Outcome grid_agreement() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto d = oracle::random_instance(rng, 30 + 2 * k, 1, k % 2 == 1);
    const bool efron = k % 4 < 2;
    CoxFitOptions o;
    o.ties = efron ? TieMethod::Efron : TieMethod::Breslow;
    const auto fit = fit_cox(d, o);
    const double grid = oracle::grid_argmax(d.x, d.time, d.event, efron);
    worst = std::max(worst, std::abs(fit.beta(0) - grid));
  }
  return {worst <= kGridTol, fmt("20 instances; max |newton - grid| %.2e", worst)};
}

Outcome concordance_oracle() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int mismatches = 0, runs = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 2 + static_cast<std::size_t>(k * 2) % 199;
    std::vector<double> risk(n), time(n);
    std::vector<std::uint8_t> event(n);
    for (std::size_t i = 0; i < n; ++i) {
      risk[i] = k % 3 == 0 ? std::floor(4 * unit(rng)) : unit(rng);
      time[i] = k % 2 == 0 ? std::ceil(8 * unit(rng)) : 8 * unit(rng);
      event[i] = unit(rng) < 0.65;
    }
    for (std::optional<double> h : {std::optional<double>{}, std::optional<double>{3.0}, std::optional<double>{5.5}}) {
      const auto fast = concordance(risk, time, event, h);
      const auto slow = oracle::brute_concordance(risk, time, event, h);
      ++runs;
      if (fast.comparable_pairs != slow.comparable || fast.concordant_pairs != slow.concordant ||
          fast.tied_risk_pairs != slow.tied || fast.c != slow.c()) {
        ++mismatches;
      }
    }
  }
  const std::vector<double> t{1, 2, 3};
  const std::vector<std::uint8_t> e{1, 1, 1};
  const double c1 = concordance(std::vector<double>{3, 2, 1}, t, e).c;
  const double c0 = concordance(std::vector<double>{1, 2, 3}, t, e).c;
  const double chalf = concordance(std::vector<double>{1, 1, 1}, t, e).c;
  const bool analytic = c1 == 1.0 && c0 == 0.0 && chalf == 0.5;
  return {mismatches == 0 && analytic,
          fmt("%.0f/%.0f runs exact; analytic cases ", runs - mismatches, runs) +
              (analytic ? "c=1, 0, 0.5 exact" : "WRONG")};
}

Outcome efron_equals_breslow() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto d = oracle::random_instance(rng, 40 + 5 * k, 1 + k % 4, false);
    CoxFitOptions b, e;
    b.ties = TieMethod::Breslow;
    e.ties = TieMethod::Efron;
    worst = std::max(worst, (fit_cox(d, b).beta - fit_cox(d, e).beta).cwiseAbs().maxCoeff());
  }
  return {worst <= kTieFreeTol, fmt("20 tie-free instances; max coefficient gap %.2e", worst)};
}

Outcome lasso() {
  int kkt_violations = 0, checked = 0;
  bool zeros = true;
  double worst_unpen = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CoxSimulationSpec spec;
    spec.n = 300;
    spec.beta = {0.8, 0.0, -0.6, 0.0, 0.3};
    spec.seed = seed;
    const auto d = simulate_cox(spec);
    const double m = static_cast<double>(d.event_count());
    const auto path = lasso_cox_path(d);
    zeros = zeros && path.coefficients[0].cwiseAbs().maxCoeff() == 0.0;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const Eigen::VectorXd score = cox_score(path.coefficients[k], d);
      const double lam = path.lambdas[k];
      for (Eigen::Index j = 0; j < d.cols(); ++j) {
        const double b = path.coefficients[k](j);
        const bool ok = b != 0.0 ? std::abs(score(j) - m * lam * (b > 0 ? 1.0 : -1.0)) < kKktRel * m
                                 : std::abs(score(j)) <= m * lam * (1.0 + kKktRel);
        ++checked;
        if (!ok) ++kkt_violations;
      }
    }
    LassoOptions fine;
    fine.lambda_min_ratio = 1e-4;
    fine.tol = 1e-10;
    const auto long_path = lasso_cox_path(d, fine);
    CoxFitOptions breslow;
    breslow.ties = TieMethod::Breslow;
    const auto fit = fit_cox(d, breslow);
    worst_unpen = std::max(worst_unpen, (long_path.coefficients.back() - fit.beta).cwiseAbs().maxCoeff());
  }
  return {kkt_violations == 0 && zeros && worst_unpen <= kLassoUnpenalizedTol,
          fmt("KKT %.0f/%.0f conditions hold; ", checked - kkt_violations, checked) +
              (zeros ? "lambda_max exact zeros; " : "lambda_max NOT zero; ") +
              fmt("smallest lambda (ratio 1e-4) vs unpenalized %.2e", worst_unpen)};
}

Outcome km_and_brier() {
  bool exact = true;
  // {1 event, 2 censored, 3 event}: S(1) = 2/3 and the last subject alone is at risk at 3, so
  // S(3) = 0. One more subject censored after 3 gives the halving step: S(3) = 3/4 * 1/2.
  const auto km3 = kaplan_meier(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{1, 0, 1});
  const auto km4 = kaplan_meier(std::vector<double>{1, 2, 3, 4}, std::vector<std::uint8_t>{1, 0, 1, 0});
  exact = exact && km3.survival_at(1.0) == 2.0 / 3.0 && km3.survival_at(3.0) == 0.0;
  exact = exact && km4.survival_at(3.0) == 3.0 / 8.0;

  const std::vector<double> tt{1, 2, 3, 4, 5};
  const std::vector<std::uint8_t> all(5, 1);
  const std::vector<double> grid{0.5, 1.5, 2.5, 3.5, 4.5};
  const auto perfect = brier_curve([&](std::size_t i, double s) { return tt[i] > s ? 1.0 : 0.0; }, tt, all, grid);
  const auto half = brier_curve([](std::size_t, double) { return 0.5; }, tt, all, grid);
  for (double s : perfect.scores) exact = exact && s == 0.0;
  for (double s : half.scores) exact = exact && s == 0.25;

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    std::vector<double> time(100), rate(100);
    std::vector<std::uint8_t> event(100);
    for (std::size_t i = 0; i < 100; ++i) {
      time[i] = 10.0 * unit(rng);
      event[i] = unit(rng) < 0.6;
      rate[i] = 0.05 + 0.3 * unit(rng);
    }
    auto s = [&](std::size_t i, double at) { return std::exp(-rate[i] * at); };
    const std::vector<double> g{0.5, 1.0, 2.0, 3.0, 4.5, 6.0};
    const auto curve = brier_curve(s, time, event, g);
    for (std::size_t j = 0; j < curve.scores.size(); ++j) {
      worst = std::max(worst, std::abs(curve.scores[j] - oracle::graf_brier(s, time, event, g[j])));
    }
  }
  return {exact && worst <= kBrierOracleTol,
          std::string(exact ? "analytic cases exact" : "analytic cases WRONG") +
              fmt("; IPCW vs literal Graf sum max gap %.2e", worst)};
}

Outcome bootstrap_determinism() {
  SyntheticCohortSpec spec;
  spec.n = 400;
  spec.with_features = false;
  const auto sim = simulate_cohort(spec);
  std::vector<double> risk = sim.true_linear_predictor, time;
  std::vector<std::uint8_t> event;
  for (const auto& p : sim.cohort.participants) {
    time.push_back(p.outcomes.at(Endpoint::LateAmd).time_years);
    event.push_back(p.outcomes.at(Endpoint::LateAmd).event);
  }
  auto c_at = [&](std::optional<double> h) {
    return [&, h](std::span<const std::size_t> idx) -> std::optional<double> {
      std::vector<double> r, t;
      std::vector<std::uint8_t> e;
      for (auto i : idx) {
        r.push_back(risk[i]);
        t.push_back(time[i]);
        e.push_back(event[i]);
      }
      const auto c = concordance(r, t, e, h);
      if (c.degenerate()) return std::nullopt;
      return c.c;
    };
  };
  auto text = [](const BootstrapResult& r) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", r.point, r.lo95, r.hi95);
    return std::string(buf);
  };
  bool identical = true, inside = true;
  int metrics = 0;
  for (std::optional<double> h : {std::optional<double>{2.0}, std::optional<double>{5.0}, std::optional<double>{}}) {
    BootstrapOptions o;
    o.replicates = 200;
    o.seed = 42;
    const auto a = bootstrap_ci(risk.size(), c_at(h), o);
    const auto b = bootstrap_ci(risk.size(), c_at(h), o);
    o.threads = 4;
    const auto c = bootstrap_ci(risk.size(), c_at(h), o);
    identical = identical && text(a) == text(b) && text(a) == text(c) && a.replicates == c.replicates;
    inside = inside && a.lo95 <= a.point && a.point <= a.hi95;
    ++metrics;
  }
  return {identical && inside,
          fmt("B=200 on %.0f C-statistics; ", metrics) + (identical ? "byte-identical over runs and 1/4 threads; " : "NOT identical; ") +
              (inside ? "points inside CIs" : "point OUTSIDE CI")};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(PROGNOS_CLI) + " " + args + " >>" + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw std::runtime_error("'prognos " + args + "' failed; see " + log.string());
  }
}

// CSV fields; double quotes protect embedded commas.
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.emplace_back();
    } else {
      out.back() += ch;
    }
  }
  return out;
}

Outcome end_to_end(const fs::path& work) {
  // Generator oracle: brute-force C of the true linear predictor on the same test split.
  SyntheticCohortSpec spec;  // n=2000, seed 42, HR 3 on the planted feature
  const auto sim = simulate_cohort(spec);
  std::map<std::string, double> true_lp;
  for (std::size_t i = 0; i < sim.cohort.size(); ++i) true_lp[sim.cohort.participants[i].id] = sim.true_linear_predictor[i];
  const auto split = split_cohort(sim.cohort, {}, 42);
  std::vector<double> risk, time;
  std::vector<std::uint8_t> event;
  for (const auto& p : split.test.participants) {
    risk.push_back(true_lp.at(p.id));
    time.push_back(p.outcomes.at(Endpoint::LateAmd).time_years);
    event.push_back(p.outcomes.at(Endpoint::LateAmd).event);
  }
  const double oracle_c = oracle::brute_concordance(risk, time, event, 5.0).c();

  const auto data = work / "cohort.csv";
  const auto model = work / "models" / "manifest.json";
  const auto out = work / "report";
  const auto log = work / "cli.log";
  run_cli("simulate --out " + data.string() + " --n 2000 --seed 42 --hazard-ratio 3", log);
  run_cli("train --data " + data.string() + " --model " + model.string() + " --endpoint all", log);
  run_cli("eval --data " + data.string() + " --model " + model.string() + " --horizons 1-5 --out " + out.string(), log);

  double fitted_c = -1.0;
  std::istringstream conc(slurp(out / "concordance_late_amd.csv"));
  std::string line;
  std::getline(conc, line);
  while (std::getline(conc, line)) {
    const auto cells = split_line(line);
    if (!cells.empty() && cells[0] == "5") fitted_c = std::stod(cells[1]);
  }

  const auto table = slurp(out / "table.csv");
  std::vector<std::string> rows;
  std::istringstream tin(table);
  while (std::getline(tin, line)) rows.push_back(line);
  bool layout = rows.size() == 4 && rows[0] == "endpoint,model,1,2,3,4,5,all";
  const char* endpoints[] = {"late_amd", "ga", "nv"};
  for (std::size_t r = 1; layout && r < rows.size(); ++r) {
    const auto cells = split_line(rows[r]);
    layout = cells.size() == 8 && cells[0] == endpoints[r - 1] && cells[1] == "Deep features/survival";
  }
  const bool c_ok = fitted_c >= oracle_c - kEndToEndMargin;
  return {c_ok && layout, fmt("5-year C %.4f vs oracle %.4f (floor %.4f); ", fitted_c, oracle_c, oracle_c - kEndToEndMargin) +
                              (layout ? "table layout ok" : "table layout WRONG")};
}

Outcome sss_combinations() {
  std::vector<EyeGrade> grades;
  for (Drusen d : {Drusen::NoneSmall, Drusen::Medium, Drusen::Large}) {
    for (Pigment p : {Pigment::Absent, Pigment::Present}) grades.push_back({d, p});
  }
  auto up = [](const EyeGrade& g) {
    std::vector<EyeGrade> out;
    if (g.drusen != Drusen::Large) out.push_back({static_cast<Drusen>(static_cast<int>(g.drusen) + 1), g.pigment});
    if (g.pigment == Pigment::Absent) out.push_back({g.drusen, Pigment::Present});
    return out;
  };
  int combos = 0, bad = 0;
  for (const auto& l : grades) {
    for (const auto& r : grades) {
      ++combos;
      const int s = sss_score(l, r);
      if (s < 0 || s > 4 || s != sss_score(r, l)) ++bad;
      for (const auto& u : up(l)) bad += sss_score(u, r) < s;
      for (const auto& u : up(r)) bad += sss_score(l, u) < s;
    }
  }
  const bool top = sss_risk(4) == 0.50;
  return {bad == 0 && combos == 36 && top,
          fmt("%.0f combinations, %.0f violations; score 4 risk %.2f", combos, bad, sss_risk(4))};
}

Outcome model_round_trip(const fs::path& work) {
  SyntheticCohortSpec spec;
  spec.n = 1000;
  spec.seed = 11;
  const auto raw = simulate_cohort(spec).cohort;
  std::vector<std::string> names{"f7", "f3", "age", "smoking_former", "smoking_current", "drusen_le", "pig_re"};
  PrognosisModel m;
  m.cox = cox_fit(raw, names, Endpoint::LateAmd);
  m.baseline = breslow_baseline(m.cox, raw);
  save_model(m, (work / "roundtrip.json").string());
  const auto back = load_model((work / "roundtrip.json").string());
  double worst = 0.0;
  int checks = 0;
  for (const auto& p : raw.participants) {
    for (int h = kMinHorizon; h <= kMaxHorizon; ++h) {
      worst = std::max(worst, std::abs(m.progression(p, h).probability - back.progression(p, h).probability));
      ++checks;
    }
  }
  return {worst <= kRoundTripTol, fmt("%.0f predictions at horizons 1-12; max gap %.2e", checks, worst)};
}

}  // namespace

int main() {
  const fs::path work = fs::temp_directory_path() / ("prognos_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(work);

  report("cox-recovery", cox_recovery);
  report("likelihood-derivatives", derivatives);
  report("grid-optimizer-agreement", grid_agreement);
  report("concordance-oracle", concordance_oracle);
  report("efron-equals-breslow", efron_equals_breslow);
  report("lasso-kkt-path", lasso);
  report("km-brier-analytic", km_and_brier);
  report("bootstrap-determinism", bootstrap_determinism);
  report("end-to-end-pipeline", [&] { return end_to_end(work); });
  report("sss-combinations", sss_combinations);
  report("model-round-trip", [&] { return model_round_trip(work); });

  std::error_code ec;
  fs::remove_all(work, ec);
  std::printf("%s: %d criterion(s) failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
