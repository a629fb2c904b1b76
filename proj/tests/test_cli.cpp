#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prognos/errors.hpp"
#include "prognos/model_io.hpp"
#include "prognos/pipeline.hpp"
#include "prognos/service.hpp"
#include "prognos/simulate.hpp"
#include "support.hpp"

using namespace prognos;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Run cli(const std::string& args, const testutil::TempDir& dir) {
  const auto out = dir.file("stdout.txt");
  const auto err = dir.file("stderr.txt");
  const std::string cmd = std::string(PROGNOS_CLI) + " " + args + " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

// One simulated cohort and trained deep-feature model shared by the CLI tests.
class CliFlow : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new testutil::TempDir("cli");
    data_ = dir_->file("cohort.csv");
    model_ = dir_->file("model.json");
    ASSERT_EQ(cli("simulate --out " + data_ + " --n 800 --seed 3", *dir_).code, 0);
    const auto train = cli("train --data " + data_ + " --model " + model_ + " --features deep", *dir_);
    ASSERT_EQ(train.code, 0) << train.err;
  }
  static void TearDownTestSuite() {
    delete dir_;
    dir_ = nullptr;
  }

  static testutil::TempDir* dir_;
  static std::string data_;
  static std::string model_;
};

testutil::TempDir* CliFlow::dir_ = nullptr;
std::string CliFlow::data_;
std::string CliFlow::model_;

}  // namespace

TEST_F(CliFlow, EvalWritesReportsDeterministically) {
  const std::string args = "eval --data " + data_ + " --model " + model_ + " --bootstrap 50 --horizons 1-5";
  const auto a = cli(args + " --out " + dir_->file("ra"), *dir_);
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = cli(args + " --threads 3 --out " + dir_->file("rb"), *dir_);
  ASSERT_EQ(b.code, 0) << b.err;
  for (const char* f : {"table.csv", "concordance_late_amd.csv", "brier_late_amd.csv",
                        "calibration_late_amd.csv"}) {
    const auto left = slurp(fs::path(dir_->file("ra")) / f);
    EXPECT_FALSE(left.empty()) << f;
    EXPECT_EQ(left, slurp(fs::path(dir_->file("rb")) / f)) << f;
  }
  const auto table = lines(slurp(fs::path(dir_->file("ra")) / "table.csv"));
  ASSERT_EQ(table.size(), 2u);
  EXPECT_EQ(table[0], "endpoint,model,1,2,3,4,5,all");
  EXPECT_EQ(table[1].rfind("late_amd,Deep features/survival,", 0), 0u) << table[1];
  EXPECT_EQ(a.out, slurp(fs::path(dir_->file("ra")) / "table.csv"));
}

TEST_F(CliFlow, PredictMatchesServiceBody) {
  const auto model = load_models(model_);
  SyntheticCohortSpec spec;
  spec.n = 1;
  spec.seed = 99;
  const auto subject = simulate_cohort(spec).cohort.participants[0];
  nlohmann::json req;
  req["age"] = subject.age;
  req["smoking"] = std::string(to_string(subject.smoking));
  req["deep_features"] = *subject.deep_features;
  req["horizons"] = {1, 5, 12};
  std::ofstream(dir_->file("subject.json")) << req.dump();
  const auto r = cli("predict --model " + model_ + " --subject " + dir_->file("subject.json"), *dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  PredictionService svc(model);
  const auto http = svc.predict(req.dump());
  ASSERT_EQ(http.status, 200) << http.body;
  EXPECT_EQ(nlohmann::json::parse(r.out), nlohmann::json::parse(http.body));
}

TEST_F(CliFlow, ReportWritesWaldTable) {
  const auto r = cli("report --model " + model_ + " --out " + dir_->file("wald"), *dir_);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto csv = lines(slurp(fs::path(dir_->file("wald")) / "wald_late_amd.csv"));
  ASSERT_GE(csv.size(), 2u);
  EXPECT_NE(csv[0].find("hazard_ratio"), std::string::npos) << csv[0];
}

TEST_F(CliFlow, ErrorExitCodes) {
  EXPECT_EQ(cli("train --data " + data_ + " --model " + dir_->file("x.json") + " --features sss", *dir_).code, 2);
  EXPECT_EQ(cli("eval --data " + data_ + " --model " + model_ + " --horizons 0-3", *dir_).code, 2);
  EXPECT_EQ(cli("eval --data " + dir_->file("missing.csv") + " --model " + model_, *dir_).code, 4);
  EXPECT_EQ(cli("predict --model " + model_ + " --subject '{\"age\":70,\"smoking\":\"never\"}'", *dir_).code, 2);
  EXPECT_EQ(cli("frobnicate", *dir_).code, 2);
  // A model scored against a cohort it was not trained on.
  const auto other = dir_->file("other.csv");
  ASSERT_EQ(cli("simulate --out " + other + " --n 300 --seed 8", *dir_).code, 0);
  const auto mismatch = cli("eval --data " + other + " --model " + model_, *dir_);
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_NE(mismatch.err.find("--split all"), std::string::npos) << mismatch.err;
  EXPECT_EQ(cli("eval --data " + other + " --model " + model_ + " --split all --bootstrap 20 --out " +
                    dir_->file("other_report"),
                *dir_)
                .code,
            0);
}

TEST(Pipeline, DeepFeaturesWithGrsAssemblesCovariates) {
  SyntheticCohortSpec spec;
  spec.n = 700;
  spec.grs_log_hr = 0.3;
  const auto split = split_cohort(simulate_cohort(spec).cohort, {}, 42);
  RunConfig config;
  config.genotype_mode = GenotypeMode::Grs;
  const auto trained = train_endpoint(split.train, split.dev, Endpoint::LateAmd, config);
  const auto& names = trained.model.cox.covariate_names;
  std::size_t features = 0;
  for (const auto& n : names) features += is_feature_covariate(n) ? 1 : 0;
  EXPECT_GE(features, 1u);
  EXPECT_LE(features, 16u);
  EXPECT_EQ(names.size() - features + trained.dropped_covariates.size(), 4u);
  EXPECT_NE(std::find(names.begin(), names.end(), "grs"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "age"), names.end());
  EXPECT_NE(std::find(names.begin(), names.end(), "f7"), names.end());
  ASSERT_TRUE(trained.selection.has_value());
  EXPECT_EQ(trained.selection->lambda_rule.rfind("dev concordance", 0), 0u);
}

TEST(Pipeline, SnpsWithoutGenotypeIsMissingGenotype) {
  SyntheticCohortSpec spec;
  spec.n = 200;
  spec.with_features = false;
  auto cohort = simulate_cohort(spec).cohort;
  cohort.participants[5].genotype.arms2.reset();
  RunConfig config;
  config.feature_mode = FeatureMode::DlGrading;
  config.genotype_mode = GenotypeMode::Snps;
  try {
    train_endpoint(cohort, Cohort{}, Endpoint::LateAmd, config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGenotype);
  }
}

TEST(Pipeline, PerfectSeparationScoresOne) {
  // Risk ordering equals event ordering, so every horizon C is exactly 1.
  Cohort cohort;
  for (int i = 0; i < 40; ++i) {
    auto p = testutil::participant("S" + std::to_string(i), 60.0 + i, Smoking::Never, 0.25 * (40 - i), true);
    p.left_eye.drusen = Drusen::Medium;
    cohort.participants.push_back(p);
  }
  PrognosisModel model;
  model.cox.covariate_names = {"age"};
  model.cox.beta = Eigen::VectorXd::Constant(1, 0.2);
  model.cox.normalization.mean = {80.0};
  model.cox.normalization.sd = {1.0};
  model.cox.normalization.constant = {false};
  model.baseline.time = {1.0, 10.0};
  model.baseline.s0 = {0.9, 0.2};
  model.feature_mode = FeatureMode::DlGrading;
  RunConfig config;
  config.horizons = {1, 2, 5};
  config.bootstrap_b = 30;
  const auto report = evaluate_model(model, cohort, config);
  ASSERT_EQ(report.concordance.size(), 4u);
  for (const auto& row : report.concordance) {
    EXPECT_TRUE(row.defined);
    EXPECT_EQ(row.c, 1.0);
    EXPECT_EQ(row.lo95, 1.0);
    EXPECT_EQ(row.hi95, 1.0);
  }
  EXPECT_EQ(report.concordance.back().horizon, 0);
  const auto table = table_csv({report}, config.horizons);
  EXPECT_EQ(table, "endpoint,model,1,2,5,all\nlate_amd,DL grading/survival,\"100.0(100.0,100.0)\","
                   "\"100.0(100.0,100.0)\",\"100.0(100.0,100.0)\",\"100.0(100.0,100.0)\"\n");
}

TEST(Pipeline, ValidateConfigRejectsBadHorizonsAndBootstrap) {
  RunConfig config;
  config.horizons = {13};
  EXPECT_THROW(validate_config(config), Error);
  config.horizons = {5};
  config.bootstrap_b = 1;
  EXPECT_THROW(validate_config(config), Error);
  config.bootstrap_b = 200;
  config.lambda_se = -1.0;
  EXPECT_THROW(validate_config(config), Error);
}
