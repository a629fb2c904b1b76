#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prognos/bootstrap.hpp"
#include "prognos/cohort.hpp"
#include "prognos/covariates.hpp"
#include "prognos/cox.hpp"
#include "prognos/lasso.hpp"
#include "prognos/model_io.hpp"
#include "prognos/survival_curves.hpp"

namespace prognos {

enum class Command { Train, Eval, Predict, Report };

std::string_view to_string(Command command) noexcept;

struct RunConfig {
  Command command = Command::Train;
  std::string data_path;
  /// Model file, or manifest when several endpoints are trained or loaded.
  std::string model_path;
  /// Report directory (eval, report).
  std::string out_dir;
  /// Optional regularization path export (train, deep features).
  std::string path_out;
  /// Subject for predict: a JSON file path or an inline JSON object.
  std::string subject;
  std::string column_map_path;
  std::string risk_table_path;

  /// Empty means late AMD for train and every loaded endpoint otherwise.
  std::vector<Endpoint> endpoints;
  FeatureMode feature_mode = FeatureMode::DeepFeatures;
  GenotypeMode genotype_mode = GenotypeMode::None;
  std::vector<int> horizons = default_horizons();
  std::size_t bootstrap_b = 200;
  std::uint64_t seed = 42;
  TieMethod ties = TieMethod::Efron;
  std::optional<double> lambda;
  /// Dev-concordance lambda rule: the largest lambda within this many bootstrap standard errors
  /// of the best dev C. 0 takes the best C itself.
  double lambda_se = 1.0;
  std::size_t max_features = 16;
  SplitRatios ratios;
  /// Train on the train split and evaluate on the test split; when false the whole file is used.
  bool use_split = true;
  unsigned threads = 1;

  static std::vector<int> default_horizons();
};

/// Throws InvalidArgument for horizons outside 1..12 or fewer than 2 bootstrap replicates.
void validate_config(const RunConfig& config);

struct FeatureSelection {
  RegularizationPath path;
  std::size_t lambda_index = 0;
  std::string lambda_rule;
  std::vector<std::size_t> selected;
};

struct TrainedEndpoint {
  PrognosisModel model;
  std::optional<FeatureSelection> selection;
  std::vector<std::string> dropped_covariates;
};

/// Fits one endpoint's model. `train` holds raw covariates; `dev` (possibly empty) only steers
/// the lasso penalty in deep-feature mode.
TrainedEndpoint train_endpoint(const Cohort& train, const Cohort& dev, Endpoint endpoint,
                               const RunConfig& config);

struct ConcordanceRow {
  /// Horizon in years, or 0 for the unrestricted column.
  int horizon = 0;
  /// False when no pair is comparable; the numbers are then meaningless.
  bool defined = false;
  double c = 0.5;
  double lo95 = 0.5;
  double hi95 = 0.5;
  std::uint64_t comparable_pairs = 0;
};

struct EndpointReport {
  Endpoint endpoint = Endpoint::LateAmd;
  /// Outcome column actually scored (SSS uses the central-GA variant when available).
  Endpoint scored_endpoint = Endpoint::LateAmd;
  FeatureMode feature_mode = FeatureMode::DeepFeatures;
  std::size_t subjects = 0;
  std::vector<ConcordanceRow> concordance;
  BrierCurve brier;
  CalibrationTable calibration;
};

/// Table 2 row label, e.g. "Deep features/survival".
std::string model_label(FeatureMode mode);

/// Scores a fitted model on a cohort with the model held fixed.
EndpointReport evaluate_model(const PrognosisModel& model, const Cohort& cohort,
                              const RunConfig& config);

/// Scores the severity scale itself (five-year table risk) on a cohort.
EndpointReport evaluate_sss(const Cohort& cohort, Endpoint endpoint, const RiskTable& table,
                            const RunConfig& config);

std::string concordance_csv(const EndpointReport& report);
std::string brier_csv(const EndpointReport& report);
std::string calibration_csv(const EndpointReport& report);
/// endpoint,model,<horizons...>,all with quoted cells like "86.4(86.2,86.6)".
std::string table_csv(const std::vector<EndpointReport>& reports, const std::vector<int>& horizons);

/// Cohort a model should be scored on: the test part of the model's own split (checked against
/// the training fingerprint) or the whole cohort.
Cohort evaluation_cohort(const PrognosisModel& model, const Cohort& cohort, bool use_split);

/// Command entry points. Reports go to `out`, diagnostics to `log`.
void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& log);
void cmd_report(const RunConfig& config, std::ostream& out, std::ostream& log);

/// Dispatches a command and maps failures to exit codes (0, 2 validation, 3 numerical, 4 I/O).
int run_command(const RunConfig& config, std::ostream& out, std::ostream& log);

}  // namespace prognos
