#include "prognos/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prognos/clinical.hpp"
#include "prognos/concordance.hpp"
#include "prognos/errors.hpp"
#include "prognos/prediction.hpp"
#include "prognos/service.hpp"
#include "prognos/wald.hpp"
#include "text_util.hpp"

namespace prognos {

namespace {

namespace fs = std::filesystem;
using detail::format_double;
using detail::format_fixed;

constexpr int kSssGroups[] = {0, 1, 2, 3, 4};
constexpr double kBrierStep = 0.5;
constexpr double kSssHorizon = 5.0;

Cohort load_cohort(const RunConfig& config) {
  if (config.data_path.empty()) throw Error(ErrorKind::InvalidArgument, "--data is required");
  ColumnMap schema;
  if (!config.column_map_path.empty()) {
    schema = ColumnMap::from_json(read_text_file(config.column_map_path));
  }
  return read_cohort_file(config.data_path, schema);
}

RiskTable load_risk_table(const RunConfig& config, const RiskTable& fallback) {
  if (config.risk_table_path.empty()) return fallback;
  return RiskTable::from_json(read_text_file(config.risk_table_path));
}

Normalization identity_normalization(std::size_t p) {
  Normalization norm;
  norm.mean.assign(p, 0.0);
  norm.sd.assign(p, 1.0);
  norm.constant.assign(p, false);
  return norm;
}

std::vector<std::string> all_feature_names() {
  std::vector<std::string> names;
  names.reserve(kDeepFeatureCount);
  for (std::size_t i = 0; i < kDeepFeatureCount; ++i) names.push_back(feature_covariate_name(i));
  return names;
}

bool is_constant_on(const Cohort& cohort, const std::string& name) {
  const double first = covariate_value(cohort.participants.front(), name);
  return std::all_of(cohort.participants.begin(), cohort.participants.end(),
                     [&](const Participant& p) { return covariate_value(p, name) == first; });
}

std::string join_errors(const std::vector<FieldError>& errors) {
  std::string out;
  for (const auto& e : errors) {
    if (!out.empty()) out += "; ";
    out += e.field + ": " + e.message;
  }
  return out;
}

std::string endpoint_file_name(Endpoint e, std::string_view prefix, std::string_view ext) {
  return std::string(prefix) + std::string(to_string(e)) + std::string(ext);
}

std::vector<ConcordanceRow> concordance_rows(const std::vector<double>& risk,
                                             const std::vector<double>& time,
                                             const std::vector<std::uint8_t>& event,
                                             const RunConfig& config) {
  std::vector<int> columns = config.horizons;
  columns.push_back(0);
  std::vector<ConcordanceRow> rows;
  for (int h : columns) {
    const std::optional<double> horizon = h > 0 ? std::optional<double>(h) : std::nullopt;
    ConcordanceRow row;
    row.horizon = h;
    const auto point = concordance(risk, time, event, horizon);
    row.comparable_pairs = point.comparable_pairs;
    row.defined = !point.degenerate();
    row.c = row.lo95 = row.hi95 = point.c;
    if (row.defined) {
      const ResampleMetric metric = [&](std::span<const std::size_t> idx) -> std::optional<double> {
        std::vector<double> r(idx.size()), t(idx.size());
        std::vector<std::uint8_t> e(idx.size());
        for (std::size_t k = 0; k < idx.size(); ++k) {
          r[k] = risk[idx[k]];
          t[k] = time[idx[k]];
          e[k] = event[idx[k]];
        }
        const auto c = concordance(r, t, e, horizon);
        if (c.degenerate()) return std::nullopt;
        return c.c;
      };
      BootstrapOptions options;
      options.replicates = config.bootstrap_b;
      options.seed = config.seed;
      options.threads = config.threads;
      const auto boot = bootstrap_ci(risk.size(), metric, options);
      row.c = boot.point;
      row.lo95 = boot.lo95;
      row.hi95 = boot.hi95;
    }
    rows.push_back(row);
  }
  return rows;
}

void outcome_vectors(const Cohort& cohort, Endpoint endpoint, std::vector<double>& time,
                     std::vector<std::uint8_t>& event) {
  Eigen::VectorXd t;
  endpoint_outcomes(cohort, endpoint, t, event);
  time.assign(t.data(), t.data() + t.size());
}

std::vector<double> brier_grid(const std::vector<double>& time) {
  const double last = std::min(static_cast<double>(kMaxHorizon),
                               *std::max_element(time.begin(), time.end()));
  std::vector<double> grid;
  for (int k = 1; k * kBrierStep <= last; ++k) grid.push_back(k * kBrierStep);
  return grid;
}

void write_report_files(const std::vector<EndpointReport>& reports, const RunConfig& config) {
  if (config.out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(config.out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create '" + config.out_dir + "': " + ec.message());
  const fs::path dir(config.out_dir);
  for (const auto& r : reports) {
    write_text_file((dir / endpoint_file_name(r.endpoint, "concordance_", ".csv")).string(),
                    concordance_csv(r));
    write_text_file((dir / endpoint_file_name(r.endpoint, "brier_", ".csv")).string(), brier_csv(r));
    write_text_file((dir / endpoint_file_name(r.endpoint, "calibration_", ".csv")).string(),
                    calibration_csv(r));
  }
  write_text_file((dir / "table.csv").string(), table_csv(reports, config.horizons));
}

}  // namespace

std::string_view to_string(Command command) noexcept {
  switch (command) {
    case Command::Train: return "train";
    case Command::Eval: return "eval";
    case Command::Predict: return "predict";
    case Command::Report: return "report";
  }
  return "?";
}

std::vector<int> RunConfig::default_horizons() {
  std::vector<int> h;
  for (int y = kMinHorizon; y <= kMaxHorizon; ++y) h.push_back(y);
  return h;
}

void validate_config(const RunConfig& config) {
  if (config.horizons.empty()) throw Error(ErrorKind::InvalidArgument, "no horizons given");
  for (int h : config.horizons) {
    if (h < kMinHorizon || h > kMaxHorizon) {
      throw Error(ErrorKind::InvalidArgument, "horizon " + std::to_string(h) + " is outside 1..12");
    }
  }
  if (config.bootstrap_b < 2) {
    throw Error(ErrorKind::InvalidArgument, "bootstrap needs at least 2 replicates");
  }
  if (config.max_features == 0) {
    throw Error(ErrorKind::InvalidArgument, "max features must be positive");
  }
  if (!(config.lambda_se >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "lambda standard-error multiplier must be >= 0");
  }
}

TrainedEndpoint train_endpoint(const Cohort& train, const Cohort& dev, Endpoint endpoint,
                               const RunConfig& config) {
  if (config.feature_mode == FeatureMode::Sss) {
    throw Error(ErrorKind::InvalidArgument,
                "feature mode 'sss' is a fixed severity scale, not a trainable model; "
                "score it with eval --features sss");
  }
  if (train.size() == 0) throw Error(ErrorKind::EmptyCohort, "training cohort is empty");

  TrainedEndpoint out;
  std::vector<std::string> names;
  if (config.feature_mode == FeatureMode::DeepFeatures) {
    if (!train.has_deep_features()) {
      throw Error(ErrorKind::NoFeatures, "feature mode deep_features needs the f0..f511 columns");
    }
    const Normalization norm = zscore_fit(train);
    const Cohort train_z = zscore_apply(norm, train);
    FeatureSelection sel;
    sel.path = lasso_cox_path(train_z, endpoint);
    if (config.lambda) {
      sel.lambda_index = resolve_lambda(sel.path, LambdaValue{*config.lambda});
      sel.lambda_rule = "explicit";
    } else {
      std::optional<SurvivalData> held_out;
      if (dev.size() > 0) {
        held_out = survival_data(zscore_apply(norm, dev), all_feature_names(), endpoint,
                                 identity_normalization(kDeepFeatureCount));
      }
      if (held_out && held_out->event_count() > 0) {
        ConcordanceRule rule;
        rule.se_multiplier = config.lambda_se;
        rule.seed = config.seed;
        sel.lambda_index = lambda_by_concordance(sel.path, *held_out, rule);
        sel.lambda_rule = config.lambda_se > 0.0 ? "dev concordance, " + detail::format_double(config.lambda_se) + " se"
                                                 : "dev concordance";
      } else {
        sel.lambda_index = lambda_by_support(sel.path, config.max_features);
        sel.lambda_rule = "support";
      }
    }
    sel.selected = select_features(sel.path.coefficients[sel.lambda_index], config.max_features);
    for (std::size_t j : sel.selected) names.push_back(feature_covariate_name(j));
    out.selection = std::move(sel);
  }
  for (auto& name : clinical_covariate_names(config.feature_mode, config.genotype_mode)) {
    if (is_constant_on(train, name)) {
      out.dropped_covariates.push_back(name);
    } else {
      names.push_back(name);
    }
  }
  if (names.empty()) throw Error(ErrorKind::NoFeatures, "no covariates left to fit");

  CoxFitOptions options;
  options.ties = config.ties;
  PrognosisModel& model = out.model;
  model.cox = cox_fit(train, names, endpoint, options);
  model.baseline = breslow_baseline(model.cox, train);
  model.feature_mode = config.feature_mode;
  model.genotype_mode = config.genotype_mode;
  if (config.use_split) model.split = SplitSpec{config.ratios, config.seed};
  if (out.selection) model.lambda = out.selection->path.lambdas[out.selection->lambda_index];
  return out;
}

std::string model_label(FeatureMode mode) {
  switch (mode) {
    case FeatureMode::DeepFeatures: return "Deep features/survival";
    case FeatureMode::DlGrading: return "DL grading/survival";
    case FeatureMode::Calculator: return "Retinal specialists/calculator";
    case FeatureMode::Sss: return "Retinal specialists/SSS";
  }
  return "?";
}

Cohort evaluation_cohort(const PrognosisModel& model, const Cohort& cohort, bool use_split) {
  if (!use_split || !model.split) return cohort;
  auto parts = split_cohort(cohort, model.split->ratios, model.split->seed);
  if (!model.cox.train_fingerprint.empty()) {
    const auto data = survival_data(parts.train, model.cox.covariate_names, model.endpoint(),
                                    model.cox.normalization);
    if (data_fingerprint(data) != model.cox.train_fingerprint) {
      throw Error(ErrorKind::ModelDataMismatch,
                  "the training split of this cohort does not match the model's training "
                  "fingerprint " + model.cox.train_fingerprint +
                  "; pass --split all to score every row");
    }
  }
  return std::move(parts.test);
}

EndpointReport evaluate_model(const PrognosisModel& model, const Cohort& cohort,
                              const RunConfig& config) {
  if (cohort.size() == 0) throw Error(ErrorKind::EmptyCohort, "evaluation cohort is empty");
  EndpointReport report;
  report.endpoint = report.scored_endpoint = model.endpoint();
  report.feature_mode = model.feature_mode;
  report.subjects = cohort.size();

  std::vector<double> time;
  std::vector<std::uint8_t> event;
  outcome_vectors(cohort, model.endpoint(), time, event);
  std::vector<double> lp;
  lp.reserve(cohort.size());
  for (const auto& p : cohort.participants) lp.push_back(model.linear_predictor(p));

  report.concordance = concordance_rows(lp, time, event, config);

  const auto grid = brier_grid(time);
  report.brier = brier_curve(
      [&](std::size_t i, double t) { return 1.0 - progression_at(model.baseline, lp[i], t).probability; },
      time, event, grid);

  std::vector<double> cal_grid(config.horizons.begin(), config.horizons.end());
  report.calibration = calibration_by_group(
      cohort, model.endpoint(),
      [](const Participant& p) { return sss_score(p.left_eye, p.right_eye); },
      [&](std::size_t i, double t) { return progression_at(model.baseline, lp[i], t).probability; },
      cal_grid, kSssGroups);
  return report;
}

EndpointReport evaluate_sss(const Cohort& cohort, Endpoint endpoint, const RiskTable& table,
                            const RunConfig& config) {
  if (cohort.size() == 0) throw Error(ErrorKind::EmptyCohort, "evaluation cohort is empty");
  EndpointReport report;
  report.endpoint = endpoint;
  report.scored_endpoint =
      endpoint == Endpoint::LateAmd && cohort.has_endpoint(Endpoint::LateAmdCentralGa)
          ? Endpoint::LateAmdCentralGa
          : endpoint;
  report.feature_mode = FeatureMode::Sss;
  report.subjects = cohort.size();

  std::vector<double> time;
  std::vector<std::uint8_t> event;
  outcome_vectors(cohort, report.scored_endpoint, time, event);
  std::vector<double> score;
  std::vector<double> risk;
  for (const auto& p : cohort.participants) {
    const auto s = sss_assess(p.left_eye, p.right_eye, table);
    score.push_back(s.score);
    risk.push_back(s.five_year_risk);
  }
  report.concordance = concordance_rows(score, time, event, config);

  std::vector<double> grid;
  if (kSssHorizon <= *std::max_element(time.begin(), time.end())) grid.push_back(kSssHorizon);
  report.brier = brier_curve([&](std::size_t i, double) { return 1.0 - risk[i]; }, time, event, grid);

  const double cal_grid[] = {kSssHorizon};
  report.calibration = calibration_by_group(
      cohort, report.scored_endpoint,
      [](const Participant& p) { return sss_score(p.left_eye, p.right_eye); },
      [&](std::size_t i, double) { return risk[i]; }, cal_grid, kSssGroups);
  return report;
}

std::string concordance_csv(const EndpointReport& report) {
  std::string out = "horizon,c,lo95,hi95\n";
  for (const auto& row : report.concordance) {
    out += row.horizon > 0 ? std::to_string(row.horizon) : std::string("all");
    if (row.defined) {
      out += "," + format_fixed(row.c, 6) + "," + format_fixed(row.lo95, 6) + "," +
             format_fixed(row.hi95, 6) + "\n";
    } else {
      out += ",NA,NA,NA\n";
    }
  }
  return out;
}

std::string brier_csv(const EndpointReport& report) {
  std::string out = "t,brier\n";
  for (std::size_t k = 0; k < report.brier.scores.size(); ++k) {
    out += format_double(report.brier.grid[k]) + "," + format_fixed(report.brier.scores[k], 6) + "\n";
  }
  return out;
}

std::string calibration_csv(const EndpointReport& report) {
  std::string out = "group,t,observed,predicted\n";
  for (const auto& row : report.calibration.rows) {
    out += std::to_string(row.group) + "," + format_double(row.time) + "," +
           format_fixed(row.observed, 6) + "," + format_fixed(row.predicted, 6) + "\n";
  }
  return out;
}

std::string table_csv(const std::vector<EndpointReport>& reports, const std::vector<int>& horizons) {
  std::string out = "endpoint,model";
  for (int h : horizons) out += "," + std::to_string(h);
  out += ",all\n";
  for (const auto& r : reports) {
    out += std::string(to_string(r.endpoint)) + "," + model_label(r.feature_mode);
    auto cell = [&](int h) {
      for (const auto& row : r.concordance) {
        if (row.horizon != h) continue;
        if (!row.defined) return std::string("NA");
        char buf[64];
        // Quoted: the interval's comma would otherwise split the cell.
        std::snprintf(buf, sizeof buf, "\"%.1f(%.1f,%.1f)\"", 100.0 * row.c, 100.0 * row.lo95,
                      100.0 * row.hi95);
        return std::string(buf);
      }
      return std::string("NA");
    };
    for (int h : horizons) out += "," + cell(h);
    out += "," + cell(0) + "\n";
  }
  return out;
}

void cmd_train(const RunConfig& config, std::ostream& out, std::ostream& log) {
  validate_config(config);
  if (config.model_path.empty()) throw Error(ErrorKind::InvalidArgument, "--model is required");
  const Cohort cohort = load_cohort(config);
  Cohort train;
  Cohort dev;
  if (config.use_split) {
    auto parts = split_cohort(cohort, config.ratios, config.seed);
    train = std::move(parts.train);
    dev = std::move(parts.dev);
  } else {
    train = cohort;
  }
  log << "train: " << train.size() << " participants, dev: " << dev.size() << "\n";

  const std::vector<Endpoint> endpoints =
      config.endpoints.empty() ? std::vector<Endpoint>{Endpoint::LateAmd} : config.endpoints;
  const bool manifest = endpoints.size() > 1;
  const fs::path model_dir = fs::path(config.model_path).parent_path();
  if (!model_dir.empty()) {
    std::error_code ec;
    fs::create_directories(model_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + model_dir.string() + "': " + ec.message());
  }
  std::map<Endpoint, std::string> files;

  if (config.feature_mode == FeatureMode::DeepFeatures && train.size() > 0 && train.has_deep_features()) {
    for (std::size_t j : zscore_fit(train).constant_columns()) {
      log << "warning: feature column " << feature_covariate_name(j) << " is constant\n";
    }
  }

  for (Endpoint e : endpoints) {
    TrainedEndpoint trained = train_endpoint(train, dev, e, config);
    const auto& model = trained.model;
    for (const auto& name : trained.dropped_covariates) {
      log << "warning: covariate '" << name << "' is constant on the training split and was dropped\n";
    }
    if (trained.selection) {
      const auto& sel = *trained.selection;
      log << to_string(e) << ": lambda " << format_double(sel.path.lambdas[sel.lambda_index])
          << " (" << sel.lambda_rule << "), " << sel.selected.size() << " features selected\n";
      if (!config.path_out.empty()) {
        std::string path = config.path_out;
        if (manifest) {
          const fs::path p(config.path_out);
          path = (p.parent_path() / (p.stem().string() + "_" + std::string(to_string(e)) +
                                     p.extension().string())).string();
        }
        write_text_file(path, path_csv(sel.path));
      }
    }
    out << "endpoint " << to_string(e) << " (" << model.cox.iterations << " Newton iterations)\n";
    out << format_wald_table(wald_report(model.cox)) << "\n";

    if (manifest) {
      const std::string name = endpoint_file_name(e, "", ".json");
      save_model(model, (model_dir / name).string());
      files[e] = name;
    } else {
      save_model(model, config.model_path);
    }
  }
  if (manifest) write_manifest(config.model_path, files, load_risk_table(config, RiskTable()));
}

void cmd_eval(const RunConfig& config, std::ostream& out, std::ostream& log) {
  validate_config(config);
  const Cohort cohort = load_cohort(config);
  std::vector<EndpointReport> reports;

  if (config.feature_mode == FeatureMode::Sss) {
    ModelSet fallback;
    if (!config.model_path.empty()) fallback = load_models(config.model_path);
    const RiskTable table = load_risk_table(config, fallback.risk_table);
    const Cohort scored =
        config.use_split ? split_cohort(cohort, config.ratios, config.seed).test : cohort;
    const std::vector<Endpoint> endpoints =
        config.endpoints.empty() ? std::vector<Endpoint>{Endpoint::LateAmd} : config.endpoints;
    for (Endpoint e : endpoints) {
      reports.push_back(evaluate_sss(scored, e, table, config));
      if (reports.back().scored_endpoint != e) {
        log << "note: SSS late AMD scored against " << to_string(reports.back().scored_endpoint)
            << "\n";
      }
    }
  } else {
    if (config.model_path.empty()) throw Error(ErrorKind::InvalidArgument, "--model is required");
    const ModelSet models = load_models(config.model_path);
    const std::vector<Endpoint> endpoints =
        config.endpoints.empty() ? models.endpoints() : config.endpoints;
    for (Endpoint e : endpoints) {
      const auto& model = models.at(e);
      const Cohort scored = evaluation_cohort(model, cohort, config.use_split);
      reports.push_back(evaluate_model(model, scored, config));
    }
  }
  for (const auto& r : reports) {
    log << to_string(r.endpoint) << ": " << r.subjects << " participants scored\n";
    for (const auto& w : r.brier.warnings) log << "warning: " << w << "\n";
    for (int g : r.calibration.empty_groups) {
      log << "note: severity group " << g << " has no participants\n";
    }
  }
  write_report_files(reports, config);
  out << table_csv(reports, config.horizons);
}

void cmd_predict(const RunConfig& config, std::ostream& out, std::ostream& /*log*/) {
  validate_config(config);
  if (config.subject.empty()) throw Error(ErrorKind::InvalidArgument, "--subject is required");
  const auto trimmed = detail::trim(config.subject);
  const std::string text =
      !trimmed.empty() && trimmed.front() == '{' ? std::string(trimmed) : read_text_file(config.subject);

  auto parsed = parse_predict_request(text);
  if (!parsed.request) throw Error(ErrorKind::InvalidArgument, join_errors(parsed.errors));
  PredictRequest request = std::move(*parsed.request);
  const auto doc = nlohmann::json::parse(text);
  if (!doc.contains("horizons")) request.horizons = config.horizons;
  if (!doc.contains("endpoints")) request.endpoints = config.endpoints;

  ModelSet models;
  if (!config.model_path.empty()) models = load_models(config.model_path);
  models.risk_table = load_risk_table(config, models.risk_table);

  const auto mismatch = check_compatibility(models, request);
  if (!mismatch.empty()) {
    const auto& first = mismatch.front().field;
    const ErrorKind kind = first.starts_with("genotype") ? ErrorKind::MissingGenotype
                           : first == "endpoints"        ? ErrorKind::ModelDataMismatch
                                                         : ErrorKind::DimensionMismatch;
    throw Error(kind, join_errors(mismatch));
  }
  out << prediction_response(models, request) << "\n";
}

void cmd_report(const RunConfig& config, std::ostream& out, std::ostream& /*log*/) {
  if (config.model_path.empty()) throw Error(ErrorKind::InvalidArgument, "--model is required");
  const ModelSet models = load_models(config.model_path);
  const std::vector<Endpoint> endpoints =
      config.endpoints.empty() ? models.endpoints() : config.endpoints;
  if (!config.out_dir.empty()) {
    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create '" + config.out_dir + "': " + ec.message());
  }
  for (Endpoint e : endpoints) {
    const auto rows = wald_report(models.at(e).cox);
    out << "endpoint " << to_string(e) << "\n" << format_wald_table(rows) << "\n";
    if (!config.out_dir.empty()) {
      write_text_file((fs::path(config.out_dir) / endpoint_file_name(e, "wald_", ".csv")).string(),
                      wald_csv(rows));
    }
  }
}

int run_command(const RunConfig& config, std::ostream& out, std::ostream& log) {
  try {
    switch (config.command) {
      case Command::Train: cmd_train(config, out, log); break;
      case Command::Eval: cmd_eval(config, out, log); break;
      case Command::Predict: cmd_predict(config, out, log); break;
      case Command::Report: cmd_report(config, out, log); break;
    }
    return 0;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Io);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return exit_code(ErrorKind::Nonconvergence);
  }
}

}  // namespace prognos
