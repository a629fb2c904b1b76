#include <cmath>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prognos/errors.hpp"
#include "prognos/model_io.hpp"
#include "prognos/pipeline.hpp"
#include "prognos/simulate.hpp"

namespace {

using namespace prognos;

std::vector<int> parse_horizons(const std::string& text) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    const auto dash = item.find('-');
    try {
      std::size_t used = 0;
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } else {
        const int lo = std::stoi(item.substr(0, dash));
        const int hi = std::stoi(item.substr(dash + 1));
        if (hi < lo) throw std::invalid_argument(item);
        for (int h = lo; h <= hi; ++h) out.push_back(h);
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, "cannot read horizons '" + text + "'");
    }
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<Endpoint> parse_endpoints(const std::string& text) {
  if (text == "all") return {kModelEndpoints.begin(), kModelEndpoints.end()};
  std::vector<Endpoint> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = text.find(',', start);
    const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    auto e = parse_endpoint(item);
    if (!e) throw Error(ErrorKind::InvalidArgument, "unknown endpoint '" + item + "'");
    out.push_back(*e);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct Flags {
  std::string endpoint;
  std::string features;
  std::string genotype;
  std::string horizons;
  std::string ties;
  std::string split = "holdout";
  std::optional<double> lambda;
};

void apply_flags(const Flags& f, RunConfig& config) {
  if (!f.endpoint.empty()) config.endpoints = parse_endpoints(f.endpoint);
  if (!f.features.empty()) {
    auto mode = parse_feature_mode(f.features);
    if (!mode) throw Error(ErrorKind::InvalidArgument, "unknown feature mode '" + f.features + "'");
    config.feature_mode = *mode;
  }
  if (!f.genotype.empty()) {
    auto mode = parse_genotype_mode(f.genotype);
    if (!mode) throw Error(ErrorKind::InvalidArgument, "unknown genotype mode '" + f.genotype + "'");
    config.genotype_mode = *mode;
  }
  if (!f.horizons.empty()) config.horizons = parse_horizons(f.horizons);
  if (!f.ties.empty()) {
    auto ties = parse_tie_method(f.ties);
    if (!ties) throw Error(ErrorKind::InvalidArgument, "unknown tie method '" + f.ties + "'");
    config.ties = *ties;
  }
  if (f.split == "holdout") {
    config.use_split = true;
  } else if (f.split == "all") {
    config.use_split = false;
  } else {
    throw Error(ErrorKind::InvalidArgument, "--split must be holdout or all");
  }
  config.lambda = f.lambda;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-to-progression models for age-related macular degeneration"};
  app.require_subcommand(1);

  RunConfig config;
  Flags flags;
  std::map<CLI::App*, Command> commands;

  auto add_data = [&](CLI::App* sub) {
    sub->add_option("--data", config.data_path, "Cohort CSV")->required();
    sub->add_option("--columns", config.column_map_path, "JSON column map for nonstandard headers");
  };
  auto add_endpoint = [&](CLI::App* sub) {
    sub->add_option("--endpoint", flags.endpoint, "late-amd | ga | nv | all (comma lists allowed)");
  };
  auto add_risk_table = [&](CLI::App* sub) {
    sub->add_option("--risk-table", config.risk_table_path, "JSON five-year risk table for SSS scores");
  };

  auto* train = app.add_subcommand("train", "Select features, fit Cox models and write model files");
  commands[train] = Command::Train;
  add_data(train);
  train->add_option("--model", config.model_path, "Output model JSON (a manifest for several endpoints)")
      ->required();
  add_endpoint(train);
  train->add_option("--features", flags.features, "deep | grading | calculator");
  train->add_option("--genotype", flags.genotype, "none | snps | grs");
  train->add_option("--seed", config.seed, "Split seed");
  train->add_option("--ties", flags.ties, "efron | breslow");
  train->add_option("--lambda", flags.lambda, "Lasso penalty override");
  train->add_option("--lambda-se", config.lambda_se,
                    "Largest lambda within this many standard errors of the best dev C");
  train->add_option("--max-features", config.max_features, "Deep features kept after selection");
  train->add_option("--split", flags.split, "holdout (70/10/20) | all");
  train->add_option("--path-out", config.path_out, "Write the regularization path CSV here");
  add_risk_table(train);

  auto* eval = app.add_subcommand("eval", "Score a model: C-statistics, Brier curve, calibration");
  commands[eval] = Command::Eval;
  add_data(eval);
  eval->add_option("--model", config.model_path, "Model JSON or manifest");
  add_endpoint(eval);
  eval->add_option("--features", flags.features, "sss scores the severity scale instead of a model");
  eval->add_option("--horizons", flags.horizons, "Horizons in years, e.g. 1-12 or 2,5");
  eval->add_option("--bootstrap", config.bootstrap_b, "Bootstrap replicates");
  eval->add_option("--seed", config.seed, "Bootstrap seed");
  eval->add_option("--threads", config.threads, "Bootstrap worker threads (0 = all cores)");
  eval->add_option("--split", flags.split, "holdout (score the model's test split) | all");
  eval->add_option("--out", config.out_dir, "Report directory");
  add_risk_table(eval);

  auto* predict = app.add_subcommand("predict", "Progression probabilities for one subject");
  commands[predict] = Command::Predict;
  predict->add_option("--model", config.model_path, "Model JSON or manifest");
  predict->add_option("--subject", config.subject, "Subject JSON file or inline JSON object")->required();
  add_endpoint(predict);
  predict->add_option("--horizons", flags.horizons, "Horizons in years, e.g. 1-12 or 2,5");
  add_risk_table(predict);

  auto* report = app.add_subcommand("report", "Wald table of a fitted model");
  commands[report] = Command::Report;
  report->add_option("--model", config.model_path, "Model JSON or manifest")->required();
  add_endpoint(report);
  report->add_option("--out", config.out_dir, "Directory for wald_<endpoint>.csv");

  SyntheticCohortSpec sim;
  std::string sim_out;
  bool no_features = false;
  double hazard_ratio = 3.0;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic cohort with a planted signal");
  simulate->add_option("--out", sim_out, "Output CSV")->required();
  simulate->add_option("--n", sim.n, "Participants");
  simulate->add_option("--seed", sim.seed, "Generator seed");
  simulate->add_option("--hazard-ratio", hazard_ratio, "Hazard ratio per SD of latent severity");
  simulate->add_flag("--no-features", no_features, "Omit the deep-feature block");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::InvalidArgument);
  }

  try {
    if (simulate->parsed()) {
      if (!(hazard_ratio > 0.0)) throw Error(ErrorKind::InvalidArgument, "hazard ratio must be positive");
      sim.with_features = !no_features;
      sim.severity_log_hr = std::log(hazard_ratio);
      write_text_file(sim_out, serialize_cohort(simulate_cohort(sim).cohort));
      return 0;
    }
    for (const auto& [sub, command] : commands) {
      if (sub->parsed()) config.command = command;
    }
    apply_flags(flags, config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return run_command(config, std::cout, std::cerr);
}
