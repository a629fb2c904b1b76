#include "prognos/model_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "prognos/errors.hpp"

namespace prognos {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

template <class T>
T field(const json& doc, const char* key) {
  if (!doc.contains(key)) {
    throw Error(ErrorKind::InvalidArgument, std::string("model document lacks '") + key + "'");
  }
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("model field '") + key + "': " + e.what());
  }
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::string model_to_json(const PrognosisModel& model) {
  const CoxModel& cox = model.cox;
  ordered_json doc;
  doc["schema_version"] = kModelSchemaVersion;
  doc["endpoint"] = to_string(cox.endpoint);
  doc["feature_mode"] = to_string(model.feature_mode);
  doc["genotype_mode"] = to_string(model.genotype_mode);
  doc["tie_method"] = to_string(cox.tie_method);
  doc["covariate_names"] = cox.covariate_names;
  doc["beta"] = to_std(cox.beta);
  std::vector<std::vector<double>> cov;
  for (Eigen::Index i = 0; i < cox.info_inverse.rows(); ++i) {
    cov.push_back(to_std(cox.info_inverse.row(i).transpose()));
  }
  doc["info_inverse"] = cov;
  ordered_json norm;
  norm["mean"] = cox.normalization.mean;
  norm["sd"] = cox.normalization.sd;
  norm["constant_flags"] = cox.normalization.constant;
  doc["normalization"] = norm;
  ordered_json baseline;
  baseline["t"] = model.baseline.time;
  baseline["s0"] = model.baseline.s0;
  doc["baseline"] = baseline;
  ordered_json diagnostics;
  diagnostics["converged"] = cox.converged;
  diagnostics["iterations"] = cox.iterations;
  diagnostics["gradient_norm"] = cox.final_gradient_norm;
  doc["diagnostics"] = diagnostics;
  doc["train_fingerprint"] = cox.train_fingerprint;
  if (model.split) {
    ordered_json split;
    split["seed"] = model.split->seed;
    split["ratios"] = {model.split->ratios.train, model.split->ratios.dev, model.split->ratios.test};
    doc["split"] = split;
  }
  if (model.lambda) doc["lambda"] = *model.lambda;
  return doc.dump(2) + "\n";
}

PrognosisModel model_from_json(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("model file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::InvalidArgument, "model file must be a JSON object");
  const auto version = field<std::string>(doc, "schema_version");
  if (version != kModelSchemaVersion) {
    throw Error(ErrorKind::InvalidArgument, "unsupported model schema version '" + version + "'");
  }

  PrognosisModel model;
  CoxModel& cox = model.cox;
  const auto endpoint = parse_endpoint(field<std::string>(doc, "endpoint"));
  const auto ties = parse_tie_method(field<std::string>(doc, "tie_method"));
  if (!endpoint || !ties) throw Error(ErrorKind::InvalidArgument, "unknown endpoint or tie method");
  cox.endpoint = *endpoint;
  cox.tie_method = *ties;
  if (doc.contains("feature_mode")) {
    auto mode = parse_feature_mode(field<std::string>(doc, "feature_mode"));
    if (!mode) throw Error(ErrorKind::InvalidArgument, "unknown feature mode");
    model.feature_mode = *mode;
  }
  if (doc.contains("genotype_mode")) {
    auto mode = parse_genotype_mode(field<std::string>(doc, "genotype_mode"));
    if (!mode) throw Error(ErrorKind::InvalidArgument, "unknown genotype mode");
    model.genotype_mode = *mode;
  }
  cox.covariate_names = field<std::vector<std::string>>(doc, "covariate_names");
  const auto beta = field<std::vector<double>>(doc, "beta");
  const std::size_t p = cox.covariate_names.size();
  if (beta.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "beta and covariate_names differ in length");
  }
  for (const auto& name : cox.covariate_names) {
    if (!is_known_covariate(name)) {
      throw Error(ErrorKind::InvalidArgument, "unknown covariate '" + name + "' in model file");
    }
  }
  cox.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(p));

  cox.info_inverse = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
  if (doc.contains("info_inverse")) {
    const auto cov = field<std::vector<std::vector<double>>>(doc, "info_inverse");
    if (cov.size() != p) throw Error(ErrorKind::DimensionMismatch, "info_inverse has wrong size");
    for (std::size_t i = 0; i < p; ++i) {
      if (cov[i].size() != p) throw Error(ErrorKind::DimensionMismatch, "info_inverse has wrong size");
      for (std::size_t j = 0; j < p; ++j) {
        cox.info_inverse(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cov[i][j];
      }
    }
  }

  const json norm = field<json>(doc, "normalization");
  cox.normalization.mean = field<std::vector<double>>(norm, "mean");
  cox.normalization.sd = field<std::vector<double>>(norm, "sd");
  cox.normalization.constant = field<std::vector<bool>>(norm, "constant_flags");
  if (cox.normalization.mean.size() != p || cox.normalization.sd.size() != p ||
      cox.normalization.constant.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "normalization does not match covariate_names");
  }

  const json baseline = field<json>(doc, "baseline");
  model.baseline.time = field<std::vector<double>>(baseline, "t");
  model.baseline.s0 = field<std::vector<double>>(baseline, "s0");
  if (model.baseline.time.size() != model.baseline.s0.size()) {
    throw Error(ErrorKind::DimensionMismatch, "baseline t and s0 differ in length");
  }
  for (std::size_t k = 0; k < model.baseline.s0.size(); ++k) {
    const double s = model.baseline.s0[k];
    if (!(s > 0.0 && s <= 1.0) ||
        (k > 0 && (s > model.baseline.s0[k - 1] || model.baseline.time[k] <= model.baseline.time[k - 1]))) {
      throw Error(ErrorKind::OutOfRangeValue,
                  "baseline survival must be in (0,1], nonincreasing, on ascending times");
    }
  }

  if (doc.contains("diagnostics")) {
    const json diag = doc.at("diagnostics");
    cox.iterations = diag.value("iterations", 0);
    cox.final_gradient_norm = diag.value("gradient_norm", 0.0);
    cox.converged = diag.value("converged", true);
  }
  if (doc.contains("train_fingerprint")) cox.train_fingerprint = field<std::string>(doc, "train_fingerprint");
  if (doc.contains("split")) {
    const json split = doc.at("split");
    SplitSpec spec;
    spec.seed = field<std::uint64_t>(split, "seed");
    const auto ratios = field<std::vector<double>>(split, "ratios");
    if (ratios.size() != 3) throw Error(ErrorKind::InvalidArgument, "split ratios need 3 entries");
    spec.ratios = {ratios[0], ratios[1], ratios[2]};
    model.split = spec;
  }
  if (doc.contains("lambda")) model.lambda = field<double>(doc, "lambda");
  return model;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

void save_model(const PrognosisModel& model, const std::string& path) {
  write_text_file(path, model_to_json(model));
}

PrognosisModel load_model(const std::string& path) { return model_from_json(read_text_file(path)); }

FeatureMode ModelSet::feature_mode() const {
  if (models.empty()) throw Error(ErrorKind::InvalidArgument, "no models loaded");
  return models.begin()->second.feature_mode;
}

GenotypeMode ModelSet::genotype_mode() const {
  if (models.empty()) throw Error(ErrorKind::InvalidArgument, "no models loaded");
  return models.begin()->second.genotype_mode;
}

std::vector<Endpoint> ModelSet::endpoints() const {
  std::vector<Endpoint> out;
  for (const auto& [endpoint, model] : models) out.push_back(endpoint);
  return out;
}

const PrognosisModel& ModelSet::at(Endpoint endpoint) const {
  auto it = models.find(endpoint);
  if (it == models.end()) {
    throw Error(ErrorKind::ModelDataMismatch,
                "no model loaded for endpoint '" + std::string(to_string(endpoint)) + "'");
  }
  return it->second;
}

RiskProfile ModelSet::predict(const Participant& subject, std::span<const int> horizons,
                              std::span<const Endpoint> endpoints) const {
  for (int h : horizons) {
    if (h < kMinHorizon || h > kMaxHorizon) {
      throw Error(ErrorKind::InvalidArgument,
                  "horizon " + std::to_string(h) + " is outside 1..12 years");
    }
  }
  RiskProfile profile;
  for (Endpoint endpoint : endpoints) {
    const PrognosisModel& model = at(endpoint);
    const double lp = model.linear_predictor(subject);
    auto& risks = profile.endpoints[endpoint];
    for (int h : horizons) {
      const auto est = progression_at(model.baseline, lp, static_cast<double>(h));
      risks.push_back({h, est.probability, est.extrapolated});
    }
  }
  return profile;
}

ModelSet load_manifest(const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "manifest '" + path + "' is not valid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("models") || !doc.at("models").is_object()) {
    throw Error(ErrorKind::InvalidArgument, "manifest needs a 'models' object");
  }
  const auto base = std::filesystem::path(path).parent_path();
  ModelSet set;
  for (const auto& [key, value] : doc.at("models").items()) {
    const auto endpoint = parse_endpoint(key);
    if (!endpoint || !value.is_string()) {
      throw Error(ErrorKind::InvalidArgument, "manifest entry '" + key + "' is not endpoint: path");
    }
    std::filesystem::path file(value.get<std::string>());
    if (file.is_relative()) file = base / file;
    PrognosisModel model = load_model(file.string());
    if (model.endpoint() != *endpoint) {
      throw Error(ErrorKind::ModelDataMismatch, "manifest lists '" + file.string() + "' under '" +
                                                    key + "' but it models '" +
                                                    std::string(to_string(model.endpoint())) + "'");
    }
    set.models.emplace(*endpoint, std::move(model));
  }
  if (set.models.empty()) throw Error(ErrorKind::InvalidArgument, "manifest lists no models");
  const FeatureMode mode = set.models.begin()->second.feature_mode;
  for (const auto& [endpoint, model] : set.models) {
    if (model.feature_mode != mode) {
      throw Error(ErrorKind::ModelDataMismatch, "manifest mixes feature modes");
    }
  }
  if (doc.contains("risk_table")) set.risk_table = RiskTable::from_json(doc.at("risk_table").dump());
  return set;
}

void write_manifest(const std::string& path, const std::map<Endpoint, std::string>& model_files,
                    const RiskTable& table) {
  ordered_json doc;
  doc["schema_version"] = kModelSchemaVersion;
  ordered_json models = ordered_json::object();
  for (const auto& [endpoint, file] : model_files) models[std::string(to_string(endpoint))] = file;
  doc["models"] = models;
  doc["risk_table"] = ordered_json::parse(table.to_json());
  write_text_file(path, doc.dump(2) + "\n");
}

ModelSet load_models(const std::string& path) {
  const std::string text = read_text_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, "'" + path + "' is not valid JSON: " + e.what());
  }
  if (doc.is_object() && doc.contains("models")) return load_manifest(path);
  ModelSet set;
  PrognosisModel model = model_from_json(text);
  const Endpoint endpoint = model.endpoint();
  set.models.emplace(endpoint, std::move(model));
  return set;
}

}  // namespace prognos
