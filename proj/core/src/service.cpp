#include "prognos/service.hpp"

#include <cmath>
#include <utility>

#include <nlohmann/json.hpp>

#include "prognos/errors.hpp"

namespace prognos {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kGradeFields[] = {"drusen", "pigment"};

void parse_eye(const json& eye, const std::string& field, EyeGrade& out,
               std::vector<FieldError>& errors) {
  if (!eye.is_object()) {
    errors.push_back({field, "must be an object with drusen and pigment"});
    return;
  }
  for (const char* key : kGradeFields) {
    const std::string name = field + "." + key;
    if (!eye.contains(key) || !eye.at(key).is_string()) {
      errors.push_back({name, "is required and must be a string"});
      continue;
    }
    const auto text = eye.at(key).get<std::string>();
    if (std::string_view(key) == "drusen") {
      if (auto v = parse_drusen(text)) {
        out.drusen = *v;
      } else {
        errors.push_back({name, "must be one of none_small, medium, large"});
      }
    } else if (auto v = parse_pigment(text)) {
      out.pigment = *v;
    } else {
      errors.push_back({name, "must be absent or present"});
    }
  }
}

void parse_genotype(const json& g, Genotype& out, std::vector<FieldError>& errors) {
  if (!g.is_object()) {
    errors.push_back({"genotype", "must be an object"});
    return;
  }
  if (g.contains("cfh") && !g.at("cfh").is_null()) {
    const auto& v = g.at("cfh");
    auto parsed = v.is_string() ? parse_cfh(v.get<std::string>()) : std::nullopt;
    if (parsed) {
      out.cfh = *parsed;
    } else {
      errors.push_back({"genotype.cfh", "must be one of TT, CT, CC"});
    }
  }
  if (g.contains("arms2") && !g.at("arms2").is_null()) {
    const auto& v = g.at("arms2");
    auto parsed = v.is_string() ? parse_arms2(v.get<std::string>()) : std::nullopt;
    if (parsed) {
      out.arms2 = *parsed;
    } else {
      errors.push_back({"genotype.arms2", "must be one of GG, GT, TT"});
    }
  }
  if (g.contains("grs") && !g.at("grs").is_null()) {
    const auto& v = g.at("grs");
    if (v.is_number() && std::isfinite(v.get<double>())) {
      out.grs = v.get<double>();
    } else {
      errors.push_back({"genotype.grs", "must be a finite number"});
    }
  }
}

ordered_json error_body(int status, const std::vector<FieldError>& errors) {
  ordered_json body;
  body["status"] = status;
  ordered_json list = ordered_json::array();
  for (const auto& e : errors) list.push_back({{"field", e.field}, {"message", e.message}});
  body["errors"] = std::move(list);
  return body;
}

HttpResponse json_response(int status, const ordered_json& body) {
  return {status, "application/json", body.dump()};
}

}  // namespace

double wire_probability(double probability) { return std::round(probability * 1e6) / 1e6; }

ParsedRequest parse_predict_request(std::string_view body) {
  ParsedRequest out;
  auto& errors = out.errors;
  json doc = json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    errors.push_back({"body", "must be a JSON object"});
    return out;
  }

  PredictRequest req;
  Participant& s = req.subject;
  s.id = "request";

  if (!doc.contains("age") || !doc.at("age").is_number()) {
    errors.push_back({"age", "is required and must be a number"});
  } else {
    s.age = doc.at("age").get<double>();
    if (!(s.age > 0.0 && s.age < 130.0)) errors.push_back({"age", "must lie in (0, 130)"});
  }

  if (!doc.contains("smoking") || !doc.at("smoking").is_string()) {
    errors.push_back({"smoking", "is required and must be a string"});
  } else if (auto v = parse_smoking(doc.at("smoking").get<std::string>())) {
    s.smoking = *v;
  } else {
    errors.push_back({"smoking", "must be one of never, former, current"});
  }

  if (doc.contains("grades") && !doc.at("grades").is_null()) {
    const auto& g = doc.at("grades");
    if (!g.is_object() || !g.contains("left") || !g.contains("right")) {
      errors.push_back({"grades", "must be an object with left and right eyes"});
    } else {
      parse_eye(g.at("left"), "grades.left", s.left_eye, errors);
      parse_eye(g.at("right"), "grades.right", s.right_eye, errors);
      req.has_grades = true;
    }
  }

  if (doc.contains("deep_features") && !doc.at("deep_features").is_null()) {
    const auto& f = doc.at("deep_features");
    if (!f.is_array() || f.size() != kDeepFeatureCount) {
      errors.push_back({"deep_features", "must be an array of " +
                                             std::to_string(kDeepFeatureCount) + " numbers"});
    } else {
      std::vector<double> values;
      values.reserve(kDeepFeatureCount);
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (!f[i].is_number() || !std::isfinite(f[i].get<double>())) {
          errors.push_back({"deep_features", "element " + std::to_string(i) +
                                                 " is not a finite number"});
          break;
        }
        values.push_back(f[i].get<double>());
      }
      if (values.size() == kDeepFeatureCount) s.deep_features = std::move(values);
    }
  }

  if (doc.contains("genotype") && !doc.at("genotype").is_null()) {
    parse_genotype(doc.at("genotype"), s.genotype, errors);
  }

  if (doc.contains("horizons") && !doc.at("horizons").is_null()) {
    const auto& h = doc.at("horizons");
    if (!h.is_array() || h.empty()) {
      errors.push_back({"horizons", "must be a nonempty array of integers in 1..12"});
    } else {
      for (const auto& v : h) {
        if (!v.is_number_integer() || v.get<long long>() < kMinHorizon ||
            v.get<long long>() > kMaxHorizon) {
          errors.push_back({"horizons", "must be a nonempty array of integers in 1..12"});
          break;
        }
        req.horizons.push_back(v.get<int>());
      }
    }
  } else {
    for (int h = kMinHorizon; h <= kMaxHorizon; ++h) req.horizons.push_back(h);
  }

  if (doc.contains("endpoints") && !doc.at("endpoints").is_null()) {
    const auto& e = doc.at("endpoints");
    if (!e.is_array() || e.empty()) {
      errors.push_back({"endpoints", "must be a nonempty array of endpoint names"});
    } else {
      for (const auto& v : e) {
        auto parsed = v.is_string() ? parse_endpoint(v.get<std::string>()) : std::nullopt;
        if (!parsed) {
          errors.push_back({"endpoints", "unknown endpoint " + v.dump()});
          break;
        }
        req.endpoints.push_back(*parsed);
      }
    }
  }

  if (!req.has_grades && !s.deep_features && errors.empty()) {
    errors.push_back({"grades", "a request needs grades or deep_features"});
  }
  if (errors.empty()) out.request = std::move(req);
  return out;
}

std::vector<FieldError> check_compatibility(const ModelSet& models, const PredictRequest& request) {
  std::vector<FieldError> errors;
  const auto& s = request.subject;
  for (Endpoint e : request.endpoints) {
    if (!models.models.contains(e)) {
      errors.push_back({"endpoints", "no model loaded for " + std::string(to_string(e))});
    }
  }
  bool need_features = false;
  bool need_grades = false;
  std::vector<std::string> genotype_fields;
  for (const auto& [endpoint, model] : models.models) {
    for (const auto& name : model.cox.covariate_names) {
      if (is_feature_covariate(name)) {
        need_features = true;
      } else if (name.starts_with("drusen_") || name.starts_with("pig_")) {
        need_grades = true;
      } else if ((name == "cfh" && !s.genotype.cfh) || (name == "arms2" && !s.genotype.arms2) ||
                 (name == "grs" && !s.genotype.grs)) {
        genotype_fields.push_back("genotype." + name);
      }
    }
  }
  if (need_features && !s.deep_features) {
    errors.push_back({"deep_features", "the loaded model uses deep features"});
  }
  if (need_grades && !request.has_grades) {
    errors.push_back({"grades", "the loaded model uses drusen and pigment grades"});
  }
  for (const auto& field : genotype_fields) {
    bool seen = false;
    for (const auto& e : errors) seen = seen || e.field == field;
    if (!seen) errors.push_back({field, "the loaded model uses this genotype"});
  }
  return errors;
}

std::string prediction_response(const ModelSet& models, const PredictRequest& request) {
  std::vector<Endpoint> endpoints = request.endpoints;
  if (endpoints.empty()) endpoints = models.endpoints();
  const RiskProfile profile = models.predict(request.subject, request.horizons, endpoints);

  ordered_json body;
  ordered_json predictions = ordered_json::object();
  for (Endpoint e : endpoints) {
    ordered_json rows = ordered_json::array();
    for (const auto& r : profile.endpoints.at(e)) {
      rows.push_back({{"horizon", r.horizon_years},
                      {"probability", wire_probability(r.probability)},
                      {"extrapolated", r.extrapolated}});
    }
    predictions[std::string(to_string(e))] = std::move(rows);
  }
  body["predictions"] = std::move(predictions);
  if (request.has_grades) {
    const auto sss = sss_assess(request.subject.left_eye, request.subject.right_eye, models.risk_table);
    body["sss"] = {{"score", sss.score}, {"five_year_risk", sss.five_year_risk}};
  }
  return body.dump();
}

PredictionService::PredictionService(ModelSet models)
    : models_(std::make_shared<const ModelSet>(std::move(models))) {}

void PredictionService::reload(ModelSet models) {
  auto next = std::make_shared<const ModelSet>(std::move(models));
  std::lock_guard lock(mutex_);
  models_ = std::move(next);
}

void PredictionService::unload() {
  std::lock_guard lock(mutex_);
  models_.reset();
}

bool PredictionService::loaded() const { return snapshot() != nullptr; }

std::shared_ptr<const ModelSet> PredictionService::snapshot() const {
  std::lock_guard lock(mutex_);
  return models_;
}

HttpResponse PredictionService::health() const {
  return {200, "text/plain", "ok"};
}

HttpResponse PredictionService::model_info() const {
  const auto models = snapshot();
  if (!models) return json_response(503, error_body(503, {{"model", "no model loaded"}}));

  ordered_json body;
  body["feature_mode"] = std::string(to_string(models->feature_mode()));
  body["genotype_mode"] = std::string(to_string(models->genotype_mode()));
  ordered_json endpoints = ordered_json::array();
  for (Endpoint e : models->endpoints()) endpoints.push_back(std::string(to_string(e)));
  body["endpoints"] = std::move(endpoints);
  ordered_json horizons = ordered_json::array();
  for (int h = kMinHorizon; h <= kMaxHorizon; ++h) horizons.push_back(h);
  body["horizons_supported"] = std::move(horizons);
  ordered_json per_model = ordered_json::object();
  for (const auto& [endpoint, model] : models->models) {
    ordered_json m;
    m["covariate_names"] = model.cox.covariate_names;
    m["beta"] = std::vector<double>(model.cox.beta.data(), model.cox.beta.data() + model.cox.beta.size());
    m["tie_method"] = std::string(to_string(model.cox.tie_method));
    m["train_fingerprint"] = model.cox.train_fingerprint;
    per_model[std::string(to_string(endpoint))] = std::move(m);
  }
  body["models"] = std::move(per_model);
  body["risk_table"] = ordered_json::parse(models->risk_table.to_json());
  return json_response(200, body);
}

HttpResponse PredictionService::predict(std::string_view body) const {
  const auto models = snapshot();
  if (!models) return json_response(503, error_body(503, {{"model", "no model loaded"}}));

  auto parsed = parse_predict_request(body);
  if (!parsed.request) return json_response(400, error_body(400, parsed.errors));
  auto mismatch = check_compatibility(*models, *parsed.request);
  if (!mismatch.empty()) return json_response(422, error_body(422, mismatch));
  try {
    return {200, "application/json", prediction_response(*models, *parsed.request)};
  } catch (const Error& e) {
    const int status = error_category(e.kind()) == ErrorCategory::Validation ? 422 : 500;
    return json_response(status, error_body(status, {{"request", e.what()}}));
  }
}

}  // namespace prognos
