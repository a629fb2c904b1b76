#include "prognos/clinical.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "prognos/covariates.hpp"
#include "prognos/errors.hpp"

namespace prognos {

int sss_score(const EyeGrade& left, const EyeGrade& right, bool modifier_bilateral_medium) {
  int score = 0;
  for (const EyeGrade* eye : {&left, &right}) {
    if (eye->drusen == Drusen::Large) ++score;
    if (eye->pigment == Pigment::Present) ++score;
  }
  if (modifier_bilateral_medium && left.drusen == Drusen::Medium &&
      right.drusen == Drusen::Medium) {
    ++score;
  }
  return std::min(score, 4);
}

RiskTable::RiskTable() : entries_{0.005, 0.03, 0.12, 0.25, 0.50} {}

RiskTable::RiskTable(const std::array<double, 5>& entries) : entries_(entries) {
  for (std::size_t s = 0; s < entries.size(); ++s) {
    if (!(entries[s] >= 0.0 && entries[s] <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument,
                  "risk for score " + std::to_string(s) + " must lie in [0, 1]");
    }
    if (s > 0 && !(entries[s] > entries[s - 1])) {
      throw Error(ErrorKind::InvalidArgument, "risk table must strictly increase with the score");
    }
  }
}

RiskTable RiskTable::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("risk table is not valid JSON: ") + e.what());
  }
  std::array<double, 5> entries{};
  for (int s = 0; s < 5; ++s) {
    const std::string key = std::to_string(s);
    if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_number()) {
      throw Error(ErrorKind::InvalidArgument, "risk table needs a numeric entry for score " + key);
    }
    entries[static_cast<std::size_t>(s)] = doc.at(key).get<double>();
  }
  return RiskTable(entries);
}

std::string RiskTable::to_json() const {
  nlohmann::ordered_json doc;
  for (std::size_t s = 0; s < entries_.size(); ++s) doc[std::to_string(s)] = entries_[s];
  return doc.dump();
}

double sss_risk(int score, const RiskTable& table) {
  if (score < 0 || score > 4) {
    throw Error(ErrorKind::ScoreOutOfRange,
                "severity score " + std::to_string(score) + " is outside 0..4");
  }
  return table.entries()[static_cast<std::size_t>(score)];
}

SSSResult sss_assess(const EyeGrade& left, const EyeGrade& right, const RiskTable& table,
                     bool modifier_bilateral_medium) {
  SSSResult out;
  out.score = sss_score(left, right, modifier_bilateral_medium);
  out.five_year_risk = sss_risk(out.score, table);
  return out;
}

std::vector<std::string> calculator_covariate_names(bool with_genotype) {
  return clinical_covariate_names(FeatureMode::Calculator,
                                  with_genotype ? GenotypeMode::Snps : GenotypeMode::None);
}

std::vector<double> calculator_covariates(const Participant& participant, bool with_genotype) {
  return covariate_vector(participant, calculator_covariate_names(with_genotype));
}

}  // namespace prognos
