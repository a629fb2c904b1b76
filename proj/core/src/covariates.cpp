#include "prognos/covariates.hpp"

#include <algorithm>

#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

std::string_view to_string(FeatureMode mode) noexcept {
  switch (mode) {
    case FeatureMode::DeepFeatures: return "deep_features";
    case FeatureMode::DlGrading: return "dl_grading";
    case FeatureMode::Calculator: return "calculator";
    case FeatureMode::Sss: return "sss";
  }
  return "";
}

std::string_view to_string(GenotypeMode mode) noexcept {
  switch (mode) {
    case GenotypeMode::None: return "none";
    case GenotypeMode::Snps: return "snps";
    case GenotypeMode::Grs: return "grs";
  }
  return "";
}

std::optional<FeatureMode> parse_feature_mode(std::string_view text) {
  std::string s = detail::lowercase(detail::trim(text));
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "deep" || s == "deep_features") return FeatureMode::DeepFeatures;
  if (s == "grading" || s == "dl_grading") return FeatureMode::DlGrading;
  if (s == "calculator") return FeatureMode::Calculator;
  if (s == "sss") return FeatureMode::Sss;
  return std::nullopt;
}

std::optional<GenotypeMode> parse_genotype_mode(std::string_view text) {
  const std::string s = detail::lowercase(detail::trim(text));
  if (s == "none") return GenotypeMode::None;
  if (s == "snps") return GenotypeMode::Snps;
  if (s == "grs") return GenotypeMode::Grs;
  return std::nullopt;
}

namespace {

constexpr std::string_view kClinicalNames[] = {
    "age",    "smoking_former", "smoking_current", "cfh",       "arms2",
    "grs",    "drusen_le",      "drusen_re",       "pig_le",    "pig_re"};

std::optional<std::size_t> feature_index(std::string_view name) {
  if (name.size() < 2 || name.front() != 'f') return std::nullopt;
  auto idx = detail::parse_integer(name.substr(1));
  if (!idx || *idx < 0 || name[1] == '+' || name[1] == '-') return std::nullopt;
  return static_cast<std::size_t>(*idx);
}

double drusen_level(Drusen d) {
  switch (d) {
    case Drusen::NoneSmall: return 0.0;
    case Drusen::Medium: return 1.0;
    case Drusen::Large: return 2.0;
  }
  return 0.0;
}

}  // namespace

bool is_feature_covariate(std::string_view name) { return feature_index(name).has_value(); }

bool is_known_covariate(std::string_view name) {
  if (auto idx = feature_index(name)) return *idx < kDeepFeatureCount;
  return std::find(std::begin(kClinicalNames), std::end(kClinicalNames), name) !=
         std::end(kClinicalNames);
}

double covariate_value(const Participant& p, std::string_view name) {
  if (auto idx = feature_index(name)) {
    if (!p.deep_features) {
      throw Error(ErrorKind::NoFeatures, "participant '" + p.id + "' lacks deep features");
    }
    if (*idx >= p.deep_features->size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "covariate '" + std::string(name) + "' is beyond the feature vector of '" +
                      p.id + "'");
    }
    return (*p.deep_features)[*idx];
  }
  if (name == "age") return p.age;
  if (name == "smoking_former") return p.smoking == Smoking::Former ? 1.0 : 0.0;
  if (name == "smoking_current") return p.smoking == Smoking::Current ? 1.0 : 0.0;
  if (name == "cfh") {
    if (!p.genotype.cfh) {
      throw Error(ErrorKind::MissingGenotype, "participant '" + p.id + "' has no value for 'cfh'");
    }
    return static_cast<double>(static_cast<int>(*p.genotype.cfh));
  }
  if (name == "arms2") {
    if (!p.genotype.arms2) {
      throw Error(ErrorKind::MissingGenotype,
                  "participant '" + p.id + "' has no value for 'arms2'");
    }
    return static_cast<double>(static_cast<int>(*p.genotype.arms2));
  }
  if (name == "grs") {
    if (!p.genotype.grs) {
      throw Error(ErrorKind::MissingGenotype, "participant '" + p.id + "' has no value for 'grs'");
    }
    return *p.genotype.grs;
  }
  if (name == "drusen_le") return drusen_level(p.left_eye.drusen);
  if (name == "drusen_re") return drusen_level(p.right_eye.drusen);
  if (name == "pig_le") return p.left_eye.pigment == Pigment::Present ? 1.0 : 0.0;
  if (name == "pig_re") return p.right_eye.pigment == Pigment::Present ? 1.0 : 0.0;
  throw Error(ErrorKind::InvalidArgument, "unknown covariate '" + std::string(name) + "'");
}

std::vector<double> covariate_vector(const Participant& participant,
                                     const std::vector<std::string>& names) {
  std::vector<double> out;
  out.reserve(names.size());
  for (const auto& name : names) out.push_back(covariate_value(participant, name));
  return out;
}

Eigen::MatrixXd design_matrix(const Cohort& cohort, const std::vector<std::string>& names) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(cohort.size()),
                    static_cast<Eigen::Index>(names.size()));
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          covariate_value(cohort.participants[i], names[j]);
    }
  }
  return x;
}

std::vector<std::string> clinical_covariate_names(FeatureMode mode, GenotypeMode genotype) {
  std::vector<std::string> names;
  switch (mode) {
    case FeatureMode::DeepFeatures:
      names = {"age", "smoking_former", "smoking_current"};
      break;
    case FeatureMode::DlGrading:
    case FeatureMode::Calculator:
      names = {"drusen_le", "drusen_re", "pig_le", "pig_re",
               "age",       "smoking_former", "smoking_current"};
      break;
    case FeatureMode::Sss:
      throw Error(ErrorKind::InvalidArgument,
                  "the severity scale is a fixed points table and has no trainable covariates");
  }
  if (genotype == GenotypeMode::Snps) {
    names.insert(names.end(), {"cfh", "arms2"});
  } else if (genotype == GenotypeMode::Grs) {
    if (mode == FeatureMode::Calculator) {
      throw Error(ErrorKind::InvalidArgument,
                  "the calculator covariate set accepts CFH/ARMS2 only, not the GRS");
    }
    names.emplace_back("grs");
  }
  return names;
}

}  // namespace prognos
