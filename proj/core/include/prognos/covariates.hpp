#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "prognos/cohort.hpp"

namespace prognos {

enum class FeatureMode { DeepFeatures, DlGrading, Calculator, Sss };
enum class GenotypeMode { None, Snps, Grs };

std::string_view to_string(FeatureMode mode) noexcept;
std::string_view to_string(GenotypeMode mode) noexcept;
/// Accepts the long names (deep_features, dl_grading) and the CLI short forms (deep, grading).
std::optional<FeatureMode> parse_feature_mode(std::string_view text);
std::optional<GenotypeMode> parse_genotype_mode(std::string_view text);

/// Covariate naming scheme. Each name identifies how the value is read from a Participant:
///   f<k>             deep feature k
///   age              age in years
///   smoking_former   indicator, never smokers are the reference
///   smoking_current  indicator
///   cfh              CFH rs1061170 allele count (TT=0, CT=1, CC=2)
///   arms2            ARMS2 rs10490924 allele count (GG=0, GT=1, TT=2)
///   grs              genetic risk score
///   drusen_le/_re    drusen level 0/1/2
///   pig_le/_re       pigmentary abnormality 0/1
bool is_feature_covariate(std::string_view name);
bool is_known_covariate(std::string_view name);

/// Reads one covariate on its raw scale. Throws MissingGenotype or NoFeatures when the
/// participant lacks the underlying field.
double covariate_value(const Participant& participant, std::string_view name);

std::vector<double> covariate_vector(const Participant& participant,
                                     const std::vector<std::string>& names);

/// Raw (unstandardized) design matrix, one row per participant.
Eigen::MatrixXd design_matrix(const Cohort& cohort, const std::vector<std::string>& names);

/// Non-feature covariates for a mode: demographics, grades, genotype.
std::vector<std::string> clinical_covariate_names(FeatureMode mode, GenotypeMode genotype);

inline std::string feature_covariate_name(std::size_t index) { return "f" + std::to_string(index); }

}  // namespace prognos
