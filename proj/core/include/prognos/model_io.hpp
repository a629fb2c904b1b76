#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prognos/clinical.hpp"
#include "prognos/cohort.hpp"
#include "prognos/covariates.hpp"
#include "prognos/cox.hpp"
#include "prognos/prediction.hpp"

namespace prognos {

inline constexpr std::string_view kModelSchemaVersion = "1";

struct SplitSpec {
  SplitRatios ratios;
  std::uint64_t seed = 42;
};

/// Everything needed to turn a participant into absolute risks for one endpoint.
struct PrognosisModel {
  CoxModel cox;
  BaselineSurvival baseline;
  FeatureMode feature_mode = FeatureMode::DeepFeatures;
  GenotypeMode genotype_mode = GenotypeMode::None;
  std::optional<SplitSpec> split;
  std::optional<double> lambda;

  Endpoint endpoint() const noexcept { return cox.endpoint; }
  double linear_predictor(const Participant& participant) const {
    return cox.participant_linear_predictor(participant);
  }
  ProgressionEstimate progression(const Participant& participant, double horizon_years) const {
    return progression_at(baseline, linear_predictor(participant), horizon_years);
  }
};

/// JSON model document. Numbers are written in shortest round-trip form.
std::string model_to_json(const PrognosisModel& model);
PrognosisModel model_from_json(std::string_view json_text);

void save_model(const PrognosisModel& model, const std::string& path);
PrognosisModel load_model(const std::string& path);

/// Models for several endpoints that share a feature mode, plus the severity-scale table.
struct ModelSet {
  std::map<Endpoint, PrognosisModel> models;
  RiskTable risk_table;

  FeatureMode feature_mode() const;
  GenotypeMode genotype_mode() const;
  std::vector<Endpoint> endpoints() const;
  const PrognosisModel& at(Endpoint endpoint) const;

  /// Progression probabilities per endpoint and horizon. Throws InvalidArgument for horizons
  /// outside 1..12 and ModelDataMismatch for endpoints that are not loaded.
  RiskProfile predict(const Participant& subject, std::span<const int> horizons,
                      std::span<const Endpoint> endpoints) const;
};

/// Manifest: {"schema_version":"1","models":{"late_amd":"late_amd.json",...},"risk_table":{...}}.
/// Model paths are resolved relative to the manifest's directory.
ModelSet load_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::map<Endpoint, std::string>& model_files,
                    const RiskTable& table = RiskTable());

/// Loads either a single model document or a manifest.
ModelSet load_models(const std::string& path);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view text);

}  // namespace prognos
