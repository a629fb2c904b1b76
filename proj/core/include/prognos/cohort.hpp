#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace prognos {

/// Number of deep-feature columns per participant (128 per grading model per eye).
inline constexpr std::size_t kDeepFeatureCount = 512;

enum class Drusen { NoneSmall, Medium, Large };
enum class Pigment { Absent, Present };
enum class Smoking { Never, Former, Current };
enum class Cfh { TT, CT, CC };
enum class Arms2 { GG, GT, TT };

/// Progression endpoints. LateAmdCentralGa is the NV-or-central-GA variant used
/// when scoring the severity scale; it is only populated when the input carries it.
enum class Endpoint { LateAmd, Ga, Nv, LateAmdCentralGa };

inline constexpr std::array<Endpoint, 3> kModelEndpoints{Endpoint::LateAmd, Endpoint::Ga,
                                                         Endpoint::Nv};

struct EyeGrade {
  Drusen drusen = Drusen::NoneSmall;
  Pigment pigment = Pigment::Absent;

  friend bool operator==(const EyeGrade&, const EyeGrade&) = default;
};

struct Genotype {
  std::optional<Cfh> cfh;
  std::optional<Arms2> arms2;
  std::optional<double> grs;

  friend bool operator==(const Genotype&, const Genotype&) = default;
};

struct Outcome {
  double time_years = 0.0;
  bool event = false;

  friend bool operator==(const Outcome&, const Outcome&) = default;
};

struct Participant {
  std::string id;
  double age = 0.0;
  Smoking smoking = Smoking::Never;
  Genotype genotype;
  EyeGrade left_eye;
  EyeGrade right_eye;
  std::optional<std::vector<double>> deep_features;
  std::map<Endpoint, Outcome> outcomes;

  friend bool operator==(const Participant&, const Participant&) = default;
};

struct Cohort {
  std::vector<Participant> participants;
  std::string schema_version = "1";

  std::size_t size() const noexcept { return participants.size(); }
  bool empty() const noexcept { return participants.empty(); }
  bool has_deep_features() const noexcept;
  bool has_endpoint(Endpoint endpoint) const noexcept;

  friend bool operator==(const Cohort&, const Cohort&) = default;
};

// Text codes used in CSV, JSON and CLI flags.
std::string_view to_string(Drusen v) noexcept;
std::string_view to_string(Pigment v) noexcept;
std::string_view to_string(Smoking v) noexcept;
std::string_view to_string(Cfh v) noexcept;
std::string_view to_string(Arms2 v) noexcept;
/// snake_case endpoint name: late_amd, ga, nv, late_amd_cga.
std::string_view to_string(Endpoint v) noexcept;

// Parsers accept the text codes case-insensitively and the integer level codes.
std::optional<Drusen> parse_drusen(std::string_view text);
std::optional<Pigment> parse_pigment(std::string_view text);
std::optional<Smoking> parse_smoking(std::string_view text);
std::optional<Cfh> parse_cfh(std::string_view text);
std::optional<Arms2> parse_arms2(std::string_view text);
/// Accepts snake_case and kebab-case names (late_amd, late-amd).
std::optional<Endpoint> parse_endpoint(std::string_view text);

/// CSV column suffix for an endpoint's time/event pair ("lateamd", "ga", "nv", "lateamd_cga").
std::string_view endpoint_column_suffix(Endpoint endpoint) noexcept;

/// Maps canonical column names to the headers used in a particular file.
struct ColumnMap {
  std::map<std::string, std::string> renames;
  std::string feature_prefix = "f";

  std::string header_for(std::string_view canonical) const;
  /// Reads a JSON sidecar of the form {"columns": {"id": "PatientID", ...}, "feature_prefix": "df_"}.
  /// A flat object of renames is also accepted.
  static ColumnMap from_json(std::string_view json_text);
};

Cohort parse_cohort(std::string_view csv_text, const ColumnMap& schema = {});
std::string serialize_cohort(const Cohort& cohort);

Cohort read_cohort_file(const std::string& path, const ColumnMap& schema = {});

struct SplitRatios {
  double train = 0.70;
  double dev = 0.10;
  double test = 0.20;
};

struct CohortSplit {
  Cohort train;
  Cohort dev;
  Cohort test;
};

/// Seeded uniform shuffle followed by a contiguous cut of floor(train*n), floor(dev*n), remainder.
CohortSplit split_cohort(const Cohort& cohort, const SplitRatios& ratios, std::uint64_t seed);

/// Per-column standardization parameters. Constant columns carry sd = 1.
struct Normalization {
  std::vector<double> mean;
  std::vector<double> sd;
  std::vector<bool> constant;

  std::size_t size() const noexcept { return mean.size(); }
  std::vector<std::size_t> constant_columns() const;
  double apply(std::size_t column, double value) const { return (value - mean[column]) / sd[column]; }

  friend bool operator==(const Normalization&, const Normalization&) = default;
};

inline constexpr double kConstantColumnSd = 1e-12;

/// Fits population mean/sd of each column.
Normalization fit_normalization(const std::vector<std::vector<double>>& columns);

Normalization zscore_fit(const Cohort& train);
Cohort zscore_apply(const Normalization& norm, const Cohort& cohort);

}  // namespace prognos
