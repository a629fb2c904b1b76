#include "prognos/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

using detail::lowercase;
using detail::trim;

bool Cohort::has_deep_features() const noexcept {
  return !participants.empty() && participants.front().deep_features.has_value();
}

bool Cohort::has_endpoint(Endpoint endpoint) const noexcept {
  return !participants.empty() && participants.front().outcomes.contains(endpoint);
}

std::string_view to_string(Drusen v) noexcept {
  switch (v) {
    case Drusen::NoneSmall: return "none_small";
    case Drusen::Medium: return "medium";
    case Drusen::Large: return "large";
  }
  return "";
}

std::string_view to_string(Pigment v) noexcept {
  return v == Pigment::Present ? "present" : "absent";
}

std::string_view to_string(Smoking v) noexcept {
  switch (v) {
    case Smoking::Never: return "never";
    case Smoking::Former: return "former";
    case Smoking::Current: return "current";
  }
  return "";
}

std::string_view to_string(Cfh v) noexcept {
  switch (v) {
    case Cfh::TT: return "TT";
    case Cfh::CT: return "CT";
    case Cfh::CC: return "CC";
  }
  return "";
}

std::string_view to_string(Arms2 v) noexcept {
  switch (v) {
    case Arms2::GG: return "GG";
    case Arms2::GT: return "GT";
    case Arms2::TT: return "TT";
  }
  return "";
}

std::string_view to_string(Endpoint v) noexcept {
  switch (v) {
    case Endpoint::LateAmd: return "late_amd";
    case Endpoint::Ga: return "ga";
    case Endpoint::Nv: return "nv";
    case Endpoint::LateAmdCentralGa: return "late_amd_cga";
  }
  return "";
}

std::string_view endpoint_column_suffix(Endpoint endpoint) noexcept {
  switch (endpoint) {
    case Endpoint::LateAmd: return "lateamd";
    case Endpoint::Ga: return "ga";
    case Endpoint::Nv: return "nv";
    case Endpoint::LateAmdCentralGa: return "lateamd_cga";
  }
  return "";
}

std::optional<Drusen> parse_drusen(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "none_small" || s == "nonesmall" || s == "none/small" || s == "none" || s == "small" ||
      s == "0")
    return Drusen::NoneSmall;
  if (s == "medium" || s == "1") return Drusen::Medium;
  if (s == "large" || s == "2") return Drusen::Large;
  return std::nullopt;
}

std::optional<Pigment> parse_pigment(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "absent" || s == "0" || s == "no") return Pigment::Absent;
  if (s == "present" || s == "1" || s == "yes") return Pigment::Present;
  return std::nullopt;
}

std::optional<Smoking> parse_smoking(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "never" || s == "0") return Smoking::Never;
  if (s == "former" || s == "1") return Smoking::Former;
  if (s == "current" || s == "2") return Smoking::Current;
  return std::nullopt;
}

std::optional<Cfh> parse_cfh(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "tt" || s == "0") return Cfh::TT;
  if (s == "ct" || s == "tc" || s == "1") return Cfh::CT;
  if (s == "cc" || s == "2") return Cfh::CC;
  return std::nullopt;
}

std::optional<Arms2> parse_arms2(std::string_view text) {
  const std::string s = lowercase(trim(text));
  if (s == "gg" || s == "0") return Arms2::GG;
  if (s == "gt" || s == "tg" || s == "1") return Arms2::GT;
  if (s == "tt" || s == "2") return Arms2::TT;
  return std::nullopt;
}

std::optional<Endpoint> parse_endpoint(std::string_view text) {
  std::string s = lowercase(trim(text));
  std::replace(s.begin(), s.end(), '-', '_');
  if (s == "late_amd" || s == "lateamd") return Endpoint::LateAmd;
  if (s == "ga") return Endpoint::Ga;
  if (s == "nv") return Endpoint::Nv;
  if (s == "late_amd_cga" || s == "lateamd_cga") return Endpoint::LateAmdCentralGa;
  return std::nullopt;
}

std::string ColumnMap::header_for(std::string_view canonical) const {
  if (auto it = renames.find(std::string(canonical)); it != renames.end()) return it->second;
  return std::string(canonical);
}

ColumnMap ColumnMap::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("column map is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::InvalidArgument, "column map must be a JSON object");
  ColumnMap map;
  const nlohmann::json* columns = &doc;
  if (doc.contains("columns")) columns = &doc.at("columns");
  if (doc.contains("feature_prefix")) map.feature_prefix = doc.at("feature_prefix").get<std::string>();
  for (const auto& [key, value] : columns->items()) {
    if (key == "columns" || key == "feature_prefix") continue;
    if (!value.is_string()) {
      throw Error(ErrorKind::InvalidArgument, "column map entry '" + key + "' must be a string");
    }
    map.renames[key] = value.get<std::string>();
  }
  return map;
}

namespace {

struct FieldRef {
  std::size_t line;
  const std::string& column;
  std::string_view value;
};

[[noreturn]] void out_of_range(const FieldRef& f, std::string_view what) {
  throw Error(ErrorKind::OutOfRangeValue, "line " + std::to_string(f.line) + ", column '" +
                                              f.column + "': value '" + std::string(f.value) +
                                              "' " + std::string(what));
}

double finite_real(const FieldRef& f) {
  auto v = detail::parse_double(f.value);
  if (!v || !std::isfinite(*v)) out_of_range(f, "is not a finite number");
  return *v;
}

template <class T, class Parser>
T enum_field(const FieldRef& f, Parser parser, std::string_view expected) {
  auto v = parser(f.value);
  if (!v) out_of_range(f, "is not one of " + std::string(expected));
  return *v;
}

struct Layout {
  std::size_t id, age, smoking, drusen_le, drusen_re, pig_le, pig_re;
  std::optional<std::size_t> cfh, arms2, grs;
  std::vector<std::size_t> features;
  std::vector<std::pair<Endpoint, std::pair<std::size_t, std::size_t>>> endpoints;
  std::vector<std::string> names;  // header name per index
};

Layout resolve_layout(const std::vector<std::string>& header, const ColumnMap& schema) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < header.size(); ++i) index.emplace(std::string(trim(header[i])), i);

  Layout layout;
  layout.names.reserve(header.size());
  for (const auto& h : header) layout.names.emplace_back(trim(h));

  auto find = [&](std::string_view canonical) -> std::optional<std::size_t> {
    auto it = index.find(schema.header_for(canonical));
    if (it == index.end()) return std::nullopt;
    return it->second;
  };
  auto require = [&](std::string_view canonical) {
    auto i = find(canonical);
    if (!i) {
      throw Error(ErrorKind::MissingColumn,
                  "header has no column '" + schema.header_for(canonical) + "'");
    }
    return *i;
  };

  layout.id = require("id");
  layout.age = require("age");
  layout.smoking = require("smoking");
  layout.drusen_le = require("drusen_le");
  layout.drusen_re = require("drusen_re");
  layout.pig_le = require("pig_le");
  layout.pig_re = require("pig_re");
  layout.cfh = find("cfh");
  layout.arms2 = find("arms2");
  layout.grs = find("grs");

  bool any_feature = false;
  for (const auto& h : layout.names) {
    if (h.size() > schema.feature_prefix.size() && h.starts_with(schema.feature_prefix) &&
        std::all_of(h.begin() + static_cast<std::ptrdiff_t>(schema.feature_prefix.size()), h.end(),
                    [](char c) { return c >= '0' && c <= '9'; })) {
      any_feature = true;
      break;
    }
  }
  if (any_feature) {
    layout.features.reserve(kDeepFeatureCount);
    for (std::size_t k = 0; k < kDeepFeatureCount; ++k) {
      const std::string name = schema.feature_prefix + std::to_string(k);
      auto it = index.find(name);
      if (it == index.end()) {
        throw Error(ErrorKind::MissingColumn,
                    "deep-feature block is incomplete: header has no column '" + name + "'");
      }
      layout.features.push_back(it->second);
    }
  }

  for (Endpoint e : {Endpoint::LateAmd, Endpoint::Ga, Endpoint::Nv, Endpoint::LateAmdCentralGa}) {
    const std::string suffix(endpoint_column_suffix(e));
    auto t = find("time_" + suffix);
    auto ev = find("event_" + suffix);
    if (t && ev) {
      layout.endpoints.push_back({e, {*t, *ev}});
    } else if (t || ev) {
      throw Error(ErrorKind::MissingColumn,
                  "header has no column '" + schema.header_for((t ? "event_" : "time_") + suffix) +
                      "'");
    }
  }
  return layout;
}

}  // namespace

Cohort parse_cohort(std::string_view csv_text, const ColumnMap& schema) {
  const auto lines = detail::split_lines(csv_text);
  std::size_t header_line = 0;
  while (header_line < lines.size() && trim(lines[header_line]).empty()) ++header_line;
  if (header_line == lines.size()) throw Error(ErrorKind::MissingColumn, "input has no header row");

  const auto header = detail::split_csv_record(lines[header_line]);
  const Layout layout = resolve_layout(header, schema);

  Cohort cohort;
  std::unordered_set<std::string> seen;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    if (trim(lines[li]).empty()) continue;
    const std::size_t line_no = li + 1;
    const auto fields = detail::split_csv_record(lines[li]);
    if (fields.size() != header.size()) {
      throw Error(ErrorKind::MissingColumn, "line " + std::to_string(line_no) + " has " +
                                                std::to_string(fields.size()) +
                                                " fields but the header has " +
                                                std::to_string(header.size()));
    }
    auto field = [&](std::size_t col) {
      return FieldRef{line_no, layout.names[col], trim(fields[col])};
    };

    Participant p;
    p.id = std::string(trim(fields[layout.id]));
    if (p.id.empty()) out_of_range(field(layout.id), "is empty");
    if (!seen.insert(p.id).second) {
      throw Error(ErrorKind::DuplicateId,
                  "line " + std::to_string(line_no) + ", column '" + layout.names[layout.id] +
                      "': id '" + p.id + "' appears more than once");
    }

    p.age = finite_real(field(layout.age));
    if (p.age <= 0.0 || p.age >= 130.0) out_of_range(field(layout.age), "is not a plausible age");
    p.smoking = enum_field<Smoking>(field(layout.smoking), parse_smoking, "never/former/current");
    p.left_eye.drusen =
        enum_field<Drusen>(field(layout.drusen_le), parse_drusen, "none_small/medium/large");
    p.right_eye.drusen =
        enum_field<Drusen>(field(layout.drusen_re), parse_drusen, "none_small/medium/large");
    p.left_eye.pigment = enum_field<Pigment>(field(layout.pig_le), parse_pigment, "absent/present");
    p.right_eye.pigment = enum_field<Pigment>(field(layout.pig_re), parse_pigment, "absent/present");

    if (layout.cfh && !trim(fields[*layout.cfh]).empty()) {
      p.genotype.cfh = enum_field<Cfh>(field(*layout.cfh), parse_cfh, "TT/CT/CC");
    }
    if (layout.arms2 && !trim(fields[*layout.arms2]).empty()) {
      p.genotype.arms2 = enum_field<Arms2>(field(*layout.arms2), parse_arms2, "GG/GT/TT");
    }
    if (layout.grs && !trim(fields[*layout.grs]).empty()) {
      p.genotype.grs = finite_real(field(*layout.grs));
    }

    if (!layout.features.empty()) {
      std::vector<double> features;
      features.reserve(layout.features.size());
      for (std::size_t col : layout.features) features.push_back(finite_real(field(col)));
      p.deep_features = std::move(features);
    }

    for (const auto& [endpoint, cols] : layout.endpoints) {
      Outcome o;
      const auto tf = field(cols.first);
      o.time_years = finite_real(tf);
      if (!(o.time_years > 0.0)) out_of_range(tf, "must be a positive time in years");
      const auto ef = field(cols.second);
      auto ev = detail::parse_integer(ef.value);
      if (!ev || (*ev != 0 && *ev != 1)) out_of_range(ef, "must be 0 or 1");
      o.event = *ev == 1;
      p.outcomes.emplace(endpoint, o);
    }
    cohort.participants.push_back(std::move(p));
  }
  return cohort;
}

std::string serialize_cohort(const Cohort& cohort) {
  std::vector<Endpoint> endpoints;
  for (Endpoint e : {Endpoint::LateAmd, Endpoint::Ga, Endpoint::Nv, Endpoint::LateAmdCentralGa}) {
    if (cohort.has_endpoint(e)) endpoints.push_back(e);
  }
  const bool features = cohort.has_deep_features();

  std::ostringstream out;
  out << "id,age,smoking,cfh,arms2,grs,drusen_le,drusen_re,pig_le,pig_re";
  if (features) {
    for (std::size_t k = 0; k < kDeepFeatureCount; ++k) out << ",f" << k;
  }
  for (Endpoint e : endpoints) {
    out << ",time_" << endpoint_column_suffix(e) << ",event_" << endpoint_column_suffix(e);
  }
  out << '\n';

  for (const auto& p : cohort.participants) {
    out << detail::csv_escape(p.id) << ',' << detail::format_double(p.age) << ','
        << to_string(p.smoking) << ',';
    if (p.genotype.cfh) out << to_string(*p.genotype.cfh);
    out << ',';
    if (p.genotype.arms2) out << to_string(*p.genotype.arms2);
    out << ',';
    if (p.genotype.grs) out << detail::format_double(*p.genotype.grs);
    out << ',' << to_string(p.left_eye.drusen) << ',' << to_string(p.right_eye.drusen) << ','
        << to_string(p.left_eye.pigment) << ',' << to_string(p.right_eye.pigment);
    if (features) {
      if (!p.deep_features || p.deep_features->size() != kDeepFeatureCount) {
        throw Error(ErrorKind::DimensionMismatch,
                    "participant '" + p.id + "' lacks the deep-feature block shared by the cohort");
      }
      for (double v : *p.deep_features) out << ',' << detail::format_double(v);
    }
    for (Endpoint e : endpoints) {
      auto it = p.outcomes.find(e);
      if (it == p.outcomes.end()) {
        throw Error(ErrorKind::MissingColumn, "participant '" + p.id + "' has no outcome for " +
                                                  std::string(to_string(e)));
      }
      out << ',' << detail::format_double(it->second.time_years) << ','
          << (it->second.event ? 1 : 0);
    }
    out << '\n';
  }
  return out.str();
}

Cohort read_cohort_file(const std::string& path, const ColumnMap& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_cohort(buffer.str(), schema);
}

CohortSplit split_cohort(const Cohort& cohort, const SplitRatios& ratios, std::uint64_t seed) {
  if (cohort.empty()) throw Error(ErrorKind::EmptyCohort, "cannot split an empty cohort");
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 ||
      std::abs(ratios.train + ratios.dev + ratios.test - 1.0) > 1e-9) {
    throw Error(ErrorKind::InvalidArgument, "split ratios must be nonnegative and sum to 1");
  }
  const std::size_t n = cohort.size();
  // The small slack keeps products such as 0.7 * 10 from flooring to 6.
  const auto cut = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  const std::size_t n_train = std::min(cut(ratios.train), n);
  const std::size_t n_dev = std::min(cut(ratios.dev), n - n_train);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  CohortSplit split;
  for (Cohort* part : {&split.train, &split.dev, &split.test}) {
    part->schema_version = cohort.schema_version;
  }
  for (std::size_t i = 0; i < n; ++i) {
    Cohort& target = i < n_train ? split.train : (i < n_train + n_dev ? split.dev : split.test);
    target.participants.push_back(cohort.participants[order[i]]);
  }
  return split;
}

std::vector<std::size_t> Normalization::constant_columns() const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < constant.size(); ++j) {
    if (constant[j]) out.push_back(j);
  }
  return out;
}

Normalization fit_normalization(const std::vector<std::vector<double>>& columns) {
  Normalization norm;
  norm.mean.reserve(columns.size());
  norm.sd.reserve(columns.size());
  norm.constant.reserve(columns.size());
  for (const auto& column : columns) {
    if (column.empty()) throw Error(ErrorKind::EmptyInput, "cannot standardize an empty column");
    const double n = static_cast<double>(column.size());
    const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : column) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    const bool is_constant = !(sd >= kConstantColumnSd);
    norm.mean.push_back(mean);
    norm.sd.push_back(is_constant ? 1.0 : sd);
    norm.constant.push_back(is_constant);
  }
  return norm;
}

Normalization zscore_fit(const Cohort& train) {
  if (train.empty() || !train.has_deep_features()) {
    throw Error(ErrorKind::NoFeatures, "training cohort carries no deep features");
  }
  const std::size_t p = train.participants.front().deep_features->size();
  std::vector<std::vector<double>> columns(p, std::vector<double>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& f = train.participants[i].deep_features;
    if (!f || f->size() != p) {
      throw Error(ErrorKind::NoFeatures,
                  "participant '" + train.participants[i].id + "' lacks deep features");
    }
    for (std::size_t j = 0; j < p; ++j) columns[j][i] = (*f)[j];
  }
  Normalization norm = fit_normalization(columns);
  // Constant columns are centered exactly so their standardized output is all zeros.
  for (std::size_t j = 0; j < p; ++j) {
    if (norm.constant[j]) norm.mean[j] = columns[j].front();
  }
  return norm;
}

Cohort zscore_apply(const Normalization& norm, const Cohort& cohort) {
  Cohort out = cohort;
  for (auto& p : out.participants) {
    if (!p.deep_features) {
      throw Error(ErrorKind::DimensionMismatch, "participant '" + p.id + "' lacks deep features");
    }
    auto& f = *p.deep_features;
    if (f.size() != norm.size()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "participant '" + p.id + "' has " + std::to_string(f.size()) +
                      " features but the normalization has " + std::to_string(norm.size()));
    }
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = norm.apply(j, f[j]);
  }
  return out;
}

}  // namespace prognos
