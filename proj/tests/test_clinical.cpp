#include <gtest/gtest.h>

#include <vector>

#include "prognos/clinical.hpp"
#include "prognos/errors.hpp"

using namespace prognos;

namespace {

std::vector<EyeGrade> all_eye_grades() {
  std::vector<EyeGrade> out;
  for (Drusen d : {Drusen::NoneSmall, Drusen::Medium, Drusen::Large}) {
    for (Pigment p : {Pigment::Absent, Pigment::Present}) out.push_back({d, p});
  }
  return out;
}

// Single-step upgrades of one eye.
std::vector<EyeGrade> upgrades(const EyeGrade& e) {
  std::vector<EyeGrade> out;
  if (e.drusen == Drusen::NoneSmall) out.push_back({Drusen::Medium, e.pigment});
  if (e.drusen == Drusen::Medium) out.push_back({Drusen::Large, e.pigment});
  if (e.pigment == Pigment::Absent) out.push_back({e.drusen, Pigment::Present});
  return out;
}

}  // namespace

TEST(SssScore, WorkedExamples) {
  const EyeGrade worst{Drusen::Large, Pigment::Present};
  const EyeGrade clear{Drusen::NoneSmall, Pigment::Absent};
  const EyeGrade medium{Drusen::Medium, Pigment::Absent};
  EXPECT_EQ(sss_score(worst, worst), 4);
  EXPECT_EQ(sss_score(clear, clear), 0);
  EXPECT_EQ(sss_score(medium, medium), 1);
  EXPECT_EQ(sss_score(medium, medium, false), 0);
  EXPECT_EQ(sss_score({Drusen::Large, Pigment::Absent}, medium), 1);
  EXPECT_EQ(sss_score({Drusen::Medium, Pigment::Present}, {Drusen::Medium, Pigment::Present}), 3);
}

TEST(SssScore, AllCombinationsInRangeSymmetricMonotone) {
  const auto grades = all_eye_grades();
  int combos = 0;
  for (const auto& l : grades) {
    for (const auto& r : grades) {
      for (bool modifier : {true, false}) {
        const int s = sss_score(l, r, modifier);
        EXPECT_GE(s, 0);
        EXPECT_LE(s, 4);
        EXPECT_EQ(s, sss_score(r, l, modifier));
        for (const auto& up : upgrades(l)) EXPECT_GE(sss_score(up, r, modifier), s);
        for (const auto& up : upgrades(r)) EXPECT_GE(sss_score(l, up, modifier), s);
      }
      ++combos;
    }
  }
  EXPECT_EQ(combos, 36);
}

TEST(RiskTable, DefaultsAndLookup) {
  EXPECT_EQ(sss_risk(4), 0.50);
  EXPECT_EQ(sss_risk(0), 0.005);
  for (int s = 1; s <= 4; ++s) EXPECT_GT(sss_risk(s), sss_risk(s - 1));
  const EyeGrade worst{Drusen::Large, Pigment::Present};
  const auto r = sss_assess(worst, worst);
  EXPECT_EQ(r.score, 4);
  EXPECT_EQ(r.five_year_risk, 0.50);
}

TEST(RiskTable, CustomTableIsAuthoritative) {
  const RiskTable t({0.01, 0.02, 0.04, 0.08, 0.16});
  for (int s = 0; s <= 4; ++s) EXPECT_EQ(sss_risk(s, t), t.entries()[static_cast<std::size_t>(s)]);
  const auto parsed = RiskTable::from_json(R"({"0":0.001,"1":0.1,"2":0.2,"3":0.3,"4":0.9})");
  EXPECT_EQ(sss_risk(0, parsed), 0.001);
  EXPECT_EQ(sss_risk(4, parsed), 0.9);
  EXPECT_EQ(RiskTable::from_json(parsed.to_json()).entries(), parsed.entries());
}

TEST(RiskTable, RejectsBadInput) {
  try {
    sss_risk(5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ScoreOutOfRange);
  }
  EXPECT_THROW(sss_risk(-1), Error);
  EXPECT_THROW(RiskTable({0.1, 0.05, 0.2, 0.3, 0.4}), Error);
  EXPECT_THROW(RiskTable({0.1, 0.2, 0.3, 0.4, 1.5}), Error);
  EXPECT_THROW(RiskTable::from_json(R"({"0":0.1})"), Error);
}

TEST(CalculatorCovariates, Encoding) {
  Participant p;
  p.age = 73;
  p.smoking = Smoking::Current;
  p.left_eye = {Drusen::Large, Pigment::Present};
  p.right_eye = {Drusen::Large, Pigment::Present};
  EXPECT_EQ(calculator_covariates(p, false), (std::vector<double>{2, 2, 1, 1, 73, 0, 1}));
  p.genotype.cfh = Cfh::CC;
  p.genotype.arms2 = Arms2::TT;
  EXPECT_EQ(calculator_covariates(p, true), (std::vector<double>{2, 2, 1, 1, 73, 0, 1, 2, 2}));
  EXPECT_EQ(calculator_covariate_names(true).size(), 9u);
}

TEST(CalculatorCovariates, MissingGenotype) {
  Participant p;
  p.age = 70;
  p.genotype.cfh = Cfh::CT;
  try {
    calculator_covariates(p, true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingGenotype);
  }
}
