#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "prognos/cohort.hpp"

namespace prognos {

enum class TieMethod { Breslow, Efron };

std::string_view to_string(TieMethod method) noexcept;
std::optional<TieMethod> parse_tie_method(std::string_view text);

/// Right-censored survival data with a design matrix (one row per subject).
struct SurvivalData {
  Eigen::MatrixXd x;
  Eigen::VectorXd time;
  std::vector<std::uint8_t> event;

  Eigen::Index rows() const noexcept { return time.size(); }
  Eigen::Index cols() const noexcept { return x.cols(); }
  std::size_t event_count() const noexcept;
};

/// Throws LengthMismatch, NonFiniteInput or NoEvents.
void validate_survival_data(const SurvivalData& data);

/// Log partial likelihood with its gradient and hessian in beta.
struct PartialLikelihood {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd hessian;
};

/// Cox partial likelihood over a fixed data set. Sorting and tie grouping are done once so
/// repeated evaluations inside an optimizer only pay for the risk-set sweep.
///
/// The object keeps a reference to `data`; the data must outlive it.
class CoxObjective {
 public:
  CoxObjective(const SurvivalData& data, TieMethod ties);

  PartialLikelihood evaluate(const Eigen::VectorXd& beta, bool with_hessian = true) const;
  double loglik(const Eigen::VectorXd& beta) const;

  const SurvivalData& data() const noexcept { return data_; }
  TieMethod ties() const noexcept { return ties_; }

 private:
  struct TimeGroup {
    std::size_t begin;  // into order_ (ascending time)
    std::size_t end;
    std::size_t events;
  };

  const SurvivalData& data_;
  TieMethod ties_;
  std::vector<Eigen::Index> order_;  // ascending time, events before censored within a time
  std::vector<TimeGroup> groups_;
};

PartialLikelihood partial_loglik(const Eigen::VectorXd& beta, const SurvivalData& data,
                                 TieMethod ties);

struct CoxFitOptions {
  TieMethod ties = TieMethod::Efron;
  int max_iter = 100;
  double tol = 1e-8;
  /// A coefficient exceeding this in magnitude is treated as monotone likelihood.
  double beta_bound = 50.0;
  int max_halvings = 20;
};

/// Result of Newton iteration on the partial likelihood. Nonconvergence is reported through
/// `converged` rather than thrown so callers can inspect the diagnostics.
struct CoxFit {
  Eigen::VectorXd beta;
  Eigen::MatrixXd info_inverse;
  Eigen::VectorXd gradient;
  double loglik = 0.0;
  bool converged = false;
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> loglik_trace;
};

/// Newton-Raphson with step halving from beta = 0.
/// Throws SingularInformation when the information matrix is singular at the start (collinear or
/// constant covariates) and MonotoneLikelihood when it degenerates later or a coefficient
/// exceeds `beta_bound`.
CoxFit fit_cox(const SurvivalData& data, const CoxFitOptions& options = {});

/// FNV-1a digest over the design, times and events, as 16 hex digits.
std::string data_fingerprint(const SurvivalData& data);

/// Covariate standardization used by fitted models: deep features are z-scored, clinical
/// covariates are centered only so their hazard ratios stay per raw unit.
Normalization covariate_normalization(const Cohort& train, const std::vector<std::string>& names);

struct CoxModel {
  Endpoint endpoint = Endpoint::LateAmd;
  std::vector<std::string> covariate_names;
  Eigen::VectorXd beta;
  TieMethod tie_method = TieMethod::Efron;
  Normalization normalization;
  Eigen::MatrixXd info_inverse;
  bool converged = false;
  int iterations = 0;
  double final_gradient_norm = 0.0;
  std::string train_fingerprint;

  std::size_t dimension() const noexcept { return covariate_names.size(); }
  /// Applies the frozen normalization to a raw covariate vector.
  std::vector<double> standardize(std::span<const double> raw) const;
  double linear_predictor(std::span<const double> standardized) const;
  /// Linear predictor straight from a participant's raw fields.
  double participant_linear_predictor(const Participant& participant) const;
};

/// Outcome vectors for an endpoint. Throws MissingColumn when the cohort lacks the endpoint.
void endpoint_outcomes(const Cohort& cohort, Endpoint endpoint, Eigen::VectorXd& time,
                       std::vector<std::uint8_t>& event);

/// Standardized design plus outcomes.
SurvivalData survival_data(const Cohort& cohort, const std::vector<std::string>& names,
                           Endpoint endpoint, const Normalization& normalization);

/// Fits a Cox model on a cohort. Throws Nonconvergence (with diagnostics in the message),
/// SingularInformation, MonotoneLikelihood, NoEvents.
CoxModel cox_fit(const Cohort& train, const std::vector<std::string>& covariates, Endpoint endpoint,
                 const CoxFitOptions& options = {});

}  // namespace prognos
