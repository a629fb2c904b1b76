#include "prognos/cox.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include "prognos/covariates.hpp"
#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

std::string_view to_string(TieMethod method) noexcept {
  return method == TieMethod::Breslow ? "breslow" : "efron";
}

std::optional<TieMethod> parse_tie_method(std::string_view text) {
  const std::string s = detail::lowercase(detail::trim(text));
  if (s == "breslow") return TieMethod::Breslow;
  if (s == "efron") return TieMethod::Efron;
  return std::nullopt;
}

std::size_t SurvivalData::event_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(event.begin(), event.end(),
                                                [](std::uint8_t e) { return e != 0; }));
}

void validate_survival_data(const SurvivalData& data) {
  const auto n = data.time.size();
  if (data.x.rows() != n || static_cast<Eigen::Index>(data.event.size()) != n) {
    throw Error(ErrorKind::LengthMismatch,
                "design has " + std::to_string(data.x.rows()) + " rows, times " +
                    std::to_string(n) + ", events " + std::to_string(data.event.size()));
  }
  if (!data.x.allFinite() || !data.time.allFinite()) {
    throw Error(ErrorKind::NonFiniteInput, "design matrix or times contain non-finite values");
  }
  if (data.event_count() == 0) throw Error(ErrorKind::NoEvents, "no events in the data");
}

CoxObjective::CoxObjective(const SurvivalData& data, TieMethod ties) : data_(data), ties_(ties) {
  validate_survival_data(data);
  const auto n = data.rows();
  order_.resize(static_cast<std::size_t>(n));
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (data.time(a) != data.time(b)) return data.time(a) < data.time(b);
    return data.event[static_cast<std::size_t>(a)] > data.event[static_cast<std::size_t>(b)];
  });
  std::size_t i = 0;
  while (i < order_.size()) {
    std::size_t j = i;
    std::size_t events = 0;
    while (j < order_.size() && data.time(order_[j]) == data.time(order_[i])) {
      events += data.event[static_cast<std::size_t>(order_[j])] != 0;
      ++j;
    }
    groups_.push_back({i, j, events});
    i = j;
  }
}

PartialLikelihood CoxObjective::evaluate(const Eigen::VectorXd& beta, bool with_hessian) const {
  const auto& x = data_.x;
  const Eigen::Index p = x.cols();
  if (beta.size() != p) {
    throw Error(ErrorKind::DimensionMismatch, "beta has " + std::to_string(beta.size()) +
                                                  " entries for " + std::to_string(p) +
                                                  " covariates");
  }
  const Eigen::VectorXd eta = x * beta;
  const double shift = eta.maxCoeff();
  const Eigen::VectorXd w = (eta.array() - shift).exp().matrix();

  PartialLikelihood out;
  out.gradient = Eigen::VectorXd::Zero(p);
  if (with_hessian) out.hessian = Eigen::MatrixXd::Zero(p, p);

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(with_hessian ? p : 0, with_hessian ? p : 0);
  Eigen::VectorXd a1(p), m(p);
  Eigen::MatrixXd a2(with_hessian ? p : 0, with_hessian ? p : 0);

  for (auto g = groups_.rbegin(); g != groups_.rend(); ++g) {
    for (std::size_t k = g->begin; k < g->end; ++k) {
      const Eigen::Index r = order_[k];
      s0 += w(r);
      s1.noalias() += w(r) * x.row(r).transpose();
      if (with_hessian) s2.noalias() += w(r) * x.row(r).transpose() * x.row(r);
    }
    if (g->events == 0) continue;

    // Events lead each group in order_.
    double a0 = 0.0;
    a1.setZero();
    if (with_hessian) a2.setZero();
    for (std::size_t k = g->begin; k < g->begin + g->events; ++k) {
      const Eigen::Index r = order_[k];
      out.loglik += eta(r);
      out.gradient.noalias() += x.row(r).transpose();
      if (ties_ == TieMethod::Efron && g->events > 1) {
        a0 += w(r);
        a1.noalias() += w(r) * x.row(r).transpose();
        if (with_hessian) a2.noalias() += w(r) * x.row(r).transpose() * x.row(r);
      }
    }

    const double d = static_cast<double>(g->events);
    for (std::size_t l = 0; l < g->events; ++l) {
      const double f = (ties_ == TieMethod::Efron && g->events > 1) ? static_cast<double>(l) / d : 0.0;
      const double den = s0 - f * a0;
      m = (s1 - f * a1) / den;
      out.loglik -= std::log(den) + shift;
      out.gradient -= m;
      if (with_hessian) {
        out.hessian -= (s2 - f * a2) / den;
        out.hessian.noalias() += m * m.transpose();
      }
    }
  }
  return out;
}

double CoxObjective::loglik(const Eigen::VectorXd& beta) const {
  return evaluate(beta, false).loglik;
}

PartialLikelihood partial_loglik(const Eigen::VectorXd& beta, const SurvivalData& data,
                                 TieMethod ties) {
  return CoxObjective(data, ties).evaluate(beta);
}

namespace {

enum class InfoState { Ok, Singular, Collapsed };

// `start_scale` is the largest eigenvalue of the information at beta = 0. Under separation the
// information decays exponentially along the diverging direction while staying well conditioned,
// so it is also compared against where it started.
InfoState check_information(const Eigen::MatrixXd& info, double start_scale = 0.0) {
  if (info.size() == 0) return InfoState::Singular;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(info, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(hi > 0.0) || lo <= 1e-10 * hi) return InfoState::Singular;
  if (lo <= 1e-6 * start_scale) return InfoState::Collapsed;
  return InfoState::Ok;
}

double largest_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().maxCoeff();
}

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

CoxFit fit_cox(const SurvivalData& data, const CoxFitOptions& options) {
  const CoxObjective objective(data, options.ties);
  const Eigen::Index p = data.cols();
  if (p == 0) throw Error(ErrorKind::InvalidArgument, "model has no covariates");

  CoxFit fit;
  fit.beta = Eigen::VectorXd::Zero(p);
  PartialLikelihood current = objective.evaluate(fit.beta);
  fit.loglik_trace.push_back(current.loglik);

  const double eps = std::numeric_limits<double>::epsilon();
  const double start_scale = largest_eigenvalue(-current.hessian);
  int iter = 0;
  for (; iter < options.max_iter; ++iter) {
    if (inf_norm(current.gradient) < options.tol) break;
    const Eigen::MatrixXd info = -current.hessian;
    if (check_information(info, iter == 0 ? 0.0 : start_scale) != InfoState::Ok) {
      if (iter == 0) {
        throw Error(ErrorKind::SingularInformation,
                    "information matrix is singular; covariates are constant or collinear");
      }
      throw Error(ErrorKind::MonotoneLikelihood,
                  "information matrix degenerated after " + std::to_string(iter) +
                      " iterations; likelihood is monotone (complete separation)");
    }
    const Eigen::VectorXd step = info.ldlt().solve(current.gradient);

    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    PartialLikelihood next;
    for (int h = 0; h <= options.max_halvings; ++h, scale *= 0.5) {
      candidate = fit.beta + scale * step;
      next = objective.evaluate(candidate);
      if (!std::isfinite(next.loglik)) continue;
      // Near the optimum the likelihood change drops below rounding; a step that stays within
      // rounding of the current value and shrinks the score is still progress.
      const double slack = 64.0 * eps * std::max(1.0, std::abs(current.loglik));
      if (next.loglik >= current.loglik ||
          (next.loglik >= current.loglik - slack &&
           inf_norm(next.gradient) < inf_norm(current.gradient))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;

    fit.beta = candidate;
    current = std::move(next);
    fit.loglik_trace.push_back(current.loglik);
    if (inf_norm(fit.beta) > options.beta_bound) {
      throw Error(ErrorKind::MonotoneLikelihood,
                  "coefficient magnitude exceeded " + detail::format_double(options.beta_bound) +
                      " after " + std::to_string(iter + 1) + " iterations");
    }
  }

  fit.iterations = iter;
  fit.loglik = current.loglik;
  fit.gradient = current.gradient;
  fit.gradient_norm = inf_norm(current.gradient);
  fit.converged = fit.gradient_norm < options.tol;
  const Eigen::MatrixXd info = -current.hessian;
  const InfoState state = check_information(info, iter == 0 ? 0.0 : start_scale);
  if (state == InfoState::Singular && iter == 0) {
    throw Error(ErrorKind::SingularInformation, "information matrix is singular at the estimate");
  }
  if (state != InfoState::Ok) {
    throw Error(ErrorKind::MonotoneLikelihood,
                "information collapsed after " + std::to_string(iter) +
                    " iterations; likelihood is monotone (complete separation)");
  }
  fit.info_inverse = info.inverse();
  return fit;
}

std::string data_fingerprint(const SurvivalData& data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  const auto mix_bytes = [&hash](const void* bytes, std::size_t size) {
    const auto* b = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < size; ++i) {
      hash ^= b[i];
      hash *= 0x100000001b3ULL;
    }
  };
  const auto mix_double = [&](double v) {
    if (v == 0.0) v = 0.0;  // fold -0.0
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    mix_bytes(&bits, sizeof bits);
  };
  const std::uint64_t dims[2] = {static_cast<std::uint64_t>(data.x.rows()),
                                 static_cast<std::uint64_t>(data.x.cols())};
  mix_bytes(dims, sizeof dims);
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    mix_double(data.time(i));
    mix_bytes(&data.event[static_cast<std::size_t>(i)], 1);
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) mix_double(data.x(i, j));
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int k = 15; k >= 0; --k) {
    out[static_cast<std::size_t>(k)] = kHex[hash & 0xF];
    hash >>= 4;
  }
  return out;
}

Normalization covariate_normalization(const Cohort& train, const std::vector<std::string>& names) {
  if (train.empty()) throw Error(ErrorKind::EmptyCohort, "training cohort is empty");
  std::vector<std::vector<double>> columns(names.size(), std::vector<double>(train.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    for (std::size_t j = 0; j < names.size(); ++j) {
      columns[j][i] = covariate_value(train.participants[i], names[j]);
    }
  }
  Normalization norm = fit_normalization(columns);
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (norm.constant[j]) norm.mean[j] = columns[j].front();
    if (!is_feature_covariate(names[j])) norm.sd[j] = 1.0;
  }
  return norm;
}

std::vector<double> CoxModel::standardize(std::span<const double> raw) const {
  if (raw.size() != normalization.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "covariate vector has " + std::to_string(raw.size()) + " entries, model expects " +
                    std::to_string(normalization.size()));
  }
  std::vector<double> out(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) out[j] = normalization.apply(j, raw[j]);
  return out;
}

double CoxModel::linear_predictor(std::span<const double> standardized) const {
  if (static_cast<Eigen::Index>(standardized.size()) != beta.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "covariate vector has " + std::to_string(standardized.size()) +
                    " entries, model expects " + std::to_string(beta.size()));
  }
  double lp = 0.0;
  for (std::size_t j = 0; j < standardized.size(); ++j) {
    lp += beta(static_cast<Eigen::Index>(j)) * standardized[j];
  }
  return lp;
}

double CoxModel::participant_linear_predictor(const Participant& participant) const {
  const auto raw = covariate_vector(participant, covariate_names);
  return linear_predictor(standardize(raw));
}

void endpoint_outcomes(const Cohort& cohort, Endpoint endpoint, Eigen::VectorXd& time,
                       std::vector<std::uint8_t>& event) {
  time.resize(static_cast<Eigen::Index>(cohort.size()));
  event.assign(cohort.size(), 0);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const auto& p = cohort.participants[i];
    auto it = p.outcomes.find(endpoint);
    if (it == p.outcomes.end()) {
      throw Error(ErrorKind::MissingColumn,
                  "participant '" + p.id + "' has no outcome columns 'time_" +
                      std::string(endpoint_column_suffix(endpoint)) + "'/'event_" +
                      std::string(endpoint_column_suffix(endpoint)) + "'");
    }
    time(static_cast<Eigen::Index>(i)) = it->second.time_years;
    event[i] = it->second.event ? 1 : 0;
  }
}

SurvivalData survival_data(const Cohort& cohort, const std::vector<std::string>& names,
                           Endpoint endpoint, const Normalization& normalization) {
  if (normalization.size() != names.size()) {
    throw Error(ErrorKind::DimensionMismatch, "normalization does not match the covariate list");
  }
  SurvivalData data;
  data.x = design_matrix(cohort, names);
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const auto jj = static_cast<std::size_t>(j);
    data.x.col(j) = ((data.x.col(j).array() - normalization.mean[jj]) / normalization.sd[jj]).matrix();
  }
  endpoint_outcomes(cohort, endpoint, data.time, data.event);
  return data;
}

CoxModel cox_fit(const Cohort& train, const std::vector<std::string>& covariates, Endpoint endpoint,
                 const CoxFitOptions& options) {
  CoxModel model;
  model.endpoint = endpoint;
  model.covariate_names = covariates;
  model.tie_method = options.ties;
  model.normalization = covariate_normalization(train, covariates);
  const SurvivalData data = survival_data(train, covariates, endpoint, model.normalization);
  const CoxFit fit = fit_cox(data, options);
  if (!fit.converged) {
    std::ostringstream msg;
    msg << "Newton iteration stopped after " << fit.iterations << " iterations with gradient norm "
        << fit.gradient_norm << " (tolerance " << options.tol << ", log partial likelihood "
        << fit.loglik << ")";
    throw Error(ErrorKind::Nonconvergence, msg.str());
  }
  model.beta = fit.beta;
  model.info_inverse = fit.info_inverse;
  model.converged = fit.converged;
  model.iterations = fit.iterations;
  model.final_gradient_norm = fit.gradient_norm;
  model.train_fingerprint = data_fingerprint(data);
  return model;
}

}  // namespace prognos
