#include "prognos/wald.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "prognos/errors.hpp"
#include "text_util.hpp"

namespace prognos {

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

WaldRow wald_row(std::string covariate, double beta, double se) {
  WaldRow row;
  row.covariate = std::move(covariate);
  row.beta = beta;
  row.se = se;
  row.hazard_ratio = std::exp(beta);
  row.ci95_low = std::exp(beta - kNormalQuantile975 * se);
  row.ci95_high = std::exp(beta + kNormalQuantile975 * se);
  row.z = beta / se;
  row.p = normal_two_sided_p(row.z);
  return row;
}

std::vector<WaldRow> wald_report(const CoxModel& model) {
  if (!model.converged) {
    throw Error(ErrorKind::NotConverged, "Wald statistics need a converged fit");
  }
  const auto p = static_cast<Eigen::Index>(model.dimension());
  if (model.beta.size() != p || model.info_inverse.rows() != p || model.info_inverse.cols() != p) {
    throw Error(ErrorKind::DimensionMismatch, "model coefficients and covariance disagree in size");
  }
  std::vector<WaldRow> rows;
  rows.reserve(model.dimension());
  for (Eigen::Index j = 0; j < p; ++j) {
    rows.push_back(wald_row(model.covariate_names[static_cast<std::size_t>(j)], model.beta(j),
                            std::sqrt(model.info_inverse(j, j))));
  }
  return rows;
}

std::string format_wald_table(const std::vector<WaldRow>& rows) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-18s %8s %19s %8s %10s\n", "covariate", "HR", "95% CI", "z",
                "p");
  out << line;
  for (const auto& r : rows) {
    char ci[48];
    std::snprintf(ci, sizeof ci, "%.2f-%.2f", r.ci95_low, r.ci95_high);
    char pv[24];
    if (r.p < 0.001) std::snprintf(pv, sizeof pv, "<.001");
    else std::snprintf(pv, sizeof pv, "%.3f", r.p);
    std::snprintf(line, sizeof line, "%-18s %8.2f %19s %8.2f %10s\n", r.covariate.c_str(),
                  r.hazard_ratio, ci, r.z, pv);
    out << line;
  }
  return out.str();
}

std::string wald_csv(const std::vector<WaldRow>& rows) {
  std::ostringstream out;
  out << "covariate,beta,se,hazard_ratio,ci95_low,ci95_high,z,p\n";
  for (const auto& r : rows) {
    out << r.covariate << ',' << detail::format_double(r.beta) << ','
        << detail::format_double(r.se) << ',' << detail::format_double(r.hazard_ratio) << ','
        << detail::format_double(r.ci95_low) << ',' << detail::format_double(r.ci95_high) << ','
        << detail::format_double(r.z) << ',' << detail::format_double(r.p) << '\n';
  }
  return out.str();
}

}  // namespace prognos
