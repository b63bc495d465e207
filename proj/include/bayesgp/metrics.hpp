#pragma once

#include <bayesgp/errors.hpp>
#include <bayesgp/types.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bayesgp {

/// 97.5th percentile of the standard normal.
inline constexpr double kZ975 = 1.959963985;

struct ScoreReport {
  double rmse = 0.0;
  double crps = 0.0;
  double picr = 0.0;
  std::size_t n_test = 0;
};

inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// Closed-form CRPS of N(mu, sigma^2) against observation y; |y - mu| when sigma = 0.
inline double gaussian_crps(double y, double mu, double sigma) {
  if (sigma == 0.0) return std::abs(y - mu);
  const double z = (y - mu) / sigma;
  return sigma * (2.0 * normal_pdf(z) + z * (2.0 * normal_cdf(z) - 1.0) - 1.0 / std::sqrt(std::numbers::pi));
}

/// RMSE, mean Gaussian CRPS and 95% interval coverage from pointwise
/// predictive means and variances.
inline ScoreReport score(const Vector& truth, const Vector& mean, const Vector& variance) {
  if (truth.size() != mean.size() || truth.size() != variance.size()) {
    throw DimensionMismatch("score: truth, mean and variance lengths differ");
  }
  if (truth.size() == 0) throw std::invalid_argument("score: no test points");
  ScoreReport r;
  r.n_test = static_cast<std::size_t>(truth.size());
  double sq = 0.0, crps = 0.0;
  std::size_t covered = 0;
  for (Eigen::Index i = 0; i < truth.size(); ++i) {
    if (!(variance[i] >= 0.0)) {
      throw std::invalid_argument("score: negative variance at test point " + std::to_string(i));
    }
    const double sigma = std::sqrt(variance[i]);
    const double err = truth[i] - mean[i];
    sq += err * err;
    crps += gaussian_crps(truth[i], mean[i], sigma);
    const double half = kZ975 * sigma;
    if (mean[i] - half <= truth[i] && truth[i] <= mean[i] + half) ++covered;
  }
  const double n = static_cast<double>(r.n_test);
  r.rmse = std::sqrt(sq / n);
  r.crps = crps / n;
  r.picr = static_cast<double>(covered) / n;
  return r;
}

}  // namespace bayesgp
