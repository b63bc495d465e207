#pragma once

// Zero-mean GP with the anisotropic squared-exponential kernel
//   K(x, x') = exp(-sum_i (x_i - x'_i)^2 / theta_i)
// and a fixed diagonal jitter.

#include <bayesgp/errors.hpp>
#include <bayesgp/types.hpp>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>

namespace bayesgp {

/// Squared spread of the Cholesky diagonal above which the factorization is
/// redone in extended precision. The ratio is a lower bound on cond(K).
inline constexpr double kRefineConditionEstimate = 1e4;

/// Cholesky factorization of a training kernel matrix.
///
/// Near the jitter floor cond(K) reaches 1e9 and a double factor loses about
/// 1e-7 in log|K| and y^T K^{-1} y. When the diagonal of the double factor
/// signals that, the factor is recomputed in long double; solves then use the
/// rounded extended factor and quadratic forms stay in extended precision.
class CovarianceFactor {
 public:
  using LongMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using LongVector = Eigen::Matrix<long double, Eigen::Dynamic, 1>;

  explicit CovarianceFactor(Matrix matrix) : matrix_(std::move(matrix)) {
    const Eigen::LLT<Matrix> llt(matrix_);
    if (llt.info() != Eigen::Success) {
      throw FactorizationFailure("kernel matrix is not numerically positive definite");
    }
    lower_ = llt.matrixL();
    const auto diag = lower_.diagonal();
    if (!diag.allFinite() || (diag.array() <= 0.0).any()) {
      throw FactorizationFailure("Cholesky factor has a non-positive pivot");
    }
    const double spread = diag.maxCoeff() / diag.minCoeff();
    if (spread * spread > kRefineConditionEstimate) refine();
    if (extended_) {
      long double ld = 0.0L;
      for (Eigen::Index i = 0; i < extended_->rows(); ++i) ld += std::log((*extended_)(i, i));
      log_det_ = static_cast<double>(2.0L * ld);
    } else {
      log_det_ = 2.0 * diag.array().log().sum();
    }
  }

  const Matrix& matrix() const noexcept { return matrix_; }
  const Matrix& lower() const noexcept { return lower_; }
  double log_determinant() const noexcept { return log_det_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  bool extended() const noexcept { return extended_.has_value(); }

  /// K^{-1} b
  template <typename Rhs>
  Matrix solve(const Eigen::MatrixBase<Rhs>& b) const {
    Matrix x = lower_.triangularView<Eigen::Lower>().solve(b);
    lower_.transpose().triangularView<Eigen::Upper>().solveInPlace(x);
    return x;
  }

  /// L^{-1} b, so that b^T K^{-1} b = |L^{-1} b|^2.
  template <typename Rhs>
  Matrix half_solve(const Eigen::MatrixBase<Rhs>& b) const {
    return lower_.triangularView<Eigen::Lower>().solve(b);
  }

  /// y^T K^{-1} y
  double quadratic(const Vector& y) const {
    if (!extended_) return half_solve(y).squaredNorm();
    const LongVector z =
        extended_->triangularView<Eigen::Lower>().solve(y.cast<long double>().eval());
    return static_cast<double>(z.squaredNorm());
  }

 private:
  void refine() {
    const Eigen::LLT<LongMatrix> llt(matrix_.cast<long double>());
    if (llt.info() != Eigen::Success) return;
    extended_ = LongMatrix(llt.matrixL());
    lower_ = extended_->cast<double>();
  }

  Matrix matrix_;
  Matrix lower_;
  std::optional<LongMatrix> extended_;
  double log_det_ = 0.0;
};

namespace detail {

inline void check_theta_dim(const Matrix& X, const Lengthscales& theta) {
  if (static_cast<std::size_t>(X.cols()) != theta.size()) {
    throw DimensionMismatch("inputs have " + std::to_string(X.cols()) + " columns but theta has " +
                            std::to_string(theta.size()) + " components");
  }
}

inline double sq_exp(const Matrix& A, Eigen::Index a, const Matrix& B, Eigen::Index b,
                     const Vector& theta) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double diff = A(a, i) - B(b, i);
    s += diff * diff / theta[i];
  }
  return std::exp(-s);
}

}  // namespace detail

/// Jitter-free kernel between the rows of `Xnew` (m x d) and `X` (n x d).
inline Matrix cross_kernel(const Matrix& Xnew, const Matrix& X, const Lengthscales& theta) {
  if (Xnew.cols() != X.cols()) {
    throw DimensionMismatch("cross_kernel: column counts differ (" + std::to_string(Xnew.cols()) +
                            " vs " + std::to_string(X.cols()) + ")");
  }
  detail::check_theta_dim(X, theta);
  Matrix K(Xnew.rows(), X.rows());
  for (Eigen::Index a = 0; a < Xnew.rows(); ++a) {
    for (Eigen::Index b = 0; b < X.rows(); ++b) {
      K(a, b) = detail::sq_exp(Xnew, a, X, b, theta.values());
    }
  }
  return K;
}

/// Jitter-free symmetric kernel of `X` with itself.
inline Matrix gram_matrix(const Matrix& X, const Lengthscales& theta) {
  detail::check_theta_dim(X, theta);
  const Eigen::Index n = X.rows();
  Matrix K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    K(a, a) = 1.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      K(a, b) = K(b, a) = detail::sq_exp(X, a, X, b, theta.values());
    }
  }
  return K;
}

/// Training kernel K + g I, factorized. Throws FactorizationFailure rather than
/// escalating the jitter.
inline CovarianceFactor kernel_matrix(const Matrix& X, const Lengthscales& theta,
                                      const GPConfig& config = {}) {
  if (!(config.jitter > 0.0)) throw Error("jitter must be positive");
  if (!X.allFinite()) throw Error("kernel_matrix: non-finite inputs");
  Matrix K = gram_matrix(X, theta);
  K.diagonal().array() += config.jitter;
  return CovarianceFactor(std::move(K));
}

/// y^T K^{-1} y
inline double quadratic_form(const Vector& y, const CovarianceFactor& factor) {
  if (static_cast<std::size_t>(y.size()) != factor.size()) {
    throw DimensionMismatch("output vector length does not match the kernel size");
  }
  return factor.quadratic(y);
}

inline double quadratic_form(const Dataset& data, const CovarianceFactor& factor) {
  return quadratic_form(data.outputs(), factor);
}

/// Closed-form maximizer of the likelihood in tau^2 for fixed theta: y^T K^{-1} y / n.
inline double tau2_hat(const Vector& y, const CovarianceFactor& factor) {
  return quadratic_form(y, factor) / static_cast<double>(y.size());
}

inline double tau2_hat(const Dataset& data, const CovarianceFactor& factor) {
  return tau2_hat(data.outputs(), factor);
}

/// Full Gaussian log-likelihood of y ~ N(0, tau2 K).
inline double log_likelihood(const Vector& y, const CovarianceFactor& factor, double tau2) {
  const double n = static_cast<double>(y.size());
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n * std::log(tau2) -
         0.5 * factor.log_determinant() - 0.5 * quadratic_form(y, factor) / tau2;
}

inline double log_likelihood(const Dataset& data, const CovarianceFactor& factor, double tau2) {
  return log_likelihood(data.outputs(), factor, tau2);
}

/// Additive constant that makes the profile form equal the full likelihood at tau2_hat.
inline double profile_constant(std::size_t n_points) {
  const double n = static_cast<double>(n_points);
  return -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * n + 0.5 * n * std::log(n);
}

/// Log-likelihood with tau^2 profiled out; -inf when y^T K^{-1} y is not positive.
inline double profile_log_likelihood(const Vector& y, const CovarianceFactor& factor) {
  const double q = quadratic_form(y, factor);
  if (!(q > 0.0) || !std::isfinite(q)) return -std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(y.size());
  return profile_constant(factor.size()) - 0.5 * n * std::log(q) - 0.5 * factor.log_determinant();
}

inline double profile_log_likelihood(const Dataset& data, const CovarianceFactor& factor) {
  return profile_log_likelihood(data.outputs(), factor);
}

inline double profile_log_likelihood(const Dataset& data, const Lengthscales& theta,
                                     const GPConfig& config = {}) {
  return profile_log_likelihood(data, kernel_matrix(data.inputs(), theta, config));
}

struct PredictiveMoments {
  Vector mean;        ///< centered units
  Matrix covariance;  ///< m x m
  double tau2 = 0.0;
};

/// Diagonal-only predictive moments; what pointwise scoring needs.
struct PredictiveMarginals {
  Vector mean;
  Vector variance;
  double tau2 = 0.0;
};

/// Negative variances within this distance of zero are rounding noise and clamp to 0.
inline constexpr double kVarianceClampTolerance = 1e-10;

namespace detail {

/// `v` is a variance in units of tau^2 (i.e. 1 - k^T K^{-1} k).
inline double clamp_variance(double v) {
  if (v < 0.0 && v >= -kVarianceClampTolerance) return 0.0;
  return v;
}

}  // namespace detail

/// Predictive mean and covariance for a fixed theta, reusing a training factorization.
inline PredictiveMoments predictive_moments(const Dataset& data, const Lengthscales& theta,
                                            const CovarianceFactor& factor, const Matrix& Xnew) {
  const Matrix Kx = cross_kernel(Xnew, data.inputs(), theta);  // m x n
  const double tau2 = tau2_hat(data, factor);
  PredictiveMoments out;
  out.tau2 = tau2;
  out.mean = Kx * factor.solve(data.outputs());
  const Matrix V = factor.half_solve(Kx.transpose());  // n x m
  Matrix cov = gram_matrix(Xnew, theta);
  cov.noalias() -= V.transpose() * V;
  cov = 0.5 * (cov + cov.transpose()).eval();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) cov(i, i) = detail::clamp_variance(cov(i, i));
  cov *= tau2;
  out.covariance = std::move(cov);
  return out;
}

inline PredictiveMoments predictive_moments(const Dataset& data, const Lengthscales& theta,
                                            const Matrix& Xnew, const GPConfig& config = {}) {
  return predictive_moments(data, theta, kernel_matrix(data.inputs(), theta, config), Xnew);
}

inline PredictiveMarginals predictive_marginals(const Dataset& data, const Lengthscales& theta,
                                                const CovarianceFactor& factor,
                                                const Matrix& Xnew) {
  const Matrix Kx = cross_kernel(Xnew, data.inputs(), theta);
  const double tau2 = tau2_hat(data, factor);
  PredictiveMarginals out;
  out.tau2 = tau2;
  out.mean = Kx * factor.solve(data.outputs());
  const Matrix V = factor.half_solve(Kx.transpose());
  out.variance.resize(Xnew.rows());
  for (Eigen::Index i = 0; i < Xnew.rows(); ++i) {
    out.variance[i] = tau2 * detail::clamp_variance(1.0 - V.col(i).squaredNorm());
  }
  return out;
}

inline PredictiveMarginals predictive_marginals(const Dataset& data, const Lengthscales& theta,
                                                const Matrix& Xnew, const GPConfig& config = {}) {
  return predictive_marginals(data, theta, kernel_matrix(data.inputs(), theta, config), Xnew);
}

}  // namespace bayesgp
