#pragma once

#include <bayesgp/errors.hpp>
#include <bayesgp/gp_core.hpp>
#include <bayesgp/types.hpp>

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bayesgp {

enum class PriorKind { InverseGamma, Beta, HalfCauchy, Gamma, LogNormal, Jeffreys };

inline constexpr std::array<PriorKind, 6> kAllPriors = {
    PriorKind::InverseGamma, PriorKind::Beta,      PriorKind::HalfCauchy,
    PriorKind::Gamma,        PriorKind::LogNormal, PriorKind::Jeffreys};

inline std::string_view to_string(PriorKind kind) {
  switch (kind) {
    case PriorKind::InverseGamma: return "inverse-gamma";
    case PriorKind::Beta: return "beta";
    case PriorKind::HalfCauchy: return "half-cauchy";
    case PriorKind::Gamma: return "gamma";
    case PriorKind::LogNormal: return "log-normal";
    case PriorKind::Jeffreys: return "jeffreys";
  }
  return "unknown";
}

inline std::optional<PriorKind> parse_prior_kind(std::string_view name) {
  for (PriorKind k : kAllPriors) {
    if (name == to_string(k)) return k;
  }
  if (name == "ig" || name == "invgamma") return PriorKind::InverseGamma;
  if (name == "halfcauchy") return PriorKind::HalfCauchy;
  if (name == "lognormal") return PriorKind::LogNormal;
  return std::nullopt;
}

/// Lengthscale prior. Parametric kinds apply independently to each component;
/// the meaning of `a`, `b` depends on the kind:
///
///   InverseGamma  shape a, scale b
///   Beta          shape a, shape b
///   HalfCauchy    scale a
///   Gamma         shape a, rate b
///   LogNormal     log-mean a, log-sd b
///   Jeffreys      (no parameters; joint over theta and data dependent)
struct PriorSpec {
  PriorKind kind = PriorKind::LogNormal;
  double a = 0.0;
  double b = 10.0;

  static PriorSpec inverse_gamma(double shape = 5.0, double scale = 5.0) {
    return checked({PriorKind::InverseGamma, shape, scale});
  }
  static PriorSpec beta(double alpha = 1.0, double beta = 1.0) {
    return checked({PriorKind::Beta, alpha, beta});
  }
  static PriorSpec half_cauchy(double scale = 1.0) {
    return checked({PriorKind::HalfCauchy, scale, 0.0});
  }
  static PriorSpec gamma(double shape = 1.5, double rate = 3.9 / 1.5) {
    return checked({PriorKind::Gamma, shape, rate});
  }
  static PriorSpec log_normal(double mu = 0.0, double sigma = 10.0) {
    return checked({PriorKind::LogNormal, mu, sigma});
  }
  static PriorSpec jeffreys() { return {PriorKind::Jeffreys, 0.0, 0.0}; }

  static PriorSpec defaults(PriorKind kind) {
    switch (kind) {
      case PriorKind::InverseGamma: return inverse_gamma();
      case PriorKind::Beta: return beta();
      case PriorKind::HalfCauchy: return half_cauchy();
      case PriorKind::Gamma: return gamma();
      case PriorKind::LogNormal: return log_normal();
      case PriorKind::Jeffreys: return jeffreys();
    }
    throw std::invalid_argument("unknown prior kind");
  }

  /// Rebuilds through the factory of `kind`, validating `a` and `b`.
  static PriorSpec with_parameters(PriorKind kind, double a, double b) {
    return checked({kind, a, b});
  }

 private:
  static PriorSpec checked(PriorSpec s) {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    switch (s.kind) {
      case PriorKind::InverseGamma:
      case PriorKind::Beta:
      case PriorKind::Gamma:
        if (!positive(s.a) || !positive(s.b)) {
          throw std::invalid_argument(std::string(to_string(s.kind)) +
                                      " prior needs positive parameters");
        }
        break;
      case PriorKind::HalfCauchy:
        if (!positive(s.a)) throw std::invalid_argument("half-cauchy scale must be positive");
        break;
      case PriorKind::LogNormal:
        if (!std::isfinite(s.a) || !positive(s.b)) {
          throw std::invalid_argument("log-normal needs finite mu and positive sigma");
        }
        break;
      case PriorKind::Jeffreys:
        break;
    }
    return s;
  }
};

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Normalized log-density of one component under a parametric prior;
/// -inf outside the support.
inline double log_density_1d(const PriorSpec& spec, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) return kNegInf;
  const double lx = std::log(x);
  switch (spec.kind) {
    case PriorKind::InverseGamma:
      return spec.a * std::log(spec.b) - std::lgamma(spec.a) - (spec.a + 1.0) * lx - spec.b / x;
    case PriorKind::Beta: {
      if (!(x < 1.0)) return kNegInf;
      const double log_beta_fn =
          std::lgamma(spec.a) + std::lgamma(spec.b) - std::lgamma(spec.a + spec.b);
      // Exact zeros for the uniform case instead of 0 * log(...) rounding.
      const double left = spec.a == 1.0 ? 0.0 : (spec.a - 1.0) * lx;
      const double right = spec.b == 1.0 ? 0.0 : (spec.b - 1.0) * std::log1p(-x);
      return left + right - log_beta_fn;
    }
    case PriorKind::HalfCauchy: {
      const double r = x / spec.a;
      return std::log(2.0 / (std::numbers::pi * spec.a)) - std::log1p(r * r);
    }
    case PriorKind::Gamma:
      return spec.a * std::log(spec.b) - std::lgamma(spec.a) + (spec.a - 1.0) * lx - spec.b * x;
    case PriorKind::LogNormal: {
      const double z = (lx - spec.a) / spec.b;
      return -lx - std::log(spec.b) - 0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * z * z;
    }
    case PriorKind::Jeffreys:
      break;
  }
  throw std::invalid_argument("log_density_1d: Jeffreys prior is not a per-component density");
}

/// dK/dtheta_i (jitter-free): K_ab (x_ai - x_bi)^2 / theta_i^2. `i` is 0-based.
inline Matrix kernel_derivative(const Matrix& X, const Lengthscales& theta, std::size_t i) {
  if (i >= theta.size()) {
    throw std::out_of_range("kernel_derivative: dimension " + std::to_string(i) +
                            " out of range for d = " + std::to_string(theta.size()));
  }
  Matrix D = gram_matrix(X, theta);
  const auto col = static_cast<Eigen::Index>(i);
  const double t2 = theta[i] * theta[i];
  for (Eigen::Index a = 0; a < D.rows(); ++a) {
    D(a, a) = 0.0;
    for (Eigen::Index b = 0; b < a; ++b) {
      const double diff = X(a, col) - X(b, col);
      D(a, b) *= diff * diff / t2;
      D(b, a) = D(a, b);
    }
  }
  return D;
}

/// Trace statistics behind the Jeffreys prior:
///   t_i  = tr(K^{-1} dK_i)
///   S_ij = tr(K^{-1} dK_i K^{-1} dK_j)
struct JeffreysWorkspace {
  Vector t;
  Matrix S;
  std::size_t n = 0;

  /// S - t t^T / n
  Matrix information() const { return S - t * t.transpose() / static_cast<double>(n); }

  /// (1/2) log |S - t t^T / n|, or -inf when the determinant is not positive.
  double log_density() const {
    const Matrix info = information();
    if (!info.allFinite()) return kNegInf;
    const Eigen::PartialPivLU<Matrix> lu(info);
    const Matrix& packed = lu.matrixLU();
    double log_abs = 0.0;
    int sign = lu.permutationP().determinant();
    for (Eigen::Index k = 0; k < packed.rows(); ++k) {
      const double p = packed(k, k);
      if (p == 0.0) return kNegInf;
      if (p < 0.0) sign = -sign;
      log_abs += std::log(std::abs(p));
    }
    if (sign <= 0) return kNegInf;
    return 0.5 * log_abs;
  }
};

inline JeffreysWorkspace jeffreys_workspace(const Matrix& X, const Lengthscales& theta,
                                            const CovarianceFactor& factor) {
  const std::size_t d = theta.size();
  JeffreysWorkspace ws;
  ws.n = static_cast<std::size_t>(X.rows());
  ws.t.resize(static_cast<Eigen::Index>(d));
  ws.S.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  // Off the diagonal the factored matrix is the Gram matrix, so dK_i needs no exp.
  const Matrix& K = factor.matrix();
  const Eigen::Index n = X.rows();
  std::vector<Matrix> W(d);  // K^{-1} dK_i
  for (std::size_t i = 0; i < d; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const double t2 = theta[i] * theta[i];
    Matrix dK(n, n);
    for (Eigen::Index b = 0; b < n; ++b) {
      for (Eigen::Index a = 0; a < n; ++a) {
        const double diff = X(a, col) - X(b, col);
        dK(a, b) = a == b ? 0.0 : K(a, b) * diff * diff / t2;
      }
    }
    W[i] = factor.solve(dK);
    ws.t[static_cast<Eigen::Index>(i)] = W[i].trace();
  }
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      // tr(A B) = sum_ab A_ab B_ba
      const double s = W[i].cwiseProduct(W[j].transpose()).sum();
      ws.S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
      ws.S(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
    }
  }
  return ws;
}

inline JeffreysWorkspace jeffreys_workspace(const Matrix& X, const Lengthscales& theta,
                                            const GPConfig& config = {}) {
  return jeffreys_workspace(X, theta, kernel_matrix(X, theta, config));
}

/// Joint log prior density of theta. Unnormalized for Jeffreys; -inf outside
/// the support. Jeffreys propagates FactorizationFailure.
inline double log_prior_density(const PriorSpec& spec, const Lengthscales& theta,
                                const Dataset& data, const GPConfig& config = {}) {
  if (spec.kind == PriorKind::Jeffreys) {
    return jeffreys_workspace(data.inputs(), theta, config).log_density();
  }
  double total = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double lp = log_density_1d(spec, theta[i]);
    if (lp == kNegInf) return kNegInf;
    total += lp;
  }
  return total;
}

/// Same, reusing a training factorization for the Jeffreys case.
inline double log_prior_density(const PriorSpec& spec, const Lengthscales& theta,
                                const Dataset& data, const CovarianceFactor& factor) {
  if (spec.kind == PriorKind::Jeffreys) {
    return jeffreys_workspace(data.inputs(), theta, factor).log_density();
  }
  return log_prior_density(spec, theta, data, GPConfig{});
}

/// "gamma", "gamma:1.5,2.6" (or "gamma:1.5/2.6"), "half-cauchy:2", ...
inline PriorSpec parse_prior(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view name = text.substr(0, colon);
  const auto kind = parse_prior_kind(name);
  if (!kind) throw std::invalid_argument("unknown prior '" + std::string(name) + "'");
  PriorSpec spec = PriorSpec::defaults(*kind);
  if (colon == std::string_view::npos) return spec;
  if (*kind == PriorKind::Jeffreys) throw std::invalid_argument("jeffreys prior takes no parameters");
  const std::string params(text.substr(colon + 1));
  const auto comma = params.find_first_of(",/");
  try {
    spec.a = std::stod(params.substr(0, comma));
    if (comma != std::string::npos) spec.b = std::stod(params.substr(comma + 1));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("bad prior parameters in '" + std::string(text) + "'");
  }
  return PriorSpec::with_parameters(*kind, spec.a, spec.b);
}

}  // namespace bayesgp
