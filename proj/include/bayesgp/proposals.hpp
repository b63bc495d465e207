#pragma once

#include <bayesgp/rng.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bayesgp {

enum class ProposalKind { MultiplicativeUniform, LogGaussian };

inline std::string_view to_string(ProposalKind kind) {
  return kind == ProposalKind::MultiplicativeUniform ? "uniform" : "normal";
}

inline std::optional<ProposalKind> parse_proposal_kind(std::string_view name) {
  if (name == "uniform" || name == "multiplicative-uniform") return ProposalKind::MultiplicativeUniform;
  if (name == "normal" || name == "log-gaussian") return ProposalKind::LogGaussian;
  return std::nullopt;
}

/// Componentwise random-walk proposal for a positive lengthscale.
///
/// MultiplicativeUniform: candidate ~ Unif(current / u, u * current), step = u > 1.
/// LogGaussian: log(candidate) ~ N(log(current), sigma^2) truncated below at
/// log(lower_bound), step = sigma > 0.
struct ProposalSpec {
  ProposalKind kind = ProposalKind::MultiplicativeUniform;
  double step = 2.0;
  double lower_bound = 1e-10;

  static ProposalSpec multiplicative_uniform(double u) {
    if (!(u > 1.0) || !std::isfinite(u)) throw std::invalid_argument("uniform proposal needs u > 1");
    return {ProposalKind::MultiplicativeUniform, u, 1e-10};
  }

  static ProposalSpec log_gaussian(double sigma, double lower_bound = 1e-10) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
      throw std::invalid_argument("normal proposal needs sigma > 0");
    }
    if (!(lower_bound > 0.0)) throw std::invalid_argument("lower bound must be positive");
    return {ProposalKind::LogGaussian, sigma, lower_bound};
  }

  /// u = 2 / sigma = 0.5 up to four inputs, u = 1.5 / sigma = 0.1 beyond.
  static ProposalSpec defaults(ProposalKind kind, std::size_t dimension) {
    const bool low_dim = dimension <= 4;
    if (kind == ProposalKind::MultiplicativeUniform) {
      return multiplicative_uniform(low_dim ? 2.0 : 1.5);
    }
    return log_gaussian(low_dim ? 0.5 : 0.1);
  }
};

/// Candidates above this are reported back to the caller as suspicious.
inline constexpr double kLargeCandidate = 1e12;

namespace detail {

inline double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// log P(Z >= a) for standard normal Z.
inline double log_upper_tail(double a) { return std::log(0.5 * std::erfc(a / std::numbers::sqrt2)); }

/// Standard normal truncated to [a, inf): naive rejection while the
/// acceptance rate is high, otherwise the exponential-proposal sampler of
/// Robert (1995).
inline double truncated_std_normal(double a, Rng& rng) {
  if (a <= 0.5) {
    for (;;) {
      const double z = rng.normal();
      if (z >= a) return z;
    }
  }
  const double rate = 0.5 * (a + std::sqrt(a * a + 4.0));
  for (;;) {
    const double z = a + rng.exponential() / rate;
    const double diff = z - rate;
    if (rng.uniform() <= std::exp(-0.5 * diff * diff)) return z;
  }
}

}  // namespace detail

template <typename Random = Rng>
double propose(const ProposalSpec& spec, double current, Random& rng) {
  if (!(current > 0.0)) throw std::invalid_argument("propose: current value must be positive");
  if (spec.kind == ProposalKind::MultiplicativeUniform) {
    return rng.uniform(current / spec.step, current * spec.step);
  }
  const double center = std::log(current);
  const double floor = std::log(spec.lower_bound);
  const double z = detail::truncated_std_normal((floor - center) / spec.step, rng);
  // exp rounding can land a hair under the bound.
  return std::max(std::exp(center + spec.step * z), spec.lower_bound);
}

/// log q(current | candidate) - log q(candidate | current), with q the density
/// of the candidate on the lengthscale scale (Jacobian included).
inline double log_correction(const ProposalSpec& spec, double current, double candidate) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (!(current > 0.0) || !(candidate > 0.0)) return kNegInf;
  if (candidate == current) return 0.0;
  if (spec.kind == ProposalKind::MultiplicativeUniform) {
    // q(b | a) = 1 / (a (u - 1/u)) on [a/u, u a]
    const double u = spec.step;
    const bool forward = candidate >= current / u && candidate <= current * u;
    const bool backward = current >= candidate / u && current <= candidate * u;
    if (!forward || !backward) return kNegInf;
    return std::log(current) - std::log(candidate);
  }
  if (current < spec.lower_bound || candidate < spec.lower_bound) return kNegInf;
  const double floor = std::log(spec.lower_bound);
  const double lc = std::log(current);
  const double lk = std::log(candidate);
  // Gaussian kernels cancel; what remains is the Jacobian ratio and the
  // truncation normalizers Z(c) = P(N(log c, sigma^2) >= log lower_bound).
  const double log_z_current = detail::log_upper_tail((floor - lc) / spec.step);
  const double log_z_candidate = detail::log_upper_tail((floor - lk) / spec.step);
  return (lk - lc) + (log_z_current - log_z_candidate);
}

}  // namespace bayesgp
