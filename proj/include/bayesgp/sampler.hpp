#pragma once

#include <bayesgp/errors.hpp>
#include <bayesgp/gp_core.hpp>
#include <bayesgp/priors.hpp>
#include <bayesgp/proposals.hpp>
#include <bayesgp/rng.hpp>
#include <bayesgp/types.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace bayesgp {

/// Posterior draws of theta from one Metropolis-within-Gibbs run.
struct Chain {
  std::vector<Lengthscales> samples;  ///< N + 1 states, samples[0] is the initial value
  std::vector<double> tau2_samples;   ///< tau2_hat at each state; NaN if the kernel failed
  std::vector<std::size_t> accept_counts;   ///< per dimension, over the N sweeps
  std::vector<std::uint8_t> accepted;       ///< N x d flags, row-major by iteration
  std::size_t n_iterations = 0;
  std::uint64_t seed = 0;
  std::size_t large_candidates = 0;  ///< proposals above kLargeCandidate

  std::size_t dimension() const noexcept { return accept_counts.size(); }

  double acceptance_rate(std::size_t i) const {
    return n_iterations == 0 ? 0.0
                             : static_cast<double>(accept_counts[i]) / static_cast<double>(n_iterations);
  }

  bool accepted_at(std::size_t iteration, std::size_t i) const {
    return accepted[(iteration - 1) * dimension() + i] != 0;
  }
};

/// theta_i^(0) = sample standard deviation (n - 1 denominator) of input column i.
inline Lengthscales initialize(const Dataset& data) {
  if (data.n() < 2) throw DegenerateDesign("initialization needs at least two input rows");
  const Matrix& X = data.inputs();
  Vector theta(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double ss = (X.col(j).array() - mean).square().sum();
    theta[j] = std::sqrt(ss / static_cast<double>(X.rows() - 1));
    if (!(theta[j] > 0.0)) {
      throw DegenerateDesign("input column " + std::to_string(j) + " is constant");
    }
  }
  return Lengthscales(std::move(theta));
}

/// log of the Metropolis-Hastings acceptance probability, before the min(0, .).
///
/// A candidate with zero target mass is always rejected, and a move between
/// two zero-mass states is rejected too (a chain started outside the support
/// of the prior stays there until it proposes a point inside).
inline double log_acceptance(double log_target_candidate, double log_target_current,
                             double log_correction) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  if (std::isnan(log_target_candidate) || log_target_candidate == -kInf) return -kInf;
  if (std::isnan(log_correction) || log_correction == -kInf) return -kInf;
  if (std::isnan(log_target_current) || log_target_current == -kInf) return kInf;
  return log_target_candidate - log_target_current + log_correction;
}

/// Accept iff log(u) < log_alpha.
inline bool metropolis_accept(double log_alpha, double u) {
  if (log_alpha >= 0.0) return true;
  return std::log(u) < log_alpha;
}

struct SamplerOptions {
  /// Replace the likelihood by a constant, so the chain targets the prior alone.
  bool flat_likelihood = false;
  /// Start here instead of at the column standard deviations.
  std::optional<Lengthscales> initial;
};

namespace detail {

/// Log prior + profile log-likelihood at one theta, plus tau2_hat.
struct StateEval {
  double log_prior = kNegInf;
  double log_likelihood = kNegInf;
  double tau2 = std::numeric_limits<double>::quiet_NaN();

  double log_target() const { return log_prior + log_likelihood; }
};

inline StateEval evaluate_state(const Dataset& data, const Lengthscales& theta,
                                const PriorSpec& prior, const GPConfig& config,
                                bool flat_likelihood, bool always_fit = false) {
  StateEval ev;
  const bool needs_factor = !flat_likelihood || prior.kind == PriorKind::Jeffreys;
  if (prior.kind != PriorKind::Jeffreys) {
    ev.log_prior = log_prior_density(prior, theta, data, config);
    // A rejected candidate's tau2 is never stored, so skip the factorization.
    if (ev.log_prior == kNegInf && !flat_likelihood && !always_fit) return ev;
  }
  std::optional<CovarianceFactor> factor;
  try {
    factor.emplace(kernel_matrix(data.inputs(), theta, config));
  } catch (const FactorizationFailure&) {
    if (needs_factor) {
      ev.log_prior = kNegInf;
      return ev;
    }
  }
  if (factor) ev.tau2 = tau2_hat(data, *factor);
  if (prior.kind == PriorKind::Jeffreys) ev.log_prior = log_prior_density(prior, theta, data, *factor);
  ev.log_likelihood = flat_likelihood ? 0.0 : profile_log_likelihood(data, *factor);
  return ev;
}

}  // namespace detail

/// N Gibbs sweeps; each sweep updates theta_1..theta_d in order with one
/// Metropolis-Hastings step. Deterministic in (data, prior, proposal, N, seed).
inline Chain run_chain(const Dataset& data, const PriorSpec& prior, const ProposalSpec& proposal,
                       const GPConfig& config, std::size_t iterations, std::uint64_t seed,
                       const SamplerOptions& options = {}) {
  if (iterations < 1) throw std::invalid_argument("run_chain: need at least one iteration");
  Lengthscales theta = options.initial ? *options.initial : initialize(data);
  if (theta.size() != data.d()) throw DimensionMismatch("initial theta has the wrong dimension");
  const std::size_t d = theta.size();

  Rng rng(seed);
  Chain chain;
  chain.seed = seed;
  chain.n_iterations = iterations;
  chain.accept_counts.assign(d, 0);
  chain.accepted.assign(iterations * d, 0);
  chain.samples.reserve(iterations + 1);
  chain.tau2_samples.reserve(iterations + 1);

  detail::StateEval current =
      detail::evaluate_state(data, theta, prior, config, options.flat_likelihood, true);
  chain.samples.push_back(theta);
  chain.tau2_samples.push_back(current.tau2);

  for (std::size_t t = 1; t <= iterations; ++t) {
    for (std::size_t i = 0; i < d; ++i) {
      const double candidate_i = propose(proposal, theta[i], rng);
      const double u = rng.uniform();
      if (candidate_i > kLargeCandidate) ++chain.large_candidates;
      if (!std::isfinite(candidate_i)) continue;

      const double correction = log_correction(proposal, theta[i], candidate_i);
      Lengthscales candidate = theta.with(i, candidate_i);
      const detail::StateEval next =
          detail::evaluate_state(data, candidate, prior, config, options.flat_likelihood);
      const double log_alpha = log_acceptance(next.log_target(), current.log_target(), correction);
      if (metropolis_accept(log_alpha, u)) {
        theta = std::move(candidate);
        current = next;
        ++chain.accept_counts[i];
        chain.accepted[(t - 1) * d + i] = 1;
      }
    }
    chain.samples.push_back(theta);
    chain.tau2_samples.push_back(current.tau2);
  }
  return chain;
}

/// Indices of the samples kept after burn-in and thinning: B+1, B+1+k, ..., <= N
/// with B = floor(burn_in_fraction * N).
inline std::vector<std::size_t> retained_indices(const Chain& chain, double burn_in_fraction,
                                                 std::size_t thinning) {
  if (!(burn_in_fraction >= 0.0 && burn_in_fraction < 1.0)) {
    throw std::invalid_argument("burn_in_fraction must lie in [0, 1)");
  }
  if (thinning < 1) throw std::invalid_argument("thinning must be at least 1");
  const std::size_t N = chain.n_iterations;
  const auto burn = static_cast<std::size_t>(std::floor(burn_in_fraction * static_cast<double>(N)));
  std::vector<std::size_t> out;
  for (std::size_t t = burn + 1; t <= N && t < chain.samples.size(); t += thinning) out.push_back(t);
  if (out.empty()) throw EmptyChain("no samples left after burn-in and thinning");
  return out;
}

/// Posterior-predictive summary; mean in raw output units.
///   covariance = aleatoric (mean of per-sample covariances)
///              + epistemic (population covariance of per-sample means)
struct PredictiveSummary {
  Vector mean;
  Matrix covariance;
  Matrix aleatoric;
  Matrix epistemic;
  std::size_t burn_in = 0;
  std::size_t n_samples = 0;
};

/// Diagonal-only counterpart of PredictiveSummary.
struct MarginalSummary {
  Vector mean;
  Vector variance;
  Vector aleatoric;
  Vector epistemic;
  std::size_t burn_in = 0;
  std::size_t n_samples = 0;
};

namespace detail {

/// Weighted streaming mean / scatter (West 1979). Runs of identical theta are
/// folded into one weighted update.
template <typename Moments, typename Accumulate>
void for_each_distinct_run(const Chain& chain, const std::vector<std::size_t>& idx,
                           Moments&& moments_of, Accumulate&& accumulate) {
  std::size_t k = 0;
  while (k < idx.size()) {
    std::size_t run = 1;
    while (k + run < idx.size() && chain.samples[idx[k + run]] == chain.samples[idx[k]]) ++run;
    accumulate(moments_of(chain.samples[idx[k]]), static_cast<double>(run));
    k += run;
  }
}

}  // namespace detail

inline PredictiveSummary posterior_predict(const Chain& chain, const Dataset& data,
                                           const Matrix& Xnew, const GPConfig& config = {},
                                           double burn_in_fraction = 0.3, std::size_t thinning = 1) {
  const auto idx = retained_indices(chain, burn_in_fraction, thinning);
  const Eigen::Index m = Xnew.rows();
  Vector mean = Vector::Zero(m);
  Matrix scatter = Matrix::Zero(m, m);
  Matrix aleatoric = Matrix::Zero(m, m);
  double total = 0.0;
  detail::for_each_distinct_run(
      chain, idx,
      [&](const Lengthscales& theta) { return predictive_moments(data, theta, Xnew, config); },
      [&](const PredictiveMoments& pm, double w) {
        total += w;
        const Vector delta = pm.mean - mean;
        mean += (w / total) * delta;
        scatter.noalias() += w * delta * (pm.mean - mean).transpose();
        aleatoric += w * pm.covariance;
      });
  PredictiveSummary out;
  out.burn_in = idx.front() - 1;
  out.n_samples = idx.size();
  out.aleatoric = aleatoric / total;
  out.epistemic = (0.5 * (scatter + scatter.transpose())) / total;
  out.covariance = out.aleatoric + out.epistemic;
  out.mean = mean.array() + data.output_offset();
  return out;
}

inline MarginalSummary posterior_predict_marginal(const Chain& chain, const Dataset& data,
                                                  const Matrix& Xnew, const GPConfig& config = {},
                                                  double burn_in_fraction = 0.3,
                                                  std::size_t thinning = 1) {
  const auto idx = retained_indices(chain, burn_in_fraction, thinning);
  const Eigen::Index m = Xnew.rows();
  Vector mean = Vector::Zero(m);
  Vector scatter = Vector::Zero(m);
  Vector aleatoric = Vector::Zero(m);
  double total = 0.0;
  detail::for_each_distinct_run(
      chain, idx,
      [&](const Lengthscales& theta) { return predictive_marginals(data, theta, Xnew, config); },
      [&](const PredictiveMarginals& pm, double w) {
        total += w;
        const Vector delta = pm.mean - mean;
        mean += (w / total) * delta;
        scatter.array() += w * delta.array() * (pm.mean - mean).array();
        aleatoric += w * pm.variance;
      });
  MarginalSummary out;
  out.burn_in = idx.front() - 1;
  out.n_samples = idx.size();
  out.aleatoric = aleatoric / total;
  out.epistemic = scatter / total;
  out.variance = out.aleatoric + out.epistemic;
  out.mean = mean.array() + data.output_offset();
  return out;
}

}  // namespace bayesgp
