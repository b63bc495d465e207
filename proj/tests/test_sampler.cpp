#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace bayesgp;

namespace {

Dataset higdon_data(std::size_t n, std::uint64_t seed) {
  const TestFunction fn(TestFunctionKind::Higdon);
  const Design design = latin_hypercube(n, 1, seed);
  return Dataset(design.points, evaluate_rows(fn, scale_to_domain(design, fn.bounds())), unit_bounds(1), true);
}

Chain chain_with(std::vector<double> thetas) {
  Chain c;
  c.n_iterations = thetas.size() - 1;
  c.accept_counts.assign(1, 0);
  c.accepted.assign(c.n_iterations, 0);
  for (double t : thetas) {
    c.samples.push_back(Lengthscales::constant(1, t));
    c.tau2_samples.push_back(0.0);
  }
  return c;
}

}  // namespace

TEST(Initialize, TwoPointColumn) {
  Matrix X(2, 1);
  X << 0.0, 1.0;
  const auto theta = initialize(Dataset(X, Vector::Zero(2)));
  EXPECT_NEAR(theta[0], 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Initialize, LhsColumnSpread) {
  int inside = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Matrix X = latin_hypercube(10, 1, s).points;
    const double mean = X.mean();
    const double sd = std::sqrt((X.array() - mean).square().sum() / 9.0);
    const double theta = initialize(Dataset(X, Vector::Zero(10)))[0];
    EXPECT_NEAR(theta, sd, 1e-14);
    if (theta > 0.25 && theta < 0.35) ++inside;
  }
  EXPECT_GE(inside, 90);
}

TEST(Initialize, ConstantColumnIsDegenerate) {
  Matrix X(3, 2);
  X << 0.1, 0.5, 0.2, 0.5, 0.3, 0.5;
  EXPECT_THROW(initialize(Dataset(X, Vector::Zero(3))), DegenerateDesign);
  Matrix one(1, 1);
  one << 0.5;
  EXPECT_THROW(initialize(Dataset(one, Vector::Zero(1))), DegenerateDesign);
}

TEST(Acceptance, Rules) {
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_acceptance(1.0, 1.0, 0.0), 0.0);
  EXPECT_TRUE(metropolis_accept(log_acceptance(1.0, 1.0, 0.0), 0.999999));
  EXPECT_EQ(log_acceptance(-inf, 0.0, 0.0), -inf);
  EXPECT_EQ(log_acceptance(-inf, -inf, 0.0), -inf);
  EXPECT_EQ(log_acceptance(0.0, -inf, 0.0), inf);
  EXPECT_EQ(log_acceptance(std::nan(""), 0.0, 0.0), -inf);
  EXPECT_FALSE(metropolis_accept(-inf, 0.5));
  EXPECT_TRUE(metropolis_accept(std::log(0.5), 0.49));
  EXPECT_FALSE(metropolis_accept(std::log(0.5), 0.5));
}

TEST(RunChain, DeterministicPerSeed) {
  const Dataset data = higdon_data(10, 4);
  for (auto kind : {ProposalKind::MultiplicativeUniform, ProposalKind::LogGaussian}) {
    const auto proposal = ProposalSpec::defaults(kind, 1);
    const Chain a = run_chain(data, PriorSpec::gamma(), proposal, {}, 300, 99);
    const Chain b = run_chain(data, PriorSpec::gamma(), proposal, {}, 300, 99);
    const Chain c = run_chain(data, PriorSpec::gamma(), proposal, {}, 300, 100);
    ASSERT_EQ(a.samples.size(), 301u);
    bool differs = false;
    for (std::size_t t = 0; t < a.samples.size(); ++t) {
      EXPECT_EQ(a.samples[t].values()[0], b.samples[t].values()[0]);
      differs = differs || !(a.samples[t] == c.samples[t]);
    }
    EXPECT_EQ(a.accept_counts, b.accept_counts);
    EXPECT_TRUE(differs);
  }
}

TEST(RunChain, BookkeepingInvariants) {
  const TestFunction fn(TestFunctionKind::Hartmann3);
  const Design design = latin_hypercube(30, 3, 5);
  const Dataset data(design.points, evaluate_rows(fn, scale_to_domain(design, fn.bounds())), unit_bounds(3), true);
  for (auto prior : kAllPriors) {
    for (auto kind : {ProposalKind::MultiplicativeUniform, ProposalKind::LogGaussian}) {
      const Chain chain = run_chain(data, PriorSpec::defaults(prior), ProposalSpec::defaults(kind, 3), {}, 60, 3);
      ASSERT_EQ(chain.samples.size(), 61u);
      ASSERT_EQ(chain.tau2_samples.size(), 61u);
      for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_LE(chain.accept_counts[i], 60u);
        std::size_t flags = 0;
        for (std::size_t t = 1; t <= 60; ++t) flags += chain.accepted_at(t, i);
        EXPECT_EQ(flags, chain.accept_counts[i]);
      }
      for (std::size_t t = 0; t < chain.samples.size(); t += 7) {
        for (std::size_t i = 0; i < 3; ++i) EXPECT_GT(chain.samples[t][i], 0.0);
        const double tau2 = tau2_hat(data, kernel_matrix(data.inputs(), chain.samples[t]));
        EXPECT_NEAR(chain.tau2_samples[t], tau2, 1e-12 * tau2);
      }
    }
  }
}

TEST(RunChain, ForcedIdenticalCandidateAlwaysAccepted) {
  // With u barely above 1 every candidate is numerically next to the
  // current value and the flat target makes alpha = 1 up to the correction.
  const Dataset data = higdon_data(10, 1);
  SamplerOptions opts;
  opts.flat_likelihood = true;
  const Chain chain = run_chain(data, PriorSpec::log_normal(), ProposalSpec::multiplicative_uniform(1.0 + 1e-12),
                                {}, 200, 5, opts);
  EXPECT_GE(chain.accept_counts[0], 190u);
}

TEST(RunChain, BetaLockWhenStartedOutsideSupport) {
  // Raw-scale Higdon inputs put theta^(0) near 3; with u = 2 no candidate can
  // reach (0, 1), so the chain never moves.
  const TestFunction fn(TestFunctionKind::Higdon);
  const Design design = latin_hypercube(10, 1, 8);
  const Matrix raw = scale_to_domain(design, fn.bounds());
  const Dataset data(raw, evaluate_rows(fn, raw), fn.bounds());
  const Chain chain = run_chain(data, PriorSpec::beta(), ProposalSpec::multiplicative_uniform(2.0), {}, 500, 2);
  ASSERT_GT(chain.samples[0][0], 2.0);
  EXPECT_EQ(chain.accept_counts[0], 0u);
  EXPECT_EQ(chain.samples.back(), chain.samples.front());
  EXPECT_TRUE(std::isfinite(chain.tau2_samples.back()));
}

TEST(RunChain, FlatLikelihoodRecoversGammaPrior) {
  const Dataset data = higdon_data(10, 2);
  SamplerOptions opts;
  opts.flat_likelihood = true;
  const auto prior = PriorSpec::gamma(1.5, 2.6);
  for (auto kind : {ProposalKind::MultiplicativeUniform, ProposalKind::LogGaussian}) {
    const double step = kind == ProposalKind::MultiplicativeUniform ? 4.0 : 1.5;
    const ProposalSpec proposal = kind == ProposalKind::MultiplicativeUniform
                                      ? ProposalSpec::multiplicative_uniform(step)
                                      : ProposalSpec::log_gaussian(step);
    const Chain chain = run_chain(data, prior, proposal, {}, 10000, 77, opts);
    std::vector<double> kept;
    for (std::size_t t : retained_indices(chain, 0.3, 1)) kept.push_back(chain.samples[t][0]);
    ASSERT_EQ(kept.size(), 7000u);
    const auto iid = bayesgp::testing::iid_prior_draws(prior, 7000, 1234);
    EXPECT_LT(bayesgp::testing::ks_statistic(kept, iid), 0.05) << to_string(kind);
  }
}

TEST(Retained, BurnInAndThinning) {
  const Chain c = chain_with({1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1});
  const auto idx = retained_indices(c, 0.3, 1);
  ASSERT_EQ(idx.size(), 7u);
  EXPECT_EQ(idx.front(), 4u);
  EXPECT_EQ(idx.back(), 10u);
  EXPECT_EQ(retained_indices(c, 0.3, 3), (std::vector<std::size_t>{4, 7, 10}));
  Chain truncated = chain_with({1});
  truncated.n_iterations = 5;
  EXPECT_THROW(retained_indices(truncated, 0.3, 1), EmptyChain);
  EXPECT_THROW(retained_indices(c, 1.0, 1), std::invalid_argument);
}

TEST(PosteriorPredict, ConstantChainHasNoEpistemicTerm) {
  const Dataset data = higdon_data(8, 3);
  const Chain c = chain_with({0.2, 0.2, 0.2, 0.2, 0.2});
  Matrix Xn(3, 1);
  Xn << 0.1, 0.55, 0.93;
  const auto s = posterior_predict(c, data, Xn, {}, 0.3, 1);
  const auto pm = predictive_moments(data, Lengthscales::constant(1, 0.2), Xn);
  EXPECT_EQ(s.epistemic, Matrix::Zero(3, 3));
  EXPECT_LT((s.mean.array() - data.output_offset() - pm.mean.array()).abs().maxCoeff(), 1e-12);
  EXPECT_LT((s.covariance - pm.covariance).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(PosteriorPredict, TwoValueChainHandComputed) {
  const Dataset data = higdon_data(8, 6);
  const Chain c = chain_with({0.5, 0.05, 0.3});
  Matrix Xn(1, 1);
  Xn << 0.37;
  const auto s = posterior_predict(c, data, Xn, {}, 0.0, 1);
  ASSERT_EQ(s.n_samples, 2u);
  const auto p1 = predictive_moments(data, Lengthscales::constant(1, 0.05), Xn);
  const auto p2 = predictive_moments(data, Lengthscales::constant(1, 0.3), Xn);
  const double m1 = p1.mean[0], m2 = p2.mean[0], mbar = 0.5 * (m1 + m2);
  const double epi = ((m1 - mbar) * (m1 - mbar) + (m2 - mbar) * (m2 - mbar)) / 2.0;
  EXPECT_NEAR(s.epistemic(0, 0), epi, 1e-12);
  EXPECT_NEAR(s.aleatoric(0, 0), 0.5 * (p1.covariance(0, 0) + p2.covariance(0, 0)), 1e-12);
  EXPECT_NEAR(s.mean[0], mbar + data.output_offset(), 1e-12);
  EXPECT_NEAR(s.covariance(0, 0), s.aleatoric(0, 0) + s.epistemic(0, 0), 1e-10);
}

TEST(PosteriorPredict, RunFoldingMatchesBruteForce) {
  const Dataset data = higdon_data(10, 9);
  const Chain chain = run_chain(data, PriorSpec::log_normal(), ProposalSpec::log_gaussian(0.5), {}, 200, 12);
  Matrix Xn(4, 1);
  Xn << 0.05, 0.4, 0.61, 0.99;
  const auto s = posterior_predict(chain, data, Xn, {}, 0.3, 2);
  const auto idx = retained_indices(chain, 0.3, 2);
  Vector mean = Vector::Zero(4);
  Matrix alea = Matrix::Zero(4, 4);
  std::vector<Vector> means;
  for (std::size_t t : idx) {
    const auto pm = predictive_moments(data, chain.samples[t], Xn);
    means.push_back(pm.mean);
    mean += pm.mean;
    alea += pm.covariance;
  }
  const double k = static_cast<double>(idx.size());
  mean /= k;
  Matrix epi = Matrix::Zero(4, 4);
  for (const auto& m : means) epi += (m - mean) * (m - mean).transpose();
  epi /= k;
  EXPECT_LT((s.mean.array() - data.output_offset() - mean.array()).abs().maxCoeff(), 1e-10);
  EXPECT_LT((s.aleatoric - alea / k).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.epistemic - epi).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.covariance - s.aleatoric - s.epistemic).cwiseAbs().maxCoeff(), 1e-10);

  const auto mg = posterior_predict_marginal(chain, data, Xn, {}, 0.3, 2);
  EXPECT_LT((mg.mean - s.mean).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((mg.variance - s.covariance.diagonal()).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(PosteriorPredict, AcceptanceRateStrictlyBetweenZeroAndOne) {
  const Dataset data = higdon_data(10, 10);
  for (auto kind : {ProposalKind::MultiplicativeUniform, ProposalKind::LogGaussian}) {
    const Chain chain = run_chain(data, PriorSpec::log_normal(), ProposalSpec::defaults(kind, 1), {}, 10000, 1);
    EXPECT_GT(chain.acceptance_rate(0), 0.0);
    EXPECT_LT(chain.acceptance_rate(0), 1.0);
  }
}
