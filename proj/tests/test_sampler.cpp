#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "ssgp/designs.hpp"
#include "ssgp/sampler.hpp"
#include "ssgp/testbed.hpp"

using namespace ssgp;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Dataset toy_data(std::uint64_t seed, std::size_t n = 30) {
  const TestFunction f = toy_function();
  const Design d = maximin_lhd(n, 3, seed);
  Vector y(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = eval_function(f, d.points.row(i).transpose());
  return Dataset::from_unit(d.points, y);
}

Hyperparams short_hyper(std::size_t d, std::size_t iters = 300, std::size_t burnin = 100) {
  Hyperparams h;
  h.tau = Vector::Constant(static_cast<Eigen::Index>(d), 0.3);
  h.c = Vector::Constant(static_cast<Eigen::Index>(d), 25.0);
  h.p = Vector::Constant(static_cast<Eigen::Index>(d), 0.5);
  h.prop_sd = Vector::Constant(static_cast<Eigen::Index>(d), 0.03);
  h.iters = iters;
  h.burnin = burnin;
  h.seed = 42;
  return h;
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  for (double x : v) m.mean += x;
  m.mean /= static_cast<double>(v.size());
  for (double x : v) m.var += (x - m.mean) * (x - m.mean);
  m.var /= static_cast<double>(v.size() - 1);
  return m;
}

}  // namespace

TEST(DefaultHyperparams, FullUnitRangeGivesOneThird) {
  Matrix x(3, 3);
  x << 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.2, 0.9;
  const Hyperparams h = default_hyperparams(Dataset::from_unit(x, vec({1.0, 2.0, 3.0})));
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_DOUBLE_EQ(h.tau(k), 1.0 / 3.0);
    EXPECT_NEAR(h.tau(k), 0.3, 0.034);
    EXPECT_EQ(h.c(k), 25.0);
    EXPECT_EQ(h.p(k), 0.5);
    EXPECT_EQ(h.prop_sd(k), 0.03);
  }
  EXPECT_EQ(h.iters, 6000u);
  EXPECT_EQ(h.burnin, 2000u);
}

TEST(DefaultHyperparams, HalfRangeGivesTwoThirds) {
  Matrix x(2, 1);
  x << 0.25, 0.75;
  const Hyperparams h = default_hyperparams(Dataset::from_unit(x, vec({1.0, 2.0})));
  EXPECT_NEAR(h.tau(0), 1.0 / 1.5, 1e-15);
}

TEST(DefaultHyperparams, SingleValuedInputIsAnError) {
  Matrix x(2, 2);
  x << 0.3, 0.0, 0.3, 1.0;
  EXPECT_THROW(default_hyperparams(Dataset::from_unit(x, vec({1.0, 2.0}))), InvalidArgument);
}

TEST(Validate, RejectsOutOfDomainSettings) {
  Hyperparams h = short_hyper(2);
  EXPECT_TRUE(validate(h, 2).empty());
  EXPECT_THROW(validate(h, 3), InvalidArgument);
  auto bad = [&](auto mutate) {
    Hyperparams b = h;
    mutate(b);
    EXPECT_THROW(validate(b, 2), InvalidArgument);
  };
  bad([](Hyperparams& b) { b.tau(0) = 0.0; });
  bad([](Hyperparams& b) { b.c(1) = 1.0; });
  bad([](Hyperparams& b) { b.p(0) = 1.0; });
  bad([](Hyperparams& b) { b.p(0) = 0.0; });
  bad([](Hyperparams& b) { b.prop_sd(0) = -0.1; });
  bad([](Hyperparams& b) { b.burnin = b.iters; });
  bad([](Hyperparams& b) { b.thin = 0; });
  bad([](Hyperparams& b) { b.nugget = 1e-3; });
  Hyperparams small_c = h;
  small_c.c(0) = 1.5;
  EXPECT_EQ(validate(small_c, 2).size(), 1u);
}

TEST(PhiLogKernel, EvenInPhi) {
  const Dataset data = toy_data(5, 12);
  const Hyperparams h = short_hyper(3);
  const Gamma g{1, 0, 1};
  for (const Vector& phi : {vec({0.8, -1.1, 0.05}), vec({2.0, 0.3, -0.7})})
    EXPECT_NEAR(phi_log_kernel(phi, 0.1, 2.0, g, data, h), phi_log_kernel(-phi, 0.1, 2.0, g, data, h), 1e-10);
}

TEST(PhiLogKernel, TwoPointOracle) {
  Matrix x(2, 1);
  x << 0.2, 0.7;
  const Dataset data = Dataset::from_unit(x, vec({1.3, -0.4}));
  Hyperparams h = short_hyper(1);
  for (const double phi : {0.3, 1.1, 2.5}) {
    for (const std::uint8_t g : {0, 1}) {
      const double mu = 0.2, s2 = 1.7;
      const double rho = std::exp(-phi * phi * 0.25);
      Matrix r(2, 2);
      r << 1.0 + 1e-8, rho, rho, 1.0 + 1e-8;
      const Matrix ri = oracle::inverse(r);
      const Vector e = data.responses.array() - mu;
      const double sd = 0.3 * (g ? 25.0 : 1.0);
      const double expected = -0.5 * std::log(r.determinant()) - e.dot(ri * e) / (2.0 * s2) - 0.5 * phi * phi / (sd * sd);
      EXPECT_NEAR(phi_log_kernel(vec({phi}), mu, s2, Gamma{g}, data, h), expected, 1e-10);
    }
  }
}

TEST(PhiLogKernel, SpikePriorTermIsQuadratic) {
  const Hyperparams h = short_hyper(2);
  const Gamma g{0, 1};
  const double a = log_phi_prior(vec({0.2, 1.0}), g, h);
  const double b = log_phi_prior(vec({0.5, 1.0}), g, h);
  EXPECT_LT(b, a);
  EXPECT_NEAR(a - b, (0.5 * 0.5 - 0.2 * 0.2) / (2.0 * 0.09), 1e-12);
}

TEST(PhiLogKernel, IllConditionedPropagates) {
  Matrix x(2, 1);
  x << 0.5, 0.5;
  const Dataset data = Dataset::from_unit(x, vec({1.0, 1.0}));
  EXPECT_THROW(phi_log_kernel(vec({1.0}), 0.0, 1.0, Gamma{1}, data, short_hyper(1), NuggetPolicy{0.0, 0.0, 10.0}),
               IllConditioned);
}

// With R = I the mu conditional is N(ybar, sigma2 / n).
TEST(UpdateMu, IdentityCorrelationMoments) {
  Matrix x(5, 1);
  x << 0.0, 0.25, 0.5, 0.75, 1.0;
  const Dataset data = Dataset::from_unit(x, vec({1.0, 2.0, 0.5, 3.0, -1.0}));
  const CorrCache cache = CorrCache::build(data, vec({100.0}), NuggetPolicy{0.0, 1e-4, 10.0});
  Rng rng(1);
  std::vector<double> draws(50000);
  for (double& d : draws) d = draw_mu(cache, 2.0, rng);
  const Moments m = moments(draws);
  const double ybar = 1.1, var = 2.0 / 5.0;
  EXPECT_NEAR(m.mean, ybar, 3.0 * std::sqrt(var / 50000.0));
  EXPECT_NEAR(m.var, var, 3.0 * var * std::sqrt(2.0 / 49999.0));
}

TEST(UpdateMu, VanishingVarianceConcentratesAtGlsMean) {
  const Dataset data = toy_data(2, 10);
  const CorrCache cache = CorrCache::build(data, vec({1.0, 2.0, 0.5}));
  Rng rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_NEAR(draw_mu(cache, 1e-20, rng), cache.gls_mean(), 1e-8);
}

// Conjugate oracle: with phi frozen, mu | sigma2 and sigma2 | mu against explicit-inverse formulas.
TEST(ConjugateOracle, MuAndSigma2ConditionalsAt20kDraws) {
  const Dataset data = toy_data(3, 12);
  const Vector phi = vec({1.2, 1.5, 0.1});
  const CorrCache cache = CorrCache::build(data, phi);
  const Matrix r = oracle::corr(data.points, phi.array().square().matrix(), cache.factor.nugget);
  const Matrix ri = oracle::inverse(r);
  const Vector one = Vector::Ones(12);
  const double s = one.dot(ri * one);
  const double gls = one.dot(ri * data.responses) / s;
  const std::size_t draws = 20000;

  Rng rng(3);
  const double sigma2 = 0.6;
  std::vector<double> mus(draws);
  for (double& m : mus) m = draw_mu(cache, sigma2, rng);
  const Moments mm = moments(mus);
  const double mu_var = sigma2 / s;
  EXPECT_NEAR(mm.mean, gls, 3.0 * std::sqrt(mu_var / draws));
  EXPECT_NEAR(mm.var, mu_var, 3.0 * mu_var * std::sqrt(2.0 / (draws - 1)));

  const double mu = gls + 0.2;
  const Vector e = data.responses.array() - mu;
  const double shape = 6.0, scale = 0.5 * e.dot(ri * e);
  std::vector<double> s2(draws);
  for (double& v : s2) v = draw_sigma2(cache, mu, 12, rng);
  const Moments sm = moments(s2);
  const double ig_mean = scale / (shape - 1.0);
  const double ig_var = scale * scale / ((shape - 1.0) * (shape - 1.0) * (shape - 2.0));
  EXPECT_NEAR(sm.mean, ig_mean, 3.0 * std::sqrt(ig_var / draws));
  for (double v : s2) ASSERT_GT(v, 0.0);
}

// Same oracle through run_chain with the phi and gamma updates switched off:
// the joint (mu, sigma2) Gibbs chain targets mu ~ GLS + t_{n-1} scale and
// sigma2 ~ IG((n-1)/2, Q_hat/2).
TEST(ConjugateOracle, FrozenPhiGibbsChainMarginals) {
  const Dataset data = toy_data(4, 12);
  const Vector phi = vec({1.2, 1.5, 0.1});
  Hyperparams h = short_hyper(3, 20001, 1);
  SamplerControls controls;
  controls.update_phi = false;
  controls.update_gamma = false;
  controls.initial = SamplerState{0.0, 1.0, phi, Gamma{1, 1, 0}};
  const Chain chain = run_chain(data, h, controls);
  ASSERT_EQ(chain.size(), 20000u);

  const Matrix r = oracle::corr(data.points, phi.array().square().matrix(), h.nugget);
  const Matrix ri = oracle::inverse(r);
  const Vector one = Vector::Ones(12);
  const double s = one.dot(ri * one);
  const double gls = one.dot(ri * data.responses) / s;
  const Vector e = data.responses.array() - gls;
  const double q = e.dot(ri * e);
  const double n = 12.0;

  // Draws are autocorrelated through the alternation; batch means give the MC error.
  auto batch_se = [](const std::vector<double>& v) {
    const std::size_t b = 100, len = v.size() / b;
    std::vector<double> means(b, 0.0);
    for (std::size_t i = 0; i < b * len; ++i) means[i / len] += v[i] / static_cast<double>(len);
    return std::sqrt(moments(means).var / static_cast<double>(b));
  };
  const Moments mm = moments(chain.mu);
  EXPECT_NEAR(mm.mean, gls, 3.0 * batch_se(chain.mu));
  const double mu_var = q / (s * (n - 3.0));
  std::vector<double> sq(chain.mu.size());
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (chain.mu[i] - gls) * (chain.mu[i] - gls);
  EXPECT_NEAR(moments(sq).mean, mu_var, 3.0 * batch_se(sq));

  const double s2_mean = q / (n - 3.0);
  EXPECT_NEAR(moments(chain.sigma2).mean, s2_mean, 3.0 * batch_se(chain.sigma2));
  for (std::size_t i = 0; i < chain.size(); ++i) EXPECT_EQ(chain.phi[i], phi);
}

TEST(InverseGamma, MomentsOfIg3And2) {
  Rng rng(5);
  const std::size_t n = 100000;
  std::vector<double> v(n);
  for (double& x : v) x = draw_inverse_gamma(3.0, 2.0, rng);
  for (double x : v) ASSERT_GT(x, 0.0);
  const Moments m = moments(v);
  // IG(3, 2): mean 1, variance 1. The fourth moment is infinite, so the
  // spread is checked through P(X <= 1) = P(Gamma(3, 1) >= 2) = 5 e^-2.
  EXPECT_NEAR(m.mean, 1.0, 3.0 * std::sqrt(1.0 / n));
  const double cdf = 5.0 * std::exp(-2.0);
  const double below = static_cast<double>(std::count_if(v.begin(), v.end(), [](double x) { return x <= 1.0; })) / n;
  EXPECT_NEAR(below, cdf, 3.0 * std::sqrt(cdf * (1.0 - cdf) / n));
}

TEST(InverseGamma, Sigma2ConditionalForUnitResponses) {
  Matrix x(4, 1);
  x << 0.0, 0.33, 0.66, 1.0;
  const Dataset data = Dataset::from_unit(x, vec({1.0, 1.0, 1.0, 1.0}));
  // theta = 1e4 makes R = I (up to the zero nugget), so Q(0) = 4 and the conditional is IG(2, 2).
  const CorrCache cache = CorrCache::build(data, vec({100.0}), NuggetPolicy{0.0, 1e-4, 10.0});
  EXPECT_NEAR(cache.quad_form(0.0), 4.0, 1e-12);
  Rng rng(6);
  const std::size_t n = 100000;
  std::vector<double> v(n);
  for (double& s : v) s = draw_sigma2(cache, 0.0, 4, rng);
  // IG(2, 2) has mean 2 and infinite variance; compare the median instead of
  // relying on a CLT bound: median = 2 / Gamma(2,1) median (1.678347).
  std::sort(v.begin(), v.end());
  EXPECT_NEAR(v[n / 2], 2.0 / 1.6783469900166608, 0.02);
  double mean = 0.0;
  for (double s : v) mean += s / static_cast<double>(n);
  EXPECT_NEAR(mean, 2.0, 0.1);
}

TEST(InverseGamma, ZeroQuadraticFormIsAnError) {
  Matrix x(2, 1);
  x << 0.0, 1.0;
  const Dataset data = Dataset::from_unit(x, vec({1.0, 1.0}));
  const CorrCache cache = CorrCache::build(data, vec({100.0}), NuggetPolicy{0.0, 1e-4, 10.0});
  Rng rng(1);
  EXPECT_THROW(draw_sigma2(cache, 1.0, 2, rng), Error);
}

TEST(UpdatePhi, AcceptanceProbabilityFormula) {
  EXPECT_EQ(mh_accept_probability(-3.0, -3.0), 1.0);
  EXPECT_EQ(mh_accept_probability(1.0, 0.0), 1.0);
  EXPECT_NEAR(mh_accept_probability(-50.0, 0.0), std::exp(-50.0), 1e-30);
  EXPECT_LT(mh_accept_probability(-50.0, 0.0), 1e-21);
  EXPECT_EQ(mh_accept_probability(std::nan(""), 0.0), 0.0);
}

TEST(UpdatePhi, EqualKernelAlwaysAccepts) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const MhStep s = update_phi(vec({0.3, 0.4}), 1.5, [](const Vector&) { return 1.5; }, vec({0.1, 0.1}), rng);
    EXPECT_TRUE(s.accepted);
  }
}

TEST(UpdatePhi, FailedEvaluationRejects) {
  Rng rng(8);
  const MhStep s = update_phi(
      vec({0.3}), 0.0, [](const Vector&) -> double { throw IllConditioned("boom"); }, vec({0.1}), rng);
  EXPECT_FALSE(s.accepted);
  EXPECT_TRUE(s.failed);
  EXPECT_EQ(s.phi, vec({0.3}));
}

// MH stationarity oracle: standard normal target, 100k steps.
TEST(UpdatePhi, StandardNormalTargetMoments) {
  Rng rng(9);
  Vector phi = vec({0.0});
  auto kernel = [](const Vector& p) { return -0.5 * p(0) * p(0); };
  double log_current = kernel(phi);
  const std::size_t n = 100000;
  double sum = 0.0, sum2 = 0.0;
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    MhStep s = update_phi(phi, log_current, kernel, vec({2.4}), rng);
    phi = s.phi;
    log_current = s.log_kernel;
    accepted += s.accepted;
    sum += phi(0);
    sum2 += phi(0) * phi(0);
  }
  const double mean = sum / n, var = sum2 / n - mean * mean;
  EXPECT_NEAR(mean, 0.0, 0.02);
  EXPECT_NEAR(var, 1.0, 0.05);
  EXPECT_GT(accepted, n / 5);
}

TEST(UpdateGamma, InclusionProbabilityExamples) {
  EXPECT_NEAR(gamma_inclusion_probability(0.0, 0.3, 25.0, 0.5), 1.0 / 26.0, 1e-15);
  EXPECT_NEAR(gamma_inclusion_probability(0.9, 0.3, 25.0, 0.5), 0.7814137618768208, 1e-12);
  EXPECT_NEAR(1.0 / 26.0, 0.03846, 1e-5);
  EXPECT_EQ(gamma_inclusion_probability(0.0, 0.3, 25.0, 1.0), 1.0);
  Rng rng(10);
  Hyperparams h = short_hyper(3);
  h.p = Vector::Constant(3, 1.0);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(update_gamma(vec({0.0, 0.01, -0.02}), h, rng), (Gamma{1, 1, 1}));
}

// Independent density evaluation in long double on 1000 random parameter draws.
TEST(UpdateGamma, MatchesDensityOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> phi_d(-3.0, 3.0), tau_d(0.05, 1.0), c_d(1.5, 40.0), p_d(0.01, 0.99);
  for (int i = 0; i < 1000; ++i) {
    const double phi = phi_d(rng), tau = tau_d(rng), c = c_d(rng), p = p_d(rng);
    const long double a = oracle::normal_pdf(phi, c * tau) * p;
    const long double b = oracle::normal_pdf(phi, tau) * (1.0L - p);
    const double expected = static_cast<double>(a / (a + b));
    EXPECT_NEAR(gamma_inclusion_probability(phi, tau, c, p), expected, 1e-12)
        << "phi=" << phi << " tau=" << tau << " c=" << c << " p=" << p;
  }
}

TEST(UpdateGamma, FarTailsDoNotUnderflow) {
  // Spike density at phi = 40 with tau = 0.3 underflows; the slab wins.
  EXPECT_EQ(gamma_inclusion_probability(40.0, 0.3, 25.0, 0.5), 1.0);
  EXPECT_FALSE(std::isnan(gamma_inclusion_probability(1e6, 0.3, 25.0, 0.5)));
}

TEST(UpdateGamma, EmpiricalFrequencyMatchesProbability) {
  Rng rng(12);
  const Hyperparams h = short_hyper(1);
  const double p = gamma_inclusion_probability(0.9, 0.3, 25.0, 0.5);
  std::size_t ones = 0;
  const std::size_t n = 50000;
  for (std::size_t i = 0; i < n; ++i) ones += update_gamma(vec({0.9}), h, rng)[0];
  EXPECT_NEAR(static_cast<double>(ones) / n, p, 3.0 * std::sqrt(p * (1 - p) / n));
}

TEST(RunChain, StoresIterationsMinusBurnin) {
  const Dataset data = toy_data(6, 15);
  Hyperparams h = short_hyper(3, 21, 20);
  EXPECT_EQ(run_chain(data, h).size(), 1u);
  h = short_hyper(3, 50, 10);
  const Chain c = run_chain(data, h);
  EXPECT_EQ(c.size(), 40u);
  EXPECT_EQ(c.scan.front(), 11u);
  EXPECT_EQ(c.scan.back(), 50u);
  h.thin = 3;
  EXPECT_EQ(run_chain(data, h).size(), h.stored_draws());
  EXPECT_EQ(h.stored_draws(), 14u);
}

TEST(RunChain, DeterministicGivenSeed) {
  const Dataset data = toy_data(7, 20);
  const Hyperparams h = short_hyper(3, 400, 100);
  const Chain a = run_chain(data, h), b = run_chain(data, h);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.mu[i], b.mu[i]);
    EXPECT_EQ(a.sigma2[i], b.sigma2[i]);
    EXPECT_EQ(a.phi[i], b.phi[i]);
    EXPECT_EQ(a.gamma[i], b.gamma[i]);
  }
  EXPECT_EQ(a.mh_accept_rate, b.mh_accept_rate);
  Hyperparams other = h;
  other.seed = 43;
  EXPECT_NE(run_chain(data, other).mu, a.mu);
}

TEST(RunChain, DrawsRespectSupportAndStartAtMle) {
  const Dataset data = toy_data(8, 20);
  const Chain c = run_chain(data, short_hyper(3, 500, 0 + 1));
  ASSERT_TRUE(c.meta.mle.has_value());
  EXPECT_EQ(c.meta.initial.phi, c.meta.mle->phi);
  EXPECT_TRUE((c.meta.initial.phi.array() >= 0.0).all());
  EXPECT_GE(c.mh_accept_rate, 0.0);
  EXPECT_LE(c.mh_accept_rate, 1.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    EXPECT_GT(c.sigma2[i], 0.0);
    EXPECT_TRUE(std::isfinite(c.mu[i]));
    for (auto g : c.gamma[i]) EXPECT_TRUE(g == 0 || g == 1);
  }
  EXPECT_EQ(c.meta.dataset_fingerprint, fingerprint(data));
}

TEST(RunChain, ConstantResponseFailsWithScanIndex) {
  Matrix x(4, 1);
  x << 0.0, 0.3, 0.6, 1.0;
  const Dataset data = Dataset::from_unit(x, vec({1.0, 1.0, 1.0, 1.0}));
  try {
    run_chain(data, short_hyper(1));
    FAIL();
  } catch (const SamplerFailed& e) {
    EXPECT_EQ(e.scan(), 0u);
  }
}

TEST(PosteriorParams, IdenticalDrawsReturnedExactly) {
  Chain c;
  const SamplerState s{0.134, 5.9891, vec({0.8795, 1.1072, -2.18e-5}), Gamma{1, 1, 0}};
  for (int i = 0; i < 7; ++i) c.push(static_cast<std::size_t>(i + 1), s);
  const GpParams p = posterior_params(c);
  EXPECT_EQ(p.mu, s.mu);
  EXPECT_EQ(p.sigma2, s.sigma2);
  EXPECT_EQ(p.phi, s.phi);
  EXPECT_EQ(p.theta()(2), s.phi(2) * s.phi(2));
}

TEST(PosteriorParams, ArithmeticMean) {
  Chain c;
  c.push(1, SamplerState{1.0, 2.0, vec({1.0, -1.0}), Gamma{1, 0}});
  c.push(2, SamplerState{2.0, 4.0, vec({3.0, 1.0}), Gamma{1, 1}});
  c.push(3, SamplerState{6.0, 9.0, vec({2.0, 3.0}), Gamma{0, 1}});
  const GpParams p = posterior_params(c);
  EXPECT_NEAR(p.mu, 3.0, 1e-15);
  EXPECT_NEAR(p.sigma2, 5.0, 1e-15);
  EXPECT_NEAR(p.phi(0), 2.0, 1e-15);
  EXPECT_NEAR(p.phi(1), 1.0, 1e-15);
  EXPECT_THROW(posterior_params(Chain{}), InvalidArgument);
}
