#pragma once

// Stochastic-search GP: normal-mixture prior on phi (theta_k = phi_k^2) with
// latent inclusion indicators gamma, sampled by Metropolis-within-Gibbs.
//
// Scan order is mu -> sigma2 -> phi -> gamma. mu and sigma2 have normal and
// inverse-gamma full conditionals under the flat and 1/sigma2 priors; phi is
// moved by one block random-walk Metropolis step; each gamma_k is Bernoulli
// given phi_k alone because the prior covariance of phi is diagonal.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ssgp/error.hpp"
#include "ssgp/gp_core.hpp"
#include "ssgp/kernel_linalg.hpp"
#include "ssgp/rng.hpp"

namespace ssgp {

/// Inclusion indicators, one 0/1 entry per input.
using Gamma = std::vector<std::uint8_t>;

struct Hyperparams {
  Vector tau;      ///< spike sd tau_k
  Vector c;        ///< slab multiplier c_k; slab sd is c_k tau_k
  Vector p;        ///< prior P(gamma_k = 1)
  Vector prop_sd;  ///< diagonal sd of the random-walk proposal for phi
  std::size_t iters = 6000;
  std::size_t burnin = 2000;
  std::size_t thin = 1;
  std::uint64_t seed = 0;
  /// Diagonal jitter on R(phi) while sampling; escalates x10 up to 1e-4 on failure.
  double nugget = 1e-5;

  NuggetPolicy nugget_policy() const { return {nugget, std::max(nugget, 1e-4), 10.0}; }

  std::size_t d() const noexcept { return static_cast<std::size_t>(tau.size()); }

  /// Number of draws run_chain will store.
  std::size_t stored_draws() const noexcept {
    return iters > burnin ? (iters - burnin + thin - 1) / thin : 0;
  }
};

/// Checks domains; returns advisory warnings.
inline std::vector<std::string> validate(const Hyperparams& h, std::size_t d) {
  auto sized = [d](const Vector& v) { return static_cast<std::size_t>(v.size()) == d; };
  if (!sized(h.tau) || !sized(h.c) || !sized(h.p) || !sized(h.prop_sd))
    throw InvalidArgument("hyperparameters must have one entry per input (d = " + std::to_string(d) + ")");
  if (!(h.tau.array() > 0.0).all() || !h.tau.allFinite())
    throw InvalidArgument("tau must be positive");
  if (!(h.c.array() > 1.0).all() || !h.c.allFinite()) throw InvalidArgument("c must be > 1");
  if (!(h.p.array() > 0.0).all() || !(h.p.array() < 1.0).all())
    throw InvalidArgument("p must lie in (0, 1)");
  if (!(h.prop_sd.array() > 0.0).all() || !h.prop_sd.allFinite())
    throw InvalidArgument("prop_sd must be positive");
  if (h.iters < 1) throw InvalidArgument("iters must be positive");
  if (h.burnin >= h.iters)
    throw InvalidArgument("burnin (" + std::to_string(h.burnin) + ") must be less than iters (" +
                          std::to_string(h.iters) + ")");
  if (h.thin < 1) throw InvalidArgument("thin must be positive");
  if (!(h.nugget >= 0.0) || !(h.nugget <= 1e-4)) throw InvalidArgument("nugget must lie in [0, 1e-4]");
  std::vector<std::string> warnings;
  for (Eigen::Index k = 0; k < h.c.size(); ++k)
    if (h.c(k) <= 2.0)
      warnings.push_back("c_" + std::to_string(k + 1) + " = " + std::to_string(h.c(k)) +
                         " is small; the slab barely differs from the spike");
  return warnings;
}

/// tau_k = 1 / (3 * observed range of scaled coordinate k), c = 25, p = 0.5,
/// prop_sd = 0.03, 6000 scans with 2000 burn-in.
inline Hyperparams default_hyperparams(const Dataset& data) {
  const auto d = static_cast<Eigen::Index>(data.d());
  Hyperparams h;
  h.tau.resize(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const double span = data.points.col(k).maxCoeff() - data.points.col(k).minCoeff();
    if (!(span > 0.0))
      throw InvalidArgument("default_hyperparams: input " + std::to_string(k + 1) +
                            " takes a single value");
    h.tau(k) = 1.0 / (3.0 * span);
  }
  h.c = Vector::Constant(d, 25.0);
  h.p = Vector::Constant(d, 0.5);
  h.prop_sd = Vector::Constant(d, 0.03);
  return h;
}

/// Solves against R(phi) that every conditional in a scan reuses.
struct CorrCache {
  JitteredFactor factor;
  Vector half_ones;   ///< L^-1 1
  Vector half_y;      ///< L^-1 y
  double ones_rinv_ones = 0.0;
  double log_det = 0.0;

  static CorrCache build(const Dataset& data, const Eigen::Ref<const Vector>& phi,
                         const NuggetPolicy& policy = {}) {
    CorrCache c;
    c.factor = factor_corr(data.points, phi.array().square().matrix(), policy);
    c.half_ones = c.factor.chol.half_solve(Vector::Ones(static_cast<Eigen::Index>(data.n())));
    c.half_y = c.factor.chol.half_solve(data.responses);
    c.ones_rinv_ones = c.half_ones.squaredNorm();
    c.log_det = log_det_from_chol(c.factor.chol);
    return c;
  }

  /// (1^T R^-1 1)^-1 1^T R^-1 y
  double gls_mean() const { return half_ones.dot(half_y) / ones_rinv_ones; }

  /// (y - 1 mu)^T R^-1 (y - 1 mu)
  double quad_form(double mu) const { return (half_y - mu * half_ones).squaredNorm(); }
};

/// -0.5 * sum_k phi_k^2 / (tau_k c_k^gamma_k)^2
inline double log_phi_prior(const Eigen::Ref<const Vector>& phi, const Gamma& gamma,
                            const Hyperparams& h) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    const double sd = h.tau(k) * (gamma[static_cast<std::size_t>(k)] ? h.c(k) : 1.0);
    s += phi(k) * phi(k) / (sd * sd);
  }
  return -0.5 * s;
}

/// log g(phi) from an already-built cache.
inline double phi_log_kernel(const CorrCache& cache, const Eigen::Ref<const Vector>& phi, double mu,
                             double sigma2, const Gamma& gamma, const Hyperparams& h) {
  return -0.5 * cache.log_det - cache.quad_form(mu) / (2.0 * sigma2) + log_phi_prior(phi, gamma, h);
}

/// log of the phi full-conditional kernel, up to an additive constant:
/// -0.5 log det R(phi) - Q(mu) / (2 sigma2) - 0.5 phi^T (D_gamma D_gamma)^-1 phi.
inline double phi_log_kernel(const Eigen::Ref<const Vector>& phi, double mu, double sigma2,
                             const Gamma& gamma, const Dataset& data, const Hyperparams& h,
                             const NuggetPolicy& policy = {}) {
  if (static_cast<std::size_t>(phi.size()) != data.d() || gamma.size() != data.d())
    throw InvalidArgument("phi_log_kernel: dimension mismatch");
  return phi_log_kernel(CorrCache::build(data, phi, policy), phi, mu, sigma2, gamma, h);
}

/// mu ~ N(gls mean, sigma2 / (1^T R^-1 1)).
inline double draw_mu(const CorrCache& cache, double sigma2, Rng& rng) {
  return rng.normal(cache.gls_mean(), std::sqrt(sigma2 / cache.ones_rinv_ones));
}

/// sigma2 ~ InvGamma(shape, scale) as scale / Gamma(shape, 1).
inline double draw_inverse_gamma(double shape, double scale, Rng& rng) {
  return scale / rng.gamma(shape);
}

/// sigma2 ~ InvGamma(n/2, Q(mu)/2).
inline double draw_sigma2(const CorrCache& cache, double mu, std::size_t n, Rng& rng) {
  const double q = cache.quad_form(mu);
  if (!(q > 0.0) || !std::isfinite(q))
    throw Error("sigma2 update: quadratic form " + std::to_string(q) + " is not positive");
  double s2 = 0.0;
  // A Gamma variate of exactly +inf would give 0; redraw (probability ~0).
  do {
    s2 = draw_inverse_gamma(0.5 * static_cast<double>(n), 0.5 * q, rng);
  } while (!(s2 > 0.0));
  return s2;
}

/// min{1, exp(log_proposed - log_current)}.
inline double mh_accept_probability(double log_proposed, double log_current) {
  const double diff = log_proposed - log_current;
  if (std::isnan(diff)) return 0.0;
  return diff >= 0.0 ? 1.0 : std::exp(diff);
}

struct MhStep {
  Vector phi;
  double log_kernel = 0.0;
  bool accepted = false;
  /// The proposal could not be evaluated (linear algebra failure) and was rejected.
  bool failed = false;
};

/// One block random-walk Metropolis step: phi~ ~ N(phi, diag(prop_sd^2)).
///
/// `log_kernel(phi~)` returns log g; throwing IllConditioned rejects the move.
template <class LogKernel>
MhStep update_phi(const Eigen::Ref<const Vector>& phi, double log_current, LogKernel&& log_kernel,
                  const Eigen::Ref<const Vector>& prop_sd, Rng& rng) {
  Vector proposal(phi.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) proposal(k) = phi(k) + prop_sd(k) * rng.normal();
  double log_proposed = 0.0;
  try {
    log_proposed = log_kernel(proposal);
  } catch (const IllConditioned&) {
    return {phi, log_current, false, true};
  }
  const double u = rng.uniform();
  if (u < mh_accept_probability(log_proposed, log_current)) return {std::move(proposal), log_proposed, true, false};
  return {phi, log_current, false, false};
}

namespace detail {

inline double log_normal_pdf(double x, double sd) {
  return -0.5 * (x / sd) * (x / sd) - std::log(sd) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace detail

/// P(gamma_k = 1 | phi_k) = a / (a + b), a = N(phi; 0, (c tau)^2) p,
/// b = N(phi; 0, tau^2) (1 - p), evaluated in log space.
inline double gamma_inclusion_probability(double phi, double tau, double c, double p) {
  if (p >= 1.0) return 1.0;
  if (p <= 0.0) return 0.0;
  const double log_a = detail::log_normal_pdf(phi, c * tau) + std::log(p);
  const double log_b = detail::log_normal_pdf(phi, tau) + std::log1p(-p);
  const double top = std::max(log_a, log_b);
  return std::exp(log_a - top) / (std::exp(log_a - top) + std::exp(log_b - top));
}

/// Sequential componentwise Bernoulli draws of gamma given phi.
inline Gamma update_gamma(const Eigen::Ref<const Vector>& phi, const Hyperparams& h, Rng& rng) {
  Gamma g(static_cast<std::size_t>(phi.size()));
  for (Eigen::Index k = 0; k < phi.size(); ++k)
    g[static_cast<std::size_t>(k)] =
        rng.uniform() < gamma_inclusion_probability(phi(k), h.tau(k), h.c(k), h.p(k)) ? 1 : 0;
  return g;
}

struct SamplerState {
  double mu = 0.0;
  double sigma2 = 1.0;
  Vector phi;
  Gamma gamma;
};

struct ChainMeta {
  Hyperparams hyper;
  std::string dataset_fingerprint;
  std::size_t n = 0;
  std::size_t d = 0;
  /// Starting values (the MLE unless overridden).
  GpParams initial;
  /// MLE of the data, when it was computed.
  std::optional<GpParams> mle;
  std::vector<std::string> notes;
};

/// Post-burn-in draws stored column-wise.
struct Chain {
  std::vector<std::size_t> scan;  ///< 1-based scan index of each draw
  std::vector<double> mu;
  std::vector<double> sigma2;
  std::vector<Vector> phi;
  std::vector<Gamma> gamma;
  double mh_accept_rate = 0.0;
  std::size_t proposal_failures = 0;
  double max_nugget = 0.0;
  ChainMeta meta;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return scan.size(); }
  std::size_t d() const noexcept { return phi.empty() ? meta.d : static_cast<std::size_t>(phi.front().size()); }

  void push(std::size_t m, const SamplerState& s) {
    scan.push_back(m);
    mu.push_back(s.mu);
    sigma2.push_back(s.sigma2);
    phi.push_back(s.phi);
    gamma.push_back(s.gamma);
  }
};

/// Switches for holding blocks fixed, and an optional starting point.
struct SamplerControls {
  bool update_mu = true;
  bool update_sigma2 = true;
  bool update_phi = true;
  bool update_gamma = true;
  /// Start here instead of at the MLE.
  std::optional<SamplerState> initial;
  /// Options of the initial MLE fit (its seed is overwritten).
  FitOptions fit;
};

/// Runs `hyper.iters` Gibbs scans and keeps draws after `hyper.burnin`.
///
/// Seeds: the scan RNG uses derive_seed(seed, 0) and the MLE multi-start
/// design uses derive_seed(seed, 1).
inline Chain run_chain(const Dataset& data, const Hyperparams& hyper, const SamplerControls& controls = {}) {
  Chain chain;
  chain.warnings = validate(hyper, data.d());
  chain.meta.hyper = hyper;
  chain.meta.dataset_fingerprint = fingerprint(data);
  chain.meta.n = data.n();
  chain.meta.d = data.d();
  if (data.n() < 2) throw InvalidArgument("run_chain: need at least 2 runs");

  SamplerState state;
  if (controls.initial) {
    state = *controls.initial;
    if (static_cast<std::size_t>(state.phi.size()) != data.d() || state.gamma.size() != data.d())
      throw InvalidArgument("run_chain: initial state has the wrong dimension");
  } else {
    FitOptions fit = controls.fit;
    fit.seed = derive_seed(hyper.seed, 1);
    MleFit mle;
    try {
      mle = mle_fit(data, fit);
    } catch (const Error& e) {
      throw SamplerFailed(0, std::string("initial MLE fit: ") + e.what());
    }
    if (mle.degenerate) throw SamplerFailed(0, "constant response; nothing to sample");
    chain.meta.mle = mle.params;
    state.mu = mle.params.mu;
    state.sigma2 = mle.params.sigma2;
    state.phi = mle.params.phi;  // +sqrt(theta_hat)
    state.gamma = Gamma(data.d(), 1);
  }
  chain.meta.initial = {state.mu, state.sigma2, state.phi};

  Rng rng(derive_seed(hyper.seed, 0));
  const NuggetPolicy policy = hyper.nugget_policy();
  CorrCache cache;
  try {
    cache = CorrCache::build(data, state.phi, policy);
  } catch (const Error& e) {
    throw SamplerFailed(0, e.what());
  }
  chain.max_nugget = cache.factor.nugget;

  const std::size_t stored = hyper.stored_draws();
  chain.scan.reserve(stored);
  chain.mu.reserve(stored);
  chain.sigma2.reserve(stored);
  chain.phi.reserve(stored);
  chain.gamma.reserve(stored);

  std::size_t accepted = 0;
  for (std::size_t m = 1; m <= hyper.iters; ++m) {
    try {
      if (controls.update_mu) state.mu = draw_mu(cache, state.sigma2, rng);
      if (controls.update_sigma2) state.sigma2 = draw_sigma2(cache, state.mu, data.n(), rng);
      if (controls.update_phi) {
        const double current = phi_log_kernel(cache, state.phi, state.mu, state.sigma2, state.gamma, hyper);
        CorrCache candidate;
        auto log_kernel = [&](const Vector& proposal) {
          candidate = CorrCache::build(data, proposal, policy);
          return phi_log_kernel(candidate, proposal, state.mu, state.sigma2, state.gamma, hyper);
        };
        MhStep step = update_phi(state.phi, current, log_kernel, hyper.prop_sd, rng);
        if (step.failed) ++chain.proposal_failures;
        if (step.accepted) {
          ++accepted;
          state.phi = std::move(step.phi);
          cache = std::move(candidate);
          chain.max_nugget = std::max(chain.max_nugget, cache.factor.nugget);
        }
      }
      if (controls.update_gamma) state.gamma = update_gamma(state.phi, hyper, rng);
    } catch (const SamplerFailed&) {
      throw;
    } catch (const Error& e) {
      throw SamplerFailed(m, e.what());
    }
    if (m > hyper.burnin && (m - hyper.burnin - 1) % hyper.thin == 0) chain.push(m, state);
  }

  chain.mh_accept_rate = controls.update_phi ? static_cast<double>(accepted) / static_cast<double>(hyper.iters) : 0.0;
  if (controls.update_phi && (chain.mh_accept_rate < 0.1 || chain.mh_accept_rate > 0.6))
    chain.warnings.push_back("phi acceptance rate " + std::to_string(chain.mh_accept_rate) +
                             " is outside [0.1, 0.6]; consider adjusting prop_sd");
  if (chain.proposal_failures > 0)
    chain.warnings.push_back(std::to_string(chain.proposal_failures) +
                             " phi proposals were rejected because R(phi) could not be factored");
  return chain;
}

/// Component-wise posterior means of mu, sigma2 and phi (running means, so a
/// chain of identical draws returns those values exactly).
inline GpParams posterior_params(const Chain& chain) {
  if (chain.size() == 0) throw InvalidArgument("posterior_params: empty chain");
  GpParams out{chain.mu.front(), chain.sigma2.front(), chain.phi.front()};
  for (std::size_t i = 1; i < chain.size(); ++i) {
    const double w = 1.0 / static_cast<double>(i + 1);
    out.mu += (chain.mu[i] - out.mu) * w;
    out.sigma2 += (chain.sigma2[i] - out.sigma2) * w;
    out.phi += (chain.phi[i] - out.phi) * w;
  }
  return out;
}

/// Kriging predictor at the posterior-mean parameters. Prediction uses the
/// default (interpolating) nugget, not the sampling jitter.
inline Predictor posterior_predictor(const Chain& chain, const Dataset& data) {
  return Predictor(posterior_params(chain), data);
}

}  // namespace ssgp
