#pragma once

// Ordinary kriging: profile likelihood, maximum-likelihood fit, prediction.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "ssgp/designs.hpp"
#include "ssgp/error.hpp"
#include "ssgp/kernel_linalg.hpp"
#include "ssgp/optimize.hpp"
#include "ssgp/rng.hpp"

namespace ssgp {

/// Training data. `points` are stored scaled to [0,1]^d through `ranges`.
struct Dataset {
  Matrix points;
  Vector responses;
  Ranges ranges;

  std::size_t n() const noexcept { return static_cast<std::size_t>(points.rows()); }
  std::size_t d() const noexcept { return static_cast<std::size_t>(points.cols()); }

  Matrix original_points() const { return scale_points(points, ranges, ScaleDirection::FromUnit); }

  /// Builds a dataset from original-scale inputs; validates and scales them.
  static Dataset from_original(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y,
                               Ranges ranges) {
    if (x.rows() < 1 || x.cols() < 1) throw InvalidArgument("dataset: empty design");
    if (x.rows() != y.size())
      throw InvalidArgument("dataset: " + std::to_string(x.rows()) + " design rows but " +
                            std::to_string(y.size()) + " responses");
    if (ranges.size() != static_cast<std::size_t>(x.cols()))
      throw InvalidArgument("dataset: " + std::to_string(ranges.size()) + " ranges for " +
                            std::to_string(x.cols()) + " columns");
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index k = 0; k < x.cols(); ++k)
        if (!std::isfinite(x(i, k)))
          throw InvalidArgument("dataset: non-finite value at row " + std::to_string(i + 1) +
                                ", column " + std::to_string(k + 1));
    for (Eigen::Index i = 0; i < y.size(); ++i)
      if (!std::isfinite(y(i)))
        throw InvalidArgument("dataset: non-finite response at row " + std::to_string(i + 1));
    for (std::size_t k = 0; k < ranges.size(); ++k)
      if (!(ranges[k].hi > ranges[k].lo))
        throw InvalidArgument("dataset: range of column " + std::to_string(k + 1) +
                              " must have max > min");
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < i; ++j)
        if ((x.row(i).array() == x.row(j).array()).all() && y(i) != y(j))
          throw InvalidArgument("dataset: rows " + std::to_string(j + 1) + " and " +
                                std::to_string(i + 1) +
                                " are the same point with different responses");
    Dataset out;
    out.points = scale_points(x, ranges, ScaleDirection::ToUnit);
    out.responses = y;
    out.ranges = std::move(ranges);
    return out;
  }

  /// Ranges taken from the observed per-column min/max.
  static Dataset from_original(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y) {
    return from_original(x, y, observed_ranges(x));
  }

  /// Points already in [0,1]^d.
  static Dataset from_unit(const Eigen::Ref<const Matrix>& x, const Eigen::Ref<const Vector>& y) {
    return from_original(x, y, unit_ranges(static_cast<std::size_t>(x.cols())));
  }

  /// Copy without row `i`.
  Dataset without_row(std::size_t i) const {
    Dataset out;
    const auto rows = static_cast<Eigen::Index>(n());
    out.points.resize(rows - 1, points.cols());
    out.responses.resize(rows - 1);
    for (Eigen::Index r = 0, w = 0; r < rows; ++r) {
      if (static_cast<std::size_t>(r) == i) continue;
      out.points.row(w) = points.row(r);
      out.responses(w) = responses(r);
      ++w;
    }
    out.ranges = ranges;
    return out;
  }
};

/// FNV-1a 64 over the bit patterns of the scaled points, responses and ranges.
inline std::string fingerprint(const Dataset& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xFFU;
      h *= 0x100000001b3ULL;
    }
  };
  mix(static_cast<double>(data.n()));
  mix(static_cast<double>(data.d()));
  for (Eigen::Index i = 0; i < data.points.rows(); ++i)
    for (Eigen::Index k = 0; k < data.points.cols(); ++k) mix(data.points(i, k));
  for (Eigen::Index i = 0; i < data.responses.size(); ++i) mix(data.responses(i));
  for (const Range& r : data.ranges) {
    mix(r.lo);
    mix(r.hi);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// mu, sigma^2 and the signed correlation parameters phi; theta_k = phi_k^2.
struct GpParams {
  double mu = 0.0;
  double sigma2 = 1.0;
  Vector phi;

  Vector theta() const { return phi.array().square().matrix(); }

  static GpParams from_theta(double mu, double sigma2, const Eigen::Ref<const Vector>& theta) {
    return {mu, sigma2, theta.array().sqrt().matrix()};
  }
};

struct Prediction {
  double mean = 0.0;
  double mse = 0.0;
  /// The raw MSE was negative and was set to zero.
  bool clamped = false;
  double clamp_amount = 0.0;
};

/// (1^T R^-1 1)^-1 1^T R^-1 y.
inline double profile_mu(const CholFactor& chol, const Eigen::Ref<const Vector>& y) {
  const Vector ones = Vector::Ones(chol.size());
  const Vector a = chol.half_solve(ones);
  const Vector b = chol.half_solve(y);
  return a.dot(b) / a.squaredNorm();
}

/// (1/n) (y - 1 mu)^T R^-1 (y - 1 mu).
inline double profile_sigma2(const CholFactor& chol, const Eigen::Ref<const Vector>& y, double mu) {
  if (y.size() < 1) throw InvalidArgument("profile_sigma2: empty response");
  const Vector resid = y.array() - mu;
  return chol.quad_form(resid) / static_cast<double>(y.size());
}

/// Everything the profile likelihood computes at a given theta.
struct ProfileEvaluation {
  JitteredFactor factor;
  double mu = 0.0;
  double sigma2 = 0.0;
  double log_det = 0.0;
  /// 0.5 * (n log sigma2 + log det R)
  double value = 0.0;
};

inline ProfileEvaluation evaluate_profile(const Eigen::Ref<const Vector>& theta, const Dataset& data,
                                          const NuggetPolicy& policy = {}) {
  ProfileEvaluation e;
  e.factor = factor_corr(data.points, theta, policy);
  e.mu = profile_mu(e.factor.chol, data.responses);
  e.sigma2 = profile_sigma2(e.factor.chol, data.responses, e.mu);
  e.log_det = log_det_from_chol(e.factor.chol);
  e.value = 0.5 * (static_cast<double>(data.n()) * std::log(e.sigma2) + e.log_det);
  return e;
}

/// 0.5 * [n log sigma2_hat(theta) + log det R(theta)]; throws IllConditioned.
inline double neg_log_profile_likelihood(const Eigen::Ref<const Vector>& theta, const Dataset& data,
                                         const NuggetPolicy& policy = {}) {
  return evaluate_profile(theta, data, policy).value;
}

struct FitOptions {
  std::size_t starts = 10;
  std::size_t max_iter = 500;
  double ftol = 1e-8;
  double log_theta_min = std::log(1e-4);
  double log_theta_max = std::log(1e4);
  std::uint64_t seed = 0;
  NuggetPolicy nugget;
};

struct MleFit {
  GpParams params;
  double objective = 0.0;
  double nugget = 0.0;
  std::size_t successful_starts = 0;
  /// The response was constant; sigma2 is zero and theta is arbitrary.
  bool degenerate = false;
  std::vector<std::string> warnings;
};

/// Multi-start box-constrained simplex search on log theta.
inline MleFit mle_fit(const Dataset& data, const FitOptions& opts = {}) {
  if (data.n() < 2) throw InvalidArgument("mle_fit: need at least 2 runs");
  if (opts.starts < 1) throw InvalidArgument("mle_fit: need at least one start");
  const auto d = static_cast<Eigen::Index>(data.d());

  MleFit out;
  const double spread = data.responses.maxCoeff() - data.responses.minCoeff();
  if (spread <= 1e-12 * std::max(1.0, data.responses.cwiseAbs().maxCoeff())) {
    out.degenerate = true;
    out.params.mu = data.responses.mean();
    out.params.sigma2 = 0.0;
    out.params.phi = Vector::Ones(d);
    out.nugget = opts.nugget.initial;
    out.objective = -std::numeric_limits<double>::infinity();
    out.successful_starts = 0;
    out.warnings.push_back("constant response: sigma2 estimate is 0 and theta is unidentified");
    return out;
  }

  const Vector lo = Vector::Constant(d, opts.log_theta_min);
  const Vector hi = Vector::Constant(d, opts.log_theta_max);
  auto objective = [&](const Vector& log_theta) {
    try {
      const double v = neg_log_profile_likelihood(log_theta.array().exp().matrix(), data, opts.nugget);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const IllConditioned&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  const Design starts = random_lhd(opts.starts, data.d(), opts.seed);
  SimplexOptions simplex{opts.ftol, opts.max_iter, 0.1 * (opts.log_theta_max - opts.log_theta_min)};
  SimplexResult best;
  for (std::size_t s = 0; s < opts.starts; ++s) {
    Vector x0 = lo.array() + starts.points.row(static_cast<Eigen::Index>(s)).transpose().array() *
                                 (hi - lo).array();
    SimplexResult r = nelder_mead(objective, std::move(x0), lo, hi, simplex);
    if (!std::isfinite(r.value)) continue;
    ++out.successful_starts;
    if (r.value < best.value) best = std::move(r);
  }
  if (out.successful_starts == 0) throw OptimizerFailed("mle_fit: every start failed");

  const Vector theta = best.x.array().exp().matrix();
  const ProfileEvaluation e = evaluate_profile(theta, data, opts.nugget);
  out.params = GpParams::from_theta(e.mu, e.sigma2, theta);
  out.objective = e.value;
  out.nugget = e.factor.nugget;
  return out;
}

/// Kriging predictor with the solves against R cached.
///
/// The nugget is treated as part of the kernel at zero distance, so a test
/// point equal to a training point gets r_i = 1 + nugget and the prior
/// variance is sigma2 * (1 + nugget). This keeps exact interpolation.
class Predictor {
 public:
  Predictor(GpParams params, const Dataset& data, const NuggetPolicy& policy = {})
      : params_(std::move(params)), data_(data) {
    if (static_cast<std::size_t>(params_.phi.size()) != data.d())
      throw InvalidArgument("predict: parameters have dimension " +
                            std::to_string(params_.phi.size()) + " but data has " +
                            std::to_string(data.d()));
    theta_ = params_.theta();
    factor_ = factor_corr(data.points, theta_, policy);
    const Vector ones = Vector::Ones(static_cast<Eigen::Index>(data.n()));
    half_ones_ = factor_.chol.half_solve(ones);
    ones_rinv_ones_ = half_ones_.squaredNorm();
    weights_ = factor_.chol.solve(data.responses.array() - params_.mu);
  }

  const GpParams& params() const noexcept { return params_; }
  double nugget() const noexcept { return factor_.nugget; }

  /// Prediction at a point given in [0,1]^d coordinates.
  Prediction predict_unit(const Eigen::Ref<const Vector>& x) const {
    if (static_cast<std::size_t>(x.size()) != data_.d())
      throw InvalidArgument("predict: test point has dimension " + std::to_string(x.size()) +
                            " but model has " + std::to_string(data_.d()));
    const auto n = static_cast<Eigen::Index>(data_.n());
    Vector r(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto xi = data_.points.row(i).transpose();
      r(i) = gaussian_corr(x, xi, theta_);
      if ((xi.array() == x.array()).all()) r(i) += factor_.nugget;
    }
    Prediction p;
    p.mean = params_.mu + r.dot(weights_);
    const Vector z = factor_.chol.half_solve(r);
    const double lack = 1.0 - half_ones_.dot(z);
    const double raw =
        params_.sigma2 * ((1.0 + factor_.nugget) - z.squaredNorm() + lack * lack / ones_rinv_ones_);
    if (raw < 0.0) {
      p.clamped = true;
      p.clamp_amount = -raw;
      p.mse = 0.0;
    } else {
      p.mse = raw;
    }
    return p;
  }

  /// Prediction at a point given in the dataset's original coordinates.
  Prediction predict(const Eigen::Ref<const Vector>& x) const {
    return predict_unit(scale_point(x, data_.ranges, ScaleDirection::ToUnit));
  }

 private:
  GpParams params_;
  Dataset data_;
  Vector theta_;
  JitteredFactor factor_;
  Vector half_ones_;
  double ones_rinv_ones_ = 0.0;
  Vector weights_;
};

/// One-off prediction at an original-scale point.
inline Prediction predict(const GpParams& params, const Dataset& data, const Eigen::Ref<const Vector>& xstar) {
  return Predictor(params, data).predict(xstar);
}

}  // namespace ssgp
