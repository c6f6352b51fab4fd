#pragma once

// Gaussian correlation kernel and dense SPD linear algebra.

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "ssgp/error.hpp"

namespace ssgp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A design point; one coordinate per input dimension.
using Point = Eigen::VectorXd;

/// Pivots at or below this value are treated as a loss of positive definiteness.
inline constexpr double kPivotTolerance = 1e-12;

/// Nugget escalation schedule: start, multiply by `growth` on failure, give up past `max`.
struct NuggetPolicy {
  double initial = 1e-8;
  double max = 1e-4;
  double growth = 10.0;
};

namespace detail {

inline void require_finite(const Eigen::Ref<const Vector>& v, const char* what) {
  if (!v.allFinite()) throw InvalidArgument(std::string(what) + " contains non-finite values");
}

}  // namespace detail

/// exp(-sum_k theta_k (xi_k - xj_k)^2).
inline double gaussian_corr(const Eigen::Ref<const Vector>& xi, const Eigen::Ref<const Vector>& xj,
                            const Eigen::Ref<const Vector>& theta) {
  if (xi.size() != xj.size() || xi.size() != theta.size())
    throw InvalidArgument("gaussian_corr: dimension mismatch (" + std::to_string(xi.size()) +
                          ", " + std::to_string(xj.size()) + ", " +
                          std::to_string(theta.size()) + ")");
  detail::require_finite(xi, "gaussian_corr: xi");
  detail::require_finite(xj, "gaussian_corr: xj");
  detail::require_finite(theta, "gaussian_corr: theta");
  if ((theta.array() < 0.0).any()) throw InvalidArgument("gaussian_corr: negative theta");
  return std::exp(-(theta.array() * (xi - xj).array().square()).sum());
}

struct CorrMatrix {
  Matrix entries;
  double nugget = 0.0;
  /// Two identical rows were found while the nugget was zero.
  bool duplicate_points = false;

  Eigen::Index size() const noexcept { return entries.rows(); }
};

/// Correlation matrix of the rows of `points` (n x d), plus nugget on the diagonal.
inline CorrMatrix build_corr_matrix(const Eigen::Ref<const Matrix>& points,
                                    const Eigen::Ref<const Vector>& theta, double nugget) {
  const Eigen::Index n = points.rows();
  if (n < 1) throw InvalidArgument("build_corr_matrix: no points");
  if (points.cols() != theta.size())
    throw InvalidArgument("build_corr_matrix: points have " + std::to_string(points.cols()) +
                          " columns but theta has " + std::to_string(theta.size()));
  if (!points.allFinite()) throw InvalidArgument("build_corr_matrix: non-finite point");
  detail::require_finite(theta, "build_corr_matrix: theta");
  if ((theta.array() < 0.0).any()) throw InvalidArgument("build_corr_matrix: negative theta");
  if (!(nugget >= 0.0) || !std::isfinite(nugget))
    throw InvalidArgument("build_corr_matrix: nugget must be finite and non-negative");

  CorrMatrix out;
  out.nugget = nugget;
  out.entries.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.entries(i, i) = 1.0 + nugget;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r =
          std::exp(-(theta.array() * (points.row(i) - points.row(j)).transpose().array().square())
                        .sum());
      out.entries(i, j) = r;
      out.entries(j, i) = r;
      if (nugget == 0.0 && (points.row(i).array() == points.row(j).array()).all())
        out.duplicate_points = true;
    }
  }
  return out;
}

/// Lower-triangular Cholesky factor L with L L^T equal to the factored matrix.
class CholFactor {
 public:
  CholFactor() = default;
  explicit CholFactor(Matrix lower) : lower_(std::move(lower)) {}

  const Matrix& lower() const noexcept { return lower_; }
  Eigen::Index size() const noexcept { return lower_.rows(); }

  /// L^{-1} b.
  Vector half_solve(const Eigen::Ref<const Vector>& b) const {
    check_dim(b);
    return lower_.triangularView<Eigen::Lower>().solve(b);
  }

  /// (L L^T)^{-1} b.
  Vector solve(const Eigen::Ref<const Vector>& b) const {
    check_dim(b);
    Vector v = lower_.triangularView<Eigen::Lower>().solve(b);
    lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(v);
    return v;
  }

  /// b^T (L L^T)^{-1} b.
  double quad_form(const Eigen::Ref<const Vector>& b) const { return half_solve(b).squaredNorm(); }

 private:
  void check_dim(const Eigen::Ref<const Vector>& b) const {
    if (b.size() != lower_.rows())
      throw InvalidArgument("solve_with_chol: vector of length " + std::to_string(b.size()) +
                            " against factor of size " + std::to_string(lower_.rows()));
  }

  Matrix lower_;
};

/// Left-looking Cholesky. Throws NotPositiveDefinite when a pivot is <= kPivotTolerance.
inline CholFactor chol_decompose(const Eigen::Ref<const Matrix>& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw InvalidArgument("chol_decompose: matrix is not square");
  if (!m.allFinite()) throw InvalidArgument("chol_decompose: non-finite entries");
  Matrix lower = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double pivot = m(j, j);
    if (j > 0) pivot -= lower.row(j).head(j).squaredNorm();
    if (!(pivot > kPivotTolerance)) throw NotPositiveDefinite(static_cast<std::size_t>(j), pivot);
    const double diag = std::sqrt(pivot);
    lower(j, j) = diag;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = m(i, j);
      if (j > 0) s -= lower.row(i).head(j).dot(lower.row(j).head(j));
      lower(i, j) = s / diag;
    }
  }
  return CholFactor(std::move(lower));
}

inline CholFactor chol_decompose(const CorrMatrix& m) { return chol_decompose(m.entries); }

/// log det(L L^T) = 2 sum log L_ii.
inline double log_det_from_chol(const CholFactor& f) {
  return 2.0 * f.lower().diagonal().array().log().sum();
}

inline Vector solve_with_chol(const CholFactor& f, const Eigen::Ref<const Vector>& b) {
  return f.solve(b);
}

/// Factor of R(theta) + nugget I, with the nugget actually used.
struct JitteredFactor {
  CholFactor chol;
  double nugget = 0.0;
};

/// Factors the correlation matrix, escalating the nugget per `policy` on failure.
inline JitteredFactor factor_corr(const Eigen::Ref<const Matrix>& points,
                                  const Eigen::Ref<const Vector>& theta,
                                  const NuggetPolicy& policy = {}) {
  double nugget = policy.initial;
  Matrix base = build_corr_matrix(points, theta, 0.0).entries;
  for (;;) {
    Matrix m = base;
    m.diagonal().array() += nugget;
    try {
      return {chol_decompose(m), nugget};
    } catch (const NotPositiveDefinite&) {
      const double next = nugget == 0.0 ? 1e-12 : nugget * policy.growth;
      if (next > policy.max * (1.0 + 1e-9))
        throw IllConditioned("correlation matrix not positive definite with nugget up to " +
                             std::to_string(policy.max));
      nugget = next;
    }
  }
}

}  // namespace ssgp
