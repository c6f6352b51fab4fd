#pragma once

// Latin hypercube designs and affine scaling between a box and [0,1]^d.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "ssgp/error.hpp"
#include "ssgp/kernel_linalg.hpp"
#include "ssgp/rng.hpp"

namespace ssgp {

enum class DesignKind { RandomLhd, MaximinLhd, External };

inline std::string to_string(DesignKind k) {
  switch (k) {
    case DesignKind::RandomLhd: return "random-lhd";
    case DesignKind::MaximinLhd: return "maximin-lhd";
    case DesignKind::External: return "external";
  }
  return "external";
}

inline DesignKind design_kind_from_string(const std::string& s) {
  if (s == "random-lhd") return DesignKind::RandomLhd;
  if (s == "maximin-lhd") return DesignKind::MaximinLhd;
  if (s == "external") return DesignKind::External;
  throw InvalidArgument("unknown design kind '" + s + "' (valid: random-lhd, maximin-lhd, external)");
}

/// n x d points in [0,1]^d.
struct Design {
  Matrix points;
  DesignKind kind = DesignKind::External;
  std::uint64_t seed = 0;
};

/// Per-dimension (min, max) of the original domain.
struct Range {
  double lo = 0.0;
  double hi = 1.0;
  double width() const noexcept { return hi - lo; }
};

using Ranges = std::vector<Range>;

inline Ranges unit_ranges(std::size_t d) { return Ranges(d, Range{0.0, 1.0}); }

/// Coordinate k of point i is (pi_k(i) - 1 + u_ik) / n with u_ik ~ U[0,1).
inline Design random_lhd(std::size_t n, std::size_t d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw InvalidArgument("random_lhd: n and d must be positive");
  Rng rng(seed);
  Design out{Matrix(n, d), DesignKind::RandomLhd, seed};
  std::vector<std::size_t> perm(n);
  for (std::size_t k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    for (std::size_t i = 0; i < n; ++i)
      out.points(i, k) = (static_cast<double>(perm[i]) + rng.uniform()) / static_cast<double>(n);
  }
  return out;
}

inline double min_pairwise_distance(const Eigen::Ref<const Matrix>& points) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      best = std::min(best, (points.row(i) - points.row(j)).squaredNorm());
  return std::sqrt(best);
}

/// Hill-climbing maximin LHD.
///
/// Each attempt picks one point of the current closest pair and swaps one of
/// its coordinates with a random other row; the swap is kept only when the
/// minimum pairwise distance strictly increases. `swaps` = 0 means 100 * n.
inline Design maximin_lhd(std::size_t n, std::size_t d, std::uint64_t seed, std::size_t swaps = 0) {
  if (n < 2) throw InvalidArgument("maximin_lhd: n must be at least 2");
  Design design = random_lhd(n, d, seed);
  design.kind = DesignKind::MaximinLhd;
  if (swaps == 0) swaps = 100 * n;

  Matrix& x = design.points;
  Matrix dist2 = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) dist2(i, j) = dist2(j, i) = (x.row(i) - x.row(j)).squaredNorm();

  auto closest_pair = [&]() {
    double best = std::numeric_limits<double>::infinity();
    std::pair<std::size_t, std::size_t> pair{0, 1};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (dist2(i, j) < best) {
          best = dist2(i, j);
          pair = {i, j};
        }
    return std::pair{best, pair};
  };

  // Stream 1 keeps the swap sequence independent of the initial draw.
  Rng rng(derive_seed(seed, 1));
  auto [current, pair] = closest_pair();
  Vector saved_a(n), saved_b(n);
  for (std::size_t attempt = 0; attempt < swaps; ++attempt) {
    const std::size_t a = rng.uniform() < 0.5 ? pair.first : pair.second;
    std::size_t b = rng.index(n - 1);
    if (b >= a) ++b;
    const std::size_t k = rng.index(d);

    saved_a = dist2.col(a);
    saved_b = dist2.col(b);
    std::swap(x(a, k), x(b, k));
    for (std::size_t i = 0; i < n; ++i) {
      if (i != a) dist2(i, a) = dist2(a, i) = (x.row(i) - x.row(a)).squaredNorm();
      if (i != b) dist2(i, b) = dist2(b, i) = (x.row(i) - x.row(b)).squaredNorm();
    }
    auto [candidate, candidate_pair] = closest_pair();
    if (candidate > current) {
      current = candidate;
      pair = candidate_pair;
    } else {
      std::swap(x(a, k), x(b, k));
      dist2.col(a) = saved_a;
      dist2.row(a) = saved_a.transpose();
      dist2.col(b) = saved_b;
      dist2.row(b) = saved_b.transpose();
    }
  }
  return design;
}

enum class ScaleDirection { ToUnit, FromUnit };

/// Affine per-column map between `ranges` and [0,1].
inline Matrix scale_points(const Eigen::Ref<const Matrix>& points, const Ranges& ranges,
                           ScaleDirection direction) {
  if (static_cast<std::size_t>(points.cols()) != ranges.size())
    throw InvalidArgument("scale_points: " + std::to_string(points.cols()) + " columns but " +
                          std::to_string(ranges.size()) + " ranges");
  Matrix out(points.rows(), points.cols());
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    const Range& r = ranges[static_cast<std::size_t>(k)];
    if (!(r.width() > 0.0) || !std::isfinite(r.width()))
      throw InvalidArgument("scale_points: zero-width range in dimension " + std::to_string(k + 1));
    if (direction == ScaleDirection::ToUnit)
      out.col(k) = (points.col(k).array() - r.lo) / r.width();
    else
      out.col(k) = points.col(k).array() * r.width() + r.lo;
  }
  return out;
}

inline Point scale_point(const Eigen::Ref<const Vector>& x, const Ranges& ranges,
                         ScaleDirection direction) {
  Matrix row = x.transpose();
  return scale_points(row, ranges, direction).row(0).transpose();
}

/// Observed per-column (min, max).
inline Ranges observed_ranges(const Eigen::Ref<const Matrix>& points) {
  Ranges out(static_cast<std::size_t>(points.cols()));
  for (Eigen::Index k = 0; k < points.cols(); ++k)
    out[static_cast<std::size_t>(k)] = {points.col(k).minCoeff(), points.col(k).maxCoeff()};
  return out;
}

/// True when every column holds exactly one value in each stratum [(i-1)/n, i/n).
inline bool is_latin_hypercube(const Eigen::Ref<const Matrix>& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    std::vector<bool> seen(n, false);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double v = points(i, k);
      if (!(v >= 0.0 && v < 1.0)) return false;
      const auto s = static_cast<std::size_t>(std::floor(v * static_cast<double>(n)));
      if (s >= n || seen[s]) return false;
      seen[s] = true;
    }
  }
  return true;
}

}  // namespace ssgp
