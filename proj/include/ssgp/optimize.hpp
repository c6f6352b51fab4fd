#pragma once

// Box-constrained Nelder-Mead simplex search.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include "ssgp/kernel_linalg.hpp"

namespace ssgp {

struct SimplexOptions {
  double ftol = 1e-8;          ///< stop when max |f_i - f_best| over the simplex falls below this
  std::size_t max_iter = 500;
  double initial_step = 0.5;   ///< edge length of the starting simplex, in box coordinates
};

struct SimplexResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;
};

/// Minimizes `f` over the box [lo, hi]; trial points are clamped into the box.
/// `f` may return +inf to mark infeasible points.
inline SimplexResult nelder_mead(const std::function<double(const Vector&)>& f, Vector x0,
                                 const Vector& lo, const Vector& hi, const SimplexOptions& opts = {}) {
  const Eigen::Index d = x0.size();
  auto clamp = [&](Vector v) {
    for (Eigen::Index k = 0; k < d; ++k) v(k) = std::clamp(v(k), lo(k), hi(k));
    return v;
  };
  auto eval = [&](const Vector& v) {
    const double y = f(v);
    return std::isnan(y) ? std::numeric_limits<double>::infinity() : y;
  };

  std::vector<Vector> simplex;
  std::vector<double> values;
  simplex.push_back(clamp(std::move(x0)));
  for (Eigen::Index k = 0; k < d; ++k) {
    Vector v = simplex.front();
    // Step toward the interior if the start sits on the upper bound.
    v(k) += (v(k) + opts.initial_step <= hi(k)) ? opts.initial_step : -opts.initial_step;
    simplex.push_back(clamp(std::move(v)));
  }
  for (const Vector& v : simplex) values.push_back(eval(v));

  std::vector<std::size_t> order(simplex.size());
  SimplexResult result;
  for (result.iterations = 0; result.iterations < opts.max_iter; ++result.iterations) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[order.size() - 2];

    if (std::isfinite(values[worst]) && values[worst] - values[best] < opts.ftol) {
      result.converged = true;
      break;
    }

    Vector centroid = Vector::Zero(d);
    for (std::size_t i = 0; i + 1 < order.size(); ++i) centroid += simplex[order[i]];
    centroid /= static_cast<double>(d);

    const Vector reflected = clamp(centroid + (centroid - simplex[worst]));
    const double f_reflected = eval(reflected);
    if (f_reflected < values[best]) {
      const Vector expanded = clamp(centroid + 2.0 * (centroid - simplex[worst]));
      const double f_expanded = eval(expanded);
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        values[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        values[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < values[second]) {
      simplex[worst] = reflected;
      values[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < values[worst];
    const Vector contracted = outside ? clamp(centroid + 0.5 * (reflected - centroid))
                                      : clamp(centroid + 0.5 * (simplex[worst] - centroid));
    const double f_contracted = eval(contracted);
    if (f_contracted < (outside ? f_reflected : values[worst])) {
      simplex[worst] = contracted;
      values[worst] = f_contracted;
      continue;
    }
    for (std::size_t i = 0; i < simplex.size(); ++i) {
      if (i == best) continue;
      simplex[i] = clamp(simplex[best] + 0.5 * (simplex[i] - simplex[best]));
      values[i] = eval(simplex[i]);
    }
  }
  const auto it = std::min_element(values.begin(), values.end());
  result.value = *it;
  result.x = simplex[static_cast<std::size_t>(it - values.begin())];
  return result;
}

}  // namespace ssgp
