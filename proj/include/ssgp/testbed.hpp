#pragma once

// Benchmark functions, the piston slap dataset, prediction metrics and the
// replicated benchmark driver.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ssgp/csv.hpp"
#include "ssgp/designs.hpp"
#include "ssgp/error.hpp"
#include "ssgp/gp_core.hpp"
#include "ssgp/rng.hpp"
#include "ssgp/sampler.hpp"
#include "ssgp/selection.hpp"

namespace ssgp {

enum class FunctionId { Toy, Linear, Sinusoidal, Borehole };

struct TestFunction {
  FunctionId id = FunctionId::Toy;
  std::string name;
  std::size_t dim = 0;
  std::vector<std::size_t> active;  ///< 0-based indices of the truly active inputs
  Ranges ranges;
  std::vector<std::string> input_names;
};

/// (x1^3 + 1) cos(pi x2) on [0,1]^3; x3 is inert.
inline TestFunction toy_function() {
  return {FunctionId::Toy, "toy", 3, {0, 1}, unit_ranges(3), {"x1", "x2", "x3"}};
}

inline std::vector<std::string> numbered_names(std::size_t d) {
  std::vector<std::string> out;
  for (std::size_t k = 1; k <= d; ++k) out.push_back("x" + std::to_string(k));
  return out;
}

/// 2 (x1 + x2 + x3 + x4) on [0,1]^10.
inline TestFunction linear_function() {
  return {FunctionId::Linear, "linear", 10, {0, 1, 2, 3}, unit_ranges(10), numbered_names(10)};
}

/// sin(x1) + sin(5 x2) on [0,1]^10.
inline TestFunction sinusoidal_function() {
  return {FunctionId::Sinusoidal, "sinusoidal", 10, {0, 1}, unit_ranges(10), numbered_names(10)};
}

/// Water flow through a borehole. Inputs, in order:
/// r_w, r, T_u, H_u, T_l, H_l, L, K_w.
inline TestFunction borehole_function() {
  return {FunctionId::Borehole,
          "borehole",
          8,
          {0, 7},
          {{0.05, 0.15},
           {100.0, 50000.0},
           {63070.0, 115600.0},
           {990.0, 1100.0},
           {63.1, 116.0},
           {700.0, 820.0},
           {1120.0, 1680.0},
           {1500.0, 15000.0}},
          {"r_w", "r", "T_u", "H_u", "T_l", "H_l", "L", "K_w"}};
}

inline const std::vector<std::string>& benchmark_names() {
  static const std::vector<std::string> names{"toy", "linear", "sinusoidal", "borehole", "piston"};
  return names;
}

inline TestFunction test_function(const std::string& name) {
  if (name == "toy") return toy_function();
  if (name == "linear") return linear_function();
  if (name == "sinusoidal") return sinusoidal_function();
  if (name == "borehole") return borehole_function();
  throw InvalidArgument("unknown function '" + name + "' (valid: toy, linear, sinusoidal, borehole)");
}

/// Evaluates `f` at `x` given in the function's original coordinates.
inline double eval_function(const TestFunction& f, const Eigen::Ref<const Vector>& x) {
  if (static_cast<std::size_t>(x.size()) != f.dim)
    throw InvalidArgument(f.name + ": expected " + std::to_string(f.dim) + " inputs, got " +
                          std::to_string(x.size()));
  if (!x.allFinite()) throw InvalidArgument(f.name + ": non-finite input");
  switch (f.id) {
    case FunctionId::Toy:
      return (x(0) * x(0) * x(0) + 1.0) * std::cos(std::numbers::pi * x(1));
    case FunctionId::Linear:
      return 2.0 * x(0) + 2.0 * x(1) + 2.0 * x(2) + 2.0 * x(3);
    case FunctionId::Sinusoidal:
      return std::sin(x(0)) + std::sin(5.0 * x(1));
    case FunctionId::Borehole: {
      for (std::size_t k = 0; k < f.dim; ++k) {
        const Range& r = f.ranges[k];
        const double slack = 1e-9 * r.width();
        if (x(static_cast<Eigen::Index>(k)) < r.lo - slack || x(static_cast<Eigen::Index>(k)) > r.hi + slack)
          throw InvalidArgument("borehole: " + f.input_names[k] + " = " +
                                std::to_string(x(static_cast<Eigen::Index>(k))) + " outside [" +
                                std::to_string(r.lo) + ", " + std::to_string(r.hi) + "]");
      }
      const double rw = x(0), r = x(1), tu = x(2), hu = x(3), tl = x(4), hl = x(5), len = x(6), kw = x(7);
      const double log_ratio = std::log(r / rw);
      return 2.0 * std::numbers::pi * tu * (hu - hl) /
             (log_ratio * (1.0 + 2.0 * len * tu / (log_ratio * rw * rw * kw) + tu / tl));
    }
  }
  return 0.0;
}

/// Piston slap noise: 12 runs, 6 inputs, response in dB. Ranges are the observed column extremes.
inline Dataset piston_dataset() {
  static constexpr double table[12][7] = {
      {71, 16.8, 21.0, 2, 1, 0.98, 56.75}, {15, 15.6, 21.8, 1, 2, 1.30, 57.65},
      {29, 14.4, 25.0, 2, 1, 1.14, 53.97}, {85, 14.4, 21.8, 2, 3, 0.66, 58.77},
      {29, 12.0, 21.0, 3, 2, 0.82, 56.34}, {57, 12.0, 23.4, 1, 3, 0.98, 56.85},
      {85, 13.2, 24.2, 3, 2, 1.30, 56.68}, {71, 18.0, 25.0, 1, 2, 0.82, 58.45},
      {43, 18.0, 22.6, 3, 3, 1.14, 55.50}, {15, 16.8, 24.2, 2, 3, 0.50, 52.77},
      {43, 13.2, 22.6, 1, 1, 0.50, 57.36}, {57, 15.6, 23.4, 3, 1, 0.66, 59.64},
  };
  Matrix x(12, 6);
  Vector y(12);
  for (int i = 0; i < 12; ++i) {
    for (int k = 0; k < 6; ++k) x(i, k) = table[i][k];
    y(i) = table[i][6];
  }
  return Dataset::from_original(x, y);
}

struct MetricResult {
  double rmspe = 0.0;
  double mar = 0.0;
  std::size_t n_test = 0;
};

namespace detail {

inline Vector residuals(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& pred) {
  if (truth.size() != pred.size())
    throw InvalidArgument("metrics: " + std::to_string(truth.size()) + " truths but " +
                          std::to_string(pred.size()) + " predictions");
  if (truth.size() < 1) throw InvalidArgument("metrics: no test points");
  return truth - pred;
}

}  // namespace detail

inline double rmspe(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& pred) {
  const Vector r = detail::residuals(truth, pred);
  return std::sqrt(r.squaredNorm() / static_cast<double>(r.size()));
}

/// Median of absolute residuals; even length averages the two middle values.
inline double mar(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& pred) {
  const Vector r = detail::residuals(truth, pred);
  std::vector<double> a(static_cast<std::size_t>(r.size()));
  for (Eigen::Index i = 0; i < r.size(); ++i) a[static_cast<std::size_t>(i)] = std::abs(r(i));
  std::sort(a.begin(), a.end());
  const std::size_t m = a.size() / 2;
  return a.size() % 2 ? a[m] : 0.5 * (a[m - 1] + a[m]);
}

inline MetricResult metrics(const Eigen::Ref<const Vector>& truth, const Eigen::Ref<const Vector>& pred) {
  return {rmspe(truth, pred), mar(truth, pred), static_cast<std::size_t>(truth.size())};
}

struct ScreeningScore {
  double aci = 0.0;
  double ami = 0.0;
  double aci_rate = 0.0;
  double ami_rate = 0.0;
};

/// Counts of selected inputs inside (aci) and outside (ami) the active set.
inline ScreeningScore screening_score(const std::vector<std::size_t>& selected, const TestFunction& f) {
  ScreeningScore s;
  for (std::size_t k : selected) {
    if (k >= f.dim) throw InvalidArgument("screening_score: index out of range");
    if (std::find(f.active.begin(), f.active.end(), k) != f.active.end())
      s.aci += 1.0;
    else
      s.ami += 1.0;
  }
  const double inactive = static_cast<double>(f.dim - f.active.size());
  s.aci_rate = f.active.empty() ? 0.0 : s.aci / static_cast<double>(f.active.size());
  s.ami_rate = inactive > 0.0 ? s.ami / inactive : 0.0;
  return s;
}

struct HyperOverrides {
  std::optional<double> tau, c, p, prop_sd;
  std::optional<std::size_t> iters, burnin, thin;
};

/// Applies scalar overrides (broadcast to every input) on top of `h`.
inline Hyperparams apply_overrides(Hyperparams h, const HyperOverrides& o) {
  const auto d = static_cast<Eigen::Index>(h.d());
  if (o.tau) h.tau = Vector::Constant(d, *o.tau);
  if (o.c) h.c = Vector::Constant(d, *o.c);
  if (o.p) h.p = Vector::Constant(d, *o.p);
  if (o.prop_sd) h.prop_sd = Vector::Constant(d, *o.prop_sd);
  if (o.iters) h.iters = *o.iters;
  if (o.burnin) h.burnin = *o.burnin;
  if (o.thin) h.thin = *o.thin;
  return h;
}

struct BenchmarkSpec {
  std::string function = "toy";
  DesignKind design = DesignKind::MaximinLhd;
  std::size_t n = 30;
  std::size_t reps = 1;
  HyperOverrides hyper;
  std::uint64_t seed = 1;
  /// 0 picks the default: 500 for borehole, 100 otherwise.
  std::size_t n_test = 0;
  SelectionRule rule = SelectionRule::Modal;
  std::size_t workers = 1;
  /// maximin swap budget; 0 = 100 n.
  std::size_t design_swaps = 0;
  /// Piston only: CSV with the 6 inputs and the response as the last column.
  std::string external_test;
};

struct ReplicateResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  SelectionReport selection;
  std::optional<ScreeningScore> score;
  MetricResult ssgp;
  MetricResult mle;
  /// Held-out external test set (piston only, when supplied).
  std::optional<MetricResult> ssgp_external, mle_external;
  Hyperparams hyper;
  GpParams posterior;
  GpParams mle_params;
  double mh_accept_rate = 0.0;
  std::vector<std::string> warnings;
};

struct BenchmarkReport {
  BenchmarkSpec spec;
  Hyperparams hyper;  ///< resolved hyperparameters of the first successful replicate
  std::string metric_kind;  ///< "test-set" or "leave-one-out"
  std::vector<ReplicateResult> replicates;
  std::size_t failures = 0;
  bool quota_exceeded = false;
  std::optional<ScreeningScore> mean_score;
  MetricResult mean_ssgp, mean_mle;
  std::size_t ssgp_better = 0;  ///< replicates with RMSPE(SSGP) < RMSPE(MLE)
  std::vector<std::string> notes;
};

namespace detail {

inline Hyperparams benchmark_hyper(const Dataset& data, const BenchmarkSpec& spec, std::uint64_t seed) {
  Hyperparams h = apply_overrides(default_hyperparams(data), spec.hyper);
  h.seed = seed;
  return h;
}

/// Uniform random points over `f`'s domain, original coordinates.
inline Matrix uniform_points(const TestFunction& f, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Matrix unit(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(f.dim));
  for (Eigen::Index i = 0; i < unit.rows(); ++i)
    for (Eigen::Index k = 0; k < unit.cols(); ++k) unit(i, k) = rng.uniform();
  return scale_points(unit, f.ranges, ScaleDirection::FromUnit);
}

inline Vector predict_all(const Predictor& model, const Eigen::Ref<const Matrix>& x) {
  Vector out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) = model.predict(x.row(i).transpose()).mean;
  return out;
}

inline ReplicateResult run_function_replicate(const BenchmarkSpec& spec, const TestFunction& f,
                                              std::size_t index, std::uint64_t seed) {
  ReplicateResult r;
  r.index = index;
  r.seed = seed;
  const Design design = spec.design == DesignKind::MaximinLhd
                            ? maximin_lhd(spec.n, f.dim, derive_seed(seed, 0), spec.design_swaps)
                            : random_lhd(spec.n, f.dim, derive_seed(seed, 0));
  const Matrix x = scale_points(design.points, f.ranges, ScaleDirection::FromUnit);
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i) = eval_function(f, x.row(i).transpose());
  const Dataset data = Dataset::from_original(x, y, f.ranges);

  r.hyper = benchmark_hyper(data, spec, derive_seed(seed, 1));
  const Chain chain = run_chain(data, r.hyper);
  r.selection = decide_selection(chain, spec.rule);
  r.score = screening_score(r.selection.selected, f);
  r.posterior = posterior_params(chain);
  r.mle_params = *chain.meta.mle;
  r.mh_accept_rate = chain.mh_accept_rate;
  r.warnings = chain.warnings;

  const std::size_t n_test = spec.n_test ? spec.n_test : (f.id == FunctionId::Borehole ? 500 : 100);
  const Matrix xt = uniform_points(f, n_test, derive_seed(seed, 2));
  Vector yt(xt.rows());
  for (Eigen::Index i = 0; i < xt.rows(); ++i) yt(i) = eval_function(f, xt.row(i).transpose());
  r.ssgp = metrics(yt, predict_all(Predictor(r.posterior, data), xt));
  r.mle = metrics(yt, predict_all(Predictor(r.mle_params, data), xt));
  r.ok = true;
  return r;
}

inline ReplicateResult run_piston_replicate(const BenchmarkSpec& spec, std::size_t index, std::uint64_t seed,
                                            const std::optional<CsvTable>& external) {
  ReplicateResult r;
  r.index = index;
  r.seed = seed;
  const Dataset data = piston_dataset();
  r.hyper = benchmark_hyper(data, spec, derive_seed(seed, 1));
  const Chain chain = run_chain(data, r.hyper);
  r.selection = decide_selection(chain, spec.rule);
  r.posterior = posterior_params(chain);
  r.mle_params = *chain.meta.mle;
  r.mh_accept_rate = chain.mh_accept_rate;
  r.warnings = chain.warnings;

  // Leave-one-out: refit both models without run i, predict run i.
  Vector truth(static_cast<Eigen::Index>(data.n())), pred_ssgp(truth.size()), pred_mle(truth.size());
  for (std::size_t i = 0; i < data.n(); ++i) {
    const Dataset fold = data.without_row(i);
    // Hyperparameters come from the full data so every fold shares the same prior.
    Hyperparams h = benchmark_hyper(data, spec, derive_seed(derive_seed(seed, 3), i));
    const Chain fold_chain = run_chain(fold, h);
    const Vector xi = data.points.row(static_cast<Eigen::Index>(i)).transpose();
    truth(static_cast<Eigen::Index>(i)) = data.responses(static_cast<Eigen::Index>(i));
    pred_ssgp(static_cast<Eigen::Index>(i)) = Predictor(posterior_params(fold_chain), fold).predict_unit(xi).mean;
    pred_mle(static_cast<Eigen::Index>(i)) = Predictor(*fold_chain.meta.mle, fold).predict_unit(xi).mean;
  }
  r.ssgp = metrics(truth, pred_ssgp);
  r.mle = metrics(truth, pred_mle);

  if (external) {
    const Predictor ssgp(r.posterior, data), mle(r.mle_params, data);
    Vector yt(static_cast<Eigen::Index>(external->rows.size())), ps(yt.size()), pm(yt.size());
    for (std::size_t i = 0; i < external->rows.size(); ++i) {
      Vector x(6);
      for (int k = 0; k < 6; ++k) x(k) = external->rows[i][static_cast<std::size_t>(k)];
      yt(static_cast<Eigen::Index>(i)) = external->rows[i][6];
      ps(static_cast<Eigen::Index>(i)) = ssgp.predict(x).mean;
      pm(static_cast<Eigen::Index>(i)) = mle.predict(x).mean;
    }
    r.ssgp_external = metrics(yt, ps);
    r.mle_external = metrics(yt, pm);
  }
  r.ok = true;
  return r;
}

}  // namespace detail

/// Runs `spec.reps` independent replicates; replicate r uses derive_seed(spec.seed, r).
/// Replicate failures are recorded and excluded from the means; more than 10%
/// failing sets `quota_exceeded`.
inline BenchmarkReport run_benchmark(const BenchmarkSpec& spec) {
  const auto& names = benchmark_names();
  if (std::find(names.begin(), names.end(), spec.function) == names.end())
    throw InvalidArgument("unknown function '" + spec.function +
                          "' (valid: toy, linear, sinusoidal, borehole, piston)");
  if (spec.reps < 1) throw InvalidArgument("benchmark: reps must be positive");
  const bool piston = spec.function == "piston";
  std::optional<TestFunction> f;
  if (!piston) {
    f = test_function(spec.function);
    if (spec.n < 2) throw InvalidArgument("benchmark: n must be at least 2");
    if (spec.design == DesignKind::External)
      throw InvalidArgument("benchmark: design must be random-lhd or maximin-lhd");
  }
  std::optional<CsvTable> external;
  if (piston && !spec.external_test.empty()) {
    external = read_csv(spec.external_test);
    if (external->cols() != 7)
      throw InvalidArgument(spec.external_test + ": expected 6 inputs and a response column");
  }

  BenchmarkReport report;
  report.spec = spec;
  report.metric_kind = piston ? "leave-one-out" : "test-set";
  report.replicates.resize(spec.reps);
  auto work = [&](std::size_t i) {
    const std::uint64_t seed = derive_seed(spec.seed, i);
    try {
      report.replicates[i] = piston ? detail::run_piston_replicate(spec, i, seed, external)
                                    : detail::run_function_replicate(spec, *f, i, seed);
    } catch (const std::exception& e) {
      ReplicateResult r;
      r.index = i;
      r.seed = seed;
      r.ok = false;
      r.error = e.what();
      report.replicates[i] = std::move(r);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(spec.workers, 1, spec.reps);
  if (workers == 1) {
    for (std::size_t i = 0; i < spec.reps; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < spec.reps; i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }

  // Deterministic fold in replicate order.
  ScreeningScore score_sum;
  std::size_t ok = 0;
  for (const ReplicateResult& r : report.replicates) {
    if (!r.ok) {
      ++report.failures;
      continue;
    }
    if (ok++ == 0) report.hyper = r.hyper;
    if (r.score) {
      score_sum.aci += r.score->aci;
      score_sum.ami += r.score->ami;
      score_sum.aci_rate += r.score->aci_rate;
      score_sum.ami_rate += r.score->ami_rate;
    }
    report.mean_ssgp.rmspe += r.ssgp.rmspe;
    report.mean_ssgp.mar += r.ssgp.mar;
    report.mean_mle.rmspe += r.mle.rmspe;
    report.mean_mle.mar += r.mle.mar;
    report.mean_ssgp.n_test = r.ssgp.n_test;
    report.mean_mle.n_test = r.mle.n_test;
    if (r.ssgp.rmspe < r.mle.rmspe) ++report.ssgp_better;
  }
  if (ok > 0) {
    const auto m = static_cast<double>(ok);
    report.mean_ssgp.rmspe /= m;
    report.mean_ssgp.mar /= m;
    report.mean_mle.rmspe /= m;
    report.mean_mle.mar /= m;
    if (!piston)
      report.mean_score = ScreeningScore{score_sum.aci / m, score_sum.ami / m, score_sum.aci_rate / m,
                                         score_sum.ami_rate / m};
  }
  report.quota_exceeded = static_cast<double>(report.failures) > 0.1 * static_cast<double>(spec.reps);
  if (piston) {
    report.notes.push_back(
        "piston hyperparameters are tau = 0.3, c = 25; the pair c = 0.3, tau = 25 is read as "
        "transposed, since c must exceed 1 and tau is the small spike scale");
    if (!external)
      report.notes.push_back("no external test file supplied; RMSPE/MAR are leave-one-out over the 12 runs");
  }
  return report;
}

}  // namespace ssgp
