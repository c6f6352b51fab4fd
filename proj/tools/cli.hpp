#pragma once

// ssgp command line: fit, select, predict, benchmark, design, simulate.
//
// Exit codes: 0 success, 2 invalid input or flags, 3 fit failure,
// 4 sampler failure, 5 benchmark failure quota exceeded.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssgp/ssgp.hpp"

namespace ssgp::cli {

enum ExitCode : int { kOk = 0, kUnexpected = 1, kInvalid = 2, kFitFailed = 3, kSamplerFailed = 4, kQuota = 5 };

inline constexpr const char* kVersion = "1.0.0";

struct DataOptions {
  std::string data, design, response;
  bool unit_cube = false;
};

inline void add_data_options(CLI::App* cmd, DataOptions& o) {
  auto* data = cmd->add_option("--data", o.data, "combined CSV, response in the last column");
  auto* design = cmd->add_option("--design", o.design, "design CSV (inputs only)");
  auto* response = cmd->add_option("--response", o.response, "response CSV (one column)");
  data->excludes(design)->excludes(response);
  design->needs(response);
  response->needs(design);
  cmd->add_flag("--unit-cube", o.unit_cube, "inputs already lie in [0,1]^d; skip rescaling to the observed ranges");
}

inline Json data_config(const DataOptions& o) {
  Json j = {{"unit_cube", o.unit_cube}};
  if (!o.data.empty()) j["data"] = o.data;
  if (!o.design.empty()) {
    j["design"] = o.design;
    j["response"] = o.response;
  }
  return j;
}

struct LoadedData {
  Dataset data;
  std::vector<std::string> names;
};

inline Matrix table_matrix(const CsvTable& t, std::size_t cols) {
  Matrix x(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t k = 0; k < cols; ++k) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = t.rows[i][k];
  return x;
}

inline LoadedData load_data(const DataOptions& o) {
  Matrix x;
  Vector y;
  std::vector<std::string> names;
  if (!o.data.empty()) {
    const CsvTable t = read_csv(o.data);
    if (t.cols() < 2) throw InvalidArgument(o.data + ": need at least one input column and a response column");
    if (t.rows.empty()) throw InvalidArgument(o.data + ": no data rows");
    const std::size_t d = t.cols() - 1;
    x = table_matrix(t, d);
    y.resize(x.rows());
    for (std::size_t i = 0; i < t.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = t.rows[i][d];
    names.assign(t.header.begin(), t.header.end() - 1);
  } else if (!o.design.empty()) {
    const CsvTable xt = read_csv(o.design);
    const CsvTable yt = read_csv(o.response);
    if (yt.cols() != 1) throw InvalidArgument(o.response + ": expected exactly one column, found " + std::to_string(yt.cols()));
    if (xt.rows.size() != yt.rows.size())
      throw InvalidArgument(o.response + ": " + std::to_string(yt.rows.size()) + " responses for " +
                            std::to_string(xt.rows.size()) + " design rows in " + o.design);
    if (xt.rows.empty()) throw InvalidArgument(o.design + ": no data rows");
    x = table_matrix(xt, xt.cols());
    y.resize(x.rows());
    for (std::size_t i = 0; i < yt.rows.size(); ++i) y(static_cast<Eigen::Index>(i)) = yt.rows[i][0];
    names = xt.header;
  } else {
    throw InvalidArgument("no data given: use --data FILE or --design FILE --response FILE");
  }
  if (o.unit_cube) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index k = 0; k < x.cols(); ++k)
        if (!(x(i, k) >= 0.0 && x(i, k) <= 1.0))
          throw InvalidArgument("--unit-cube: row " + std::to_string(i + 1) + ", column " + std::to_string(k + 1) +
                                " lies outside [0,1]");
    return {Dataset::from_unit(x, y), names};
  }
  for (Eigen::Index k = 0; k < x.cols(); ++k)
    if (!(x.col(k).maxCoeff() > x.col(k).minCoeff()))
      throw InvalidArgument("column " + std::to_string(k + 1) + " ('" + names[static_cast<std::size_t>(k)] +
                            "') is constant; it cannot be rescaled");
  return {Dataset::from_original(x, y), names};
}

inline std::string gamma_string(const Gamma& g) {
  std::string s;
  for (auto v : g) s += v ? '1' : '0';
  return s;
}

inline std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

inline std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

// ---------------------------------------------------------------------------

struct FitArgs {
  DataOptions data;
  std::uint64_t seed = 1;
  std::size_t starts = 10;
  std::string out = "model.json";
};

inline int cmd_fit(const FitArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedData loaded = load_data(a.data);
  FitOptions opts;
  opts.seed = a.seed;
  opts.starts = a.starts;
  ModelFile m;
  try {
    m.fit = mle_fit(loaded.data, opts);
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error& e) {
    err << "error: fit failed: " << e.what() << '\n';
    return kFitFailed;
  }
  m.data = loaded.data;
  m.config = {{"command", "fit"}, {"version", kVersion}, {"seed", a.seed}, {"starts", a.starts},
              {"input", data_config(a.data)}, {"input_names", loaded.names}};
  write_json_file(a.out, to_json(m));
  for (const auto& w : m.fit.warnings) err << "warning: " << w << '\n';
  out << "MLE fit of " << loaded.data.n() << " runs in " << loaded.data.d() << " dimensions\n";
  out << "  mu = " << format_double(m.fit.params.mu) << "  sigma2 = " << format_double(m.fit.params.sigma2)
      << "  nugget = " << format_double(m.fit.nugget) << '\n';
  const Vector theta = m.fit.params.theta();
  for (std::size_t k = 0; k < loaded.data.d(); ++k)
    out << "  theta[" << loaded.names[k] << "] = " << format_double(theta(static_cast<Eigen::Index>(k))) << '\n';
  out << "wrote " << a.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SelectArgs {
  DataOptions data;
  std::size_t iters = 6000, burnin = 2000, thin = 1;
  std::uint64_t seed = 1;
  std::optional<double> tau, c, p, prop_sd;
  double nugget = Hyperparams{}.nugget;
  std::string rule = "modal";
  std::string out_dir = ".";
  std::size_t top = 10;
  std::size_t acf_lag = 50;
};

inline void print_gamma_table(std::ostream& out, const GammaTable& table, const std::vector<std::string>& names,
                              std::size_t top) {
  out << "  gamma";
  for (const auto& n : names) out << std::setw(8) << n;
  out << std::setw(12) << "frequency" << '\n';
  for (std::size_t i = 0; i < table.rows.size() && i < top; ++i) {
    out << "       ";
    for (auto v : table.rows[i].gamma) out << std::setw(8) << static_cast<int>(v);
    out << std::setw(12) << fixed(table.rows[i].frequency, 4) << '\n';
  }
}

inline int cmd_select(const SelectArgs& a, std::ostream& out, std::ostream& err) {
  const LoadedData loaded = load_data(a.data);
  const SelectionRule rule = selection_rule_from_string(a.rule);
  Hyperparams h = default_hyperparams(loaded.data);
  HyperOverrides o;
  o.tau = a.tau;
  o.c = a.c;
  o.p = a.p;
  o.prop_sd = a.prop_sd;
  o.iters = a.iters;
  o.burnin = a.burnin;
  o.thin = a.thin;
  h = apply_overrides(h, o);
  h.seed = a.seed;
  h.nugget = a.nugget;
  validate(h, loaded.data.d());

  Chain chain;
  try {
    chain = run_chain(loaded.data, h);
  } catch (const SamplerFailed& e) {
    err << "error: sampler failed at scan " << e.scan() << ": " << e.what() << '\n';
    return kSamplerFailed;
  }
  const GammaTable table = tabulate_gamma(chain);
  const SelectionReport report = decide_selection(table, marginal_inclusion(chain), rule);

  ensure_dir(a.out_dir);
  const Json config = {{"command", "select"},   {"version", kVersion},      {"seed", a.seed},
                       {"rule", a.rule},        {"input", data_config(a.data)}, {"input_names", loaded.names},
                       {"hyper", to_json(h)}};
  write_json_file(join_path(a.out_dir, "chain.json"), to_json(ChainFile{chain, loaded.data, config}));
  Json rep = selection_json(report, table, a.top, loaded.names);
  rep = {{"schema_version", kSchemaVersion}, {"kind", "ssgp-selection"}, {"selection", rep},
         {"posterior", to_json(posterior_params(chain))}, {"mh_accept_rate", chain.mh_accept_rate},
         {"warnings", chain.warnings}, {"config", config}};
  write_json_file(join_path(a.out_dir, "report.json"), rep);
  export_trace(chain, join_path(a.out_dir, "trace.csv"));
  if (chain.size() > a.acf_lag) write_text_file(join_path(a.out_dir, "acf.csv"), acf_csv(chain, a.acf_lag));

  for (const auto& w : chain.warnings) err << "warning: " << w << '\n';
  out << "Most frequent gamma vectors (" << table.total << " draws after burn-in)\n";
  print_gamma_table(out, table, loaded.names, a.top);
  out << "marginal inclusion:";
  for (std::size_t k = 0; k < loaded.names.size(); ++k)
    out << ' ' << loaded.names[k] << '=' << fixed(report.marginal_inclusion[k], 3);
  out << "\nselected (" << to_string(rule) << "):";
  if (report.selected.empty()) out << " none";
  for (std::size_t k : report.selected) out << ' ' << loaded.names[k];
  out << "\nphi acceptance rate " << fixed(chain.mh_accept_rate, 3) << '\n';
  if (report.modal_tie) out << "note: the top gamma vectors are tied\n";
  out << "wrote chain.json, report.json, trace.csv to " << a.out_dir << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  std::string model, chain, test;
  std::string out = "predictions.csv";
};

inline int cmd_predict(const PredictArgs& a, std::ostream& out, std::ostream& err) {
  std::optional<Predictor> model;
  if (!a.model.empty()) {
    const ModelFile m = model_from_json(read_json_file(a.model));
    if (m.fit.degenerate) err << "warning: model was fitted to a constant response\n";
    model.emplace(m.fit.params, m.data);
  } else if (!a.chain.empty()) {
    const ChainFile f = chain_from_json(read_json_file(a.chain));
    if (f.chain.size() == 0) throw InvalidArgument(a.chain + ": chain has no draws");
    model.emplace(posterior_predictor(f.chain, f.data));
  } else {
    throw InvalidArgument("give --model FILE or --chain FILE");
  }
  const std::size_t d = model->params().phi.size();
  const CsvTable t = read_csv(a.test);
  if (t.cols() != d && t.cols() != d + 1)
    throw InvalidArgument(a.test + ": model has " + std::to_string(d) + " inputs but the file has " +
                          std::to_string(t.cols()) + " columns (expected " + std::to_string(d) + ", or " +
                          std::to_string(d + 1) + " with a truth column)");
  const bool truth = t.cols() == d + 1;

  std::ostringstream csv;
  for (std::size_t k = 0; k < d; ++k) csv << t.header[k] << ',';
  csv << "mean,mse";
  if (truth) csv << ',' << t.header[d];
  csv << '\n';
  Vector yt(static_cast<Eigen::Index>(t.rows.size())), yp(yt.size());
  std::size_t clamped = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    Vector x(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) x(static_cast<Eigen::Index>(k)) = t.rows[i][k];
    const Prediction p = model->predict(x);
    if (p.clamped) ++clamped;
    for (std::size_t k = 0; k < d; ++k) csv << format_double(t.rows[i][k]) << ',';
    csv << format_double(p.mean) << ',' << format_double(p.mse);
    if (truth) {
      csv << ',' << format_double(t.rows[i][d]);
      yt(static_cast<Eigen::Index>(i)) = t.rows[i][d];
    }
    yp(static_cast<Eigen::Index>(i)) = p.mean;
    csv << '\n';
  }
  write_text_file(a.out, csv.str());
  if (clamped) err << "warning: " << clamped << " predictive variances were negative and clamped to 0\n";
  out << "predicted " << t.rows.size() << " points; wrote " << a.out << '\n';
  if (truth && !t.rows.empty()) {
    const MetricResult m = metrics(yt, yp);
    out << "RMSPE " << format_double(m.rmspe) << "\nMAR   " << format_double(m.mar) << '\n';
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct BenchmarkArgs {
  std::string spec;
  std::string out_dir = ".";
  std::optional<std::size_t> workers;
};

inline void print_benchmark(std::ostream& out, const BenchmarkReport& r) {
  out << "function " << r.spec.function << ", " << r.replicates.size() << " replicates, metric "
      << r.metric_kind << '\n';
  out << std::setw(5) << "rep" << std::setw(14) << "modal gamma" << std::setw(8) << "freq";
  if (r.mean_score) out << std::setw(6) << "ACI" << std::setw(6) << "AMI";
  out << std::setw(12) << "RMSPE ssgp" << std::setw(12) << "RMSPE mle" << std::setw(8) << "acc" << '\n';
  for (const ReplicateResult& x : r.replicates) {
    out << std::setw(5) << x.index;
    if (!x.ok) {
      out << "  failed: " << x.error << '\n';
      continue;
    }
    out << std::setw(14) << gamma_string(x.selection.modal_gamma) << std::setw(8) << fixed(x.selection.modal_freq, 3);
    if (x.score) out << std::setw(6) << fixed(x.score->aci, 0) << std::setw(6) << fixed(x.score->ami, 0);
    out << std::setw(12) << fixed(x.ssgp.rmspe, 5) << std::setw(12) << fixed(x.mle.rmspe, 5) << std::setw(8)
        << fixed(x.mh_accept_rate, 3) << '\n';
  }
  if (r.mean_score)
    out << "ACI " << fixed(r.mean_score->aci, 2) << " (" << fixed(r.mean_score->aci_rate, 2) << ")   AMI "
        << fixed(r.mean_score->ami, 2) << " (" << fixed(r.mean_score->ami_rate, 2) << ")\n";
  out << std::setw(8) << "" << std::setw(12) << "RMSPE" << std::setw(12) << "MAR" << '\n';
  out << std::setw(8) << "SSGP" << std::setw(12) << fixed(r.mean_ssgp.rmspe, 5) << std::setw(12)
      << fixed(r.mean_ssgp.mar, 5) << '\n';
  out << std::setw(8) << "MLE" << std::setw(12) << fixed(r.mean_mle.rmspe, 5) << std::setw(12)
      << fixed(r.mean_mle.mar, 5) << '\n';
  out << "SSGP better in " << r.ssgp_better << " of " << (r.replicates.size() - r.failures) << " replicates\n";
  for (const auto& n : r.notes) out << "note: " << n << '\n';
}

inline int cmd_benchmark(const BenchmarkArgs& a, std::ostream& out, std::ostream& err) {
  BenchmarkSpec spec = benchmark_spec_from_json(read_json_file(a.spec));
  if (a.workers) spec.workers = *a.workers;
  if (!spec.external_test.empty() && std::filesystem::path(spec.external_test).is_relative()) {
    const auto rel = std::filesystem::path(a.spec).parent_path() / spec.external_test;
    if (std::filesystem::exists(rel)) spec.external_test = rel.string();
  }
  const BenchmarkReport report = run_benchmark(spec);
  ensure_dir(a.out_dir);
  write_json_file(join_path(a.out_dir, "report.json"), to_json(report));
  write_text_file(join_path(a.out_dir, "replicates.csv"), replicates_csv(report));
  print_benchmark(out, report);
  if (report.quota_exceeded) {
    err << "error: " << report.failures << " of " << report.replicates.size()
        << " replicates failed (more than 10%)\n";
    return kQuota;
  }
  return kOk;
}

// ---------------------------------------------------------------------------

struct DesignArgs {
  std::string kind = "maximin-lhd";
  std::size_t n = 0, d = 0, swaps = 0;
  std::uint64_t seed = 1;
  std::string ranges;
  std::string out = "design.csv";
};

inline std::string matrix_csv(const Matrix& x, const std::vector<std::string>& header) {
  std::ostringstream s;
  for (std::size_t k = 0; k < header.size(); ++k) s << (k ? "," : "") << header[k];
  s << '\n';
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index k = 0; k < x.cols(); ++k) s << (k ? "," : "") << format_double(x(i, k));
    s << '\n';
  }
  return s.str();
}

inline int cmd_design(const DesignArgs& a, std::ostream& out, std::ostream&) {
  const DesignKind kind = design_kind_from_string(a.kind);
  if (kind == DesignKind::External) throw InvalidArgument("--kind external cannot be generated");
  if (a.n < 2) throw InvalidArgument("--n must be at least 2");
  if (a.d < 1) throw InvalidArgument("--d must be at least 1");
  const Design design = kind == DesignKind::MaximinLhd ? maximin_lhd(a.n, a.d, a.seed, a.swaps)
                                                       : random_lhd(a.n, a.d, a.seed);
  Matrix x = design.points;
  if (!a.ranges.empty()) {
    const CsvTable t = read_csv(a.ranges);
    if (t.cols() != 2 || t.rows.size() != a.d)
      throw InvalidArgument(a.ranges + ": expected " + std::to_string(a.d) + " rows of lo,hi");
    Ranges r;
    for (const auto& row : t.rows) r.push_back({row[0], row[1]});
    x = scale_points(x, r, ScaleDirection::FromUnit);
  }
  write_text_file(a.out, matrix_csv(x, numbered_names(a.d)));
  out << to_string(kind) << " design, " << a.n << " x " << a.d << ", min distance (unit scale) "
      << format_double(min_pairwise_distance(design.points)) << "; wrote " << a.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string function, design;
  bool from_unit = false;
  std::string out = "data.csv";
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream&) {
  const TestFunction f = test_function(a.function);
  const CsvTable t = read_csv(a.design);
  if (t.cols() != f.dim)
    throw InvalidArgument(a.design + ": " + a.function + " takes " + std::to_string(f.dim) + " inputs, file has " +
                          std::to_string(t.cols()) + " columns");
  Matrix x = table_matrix(t, f.dim);
  if (a.from_unit) x = scale_points(x, f.ranges, ScaleDirection::FromUnit);
  Matrix data(x.rows(), x.cols() + 1);
  data.leftCols(x.cols()) = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) data(i, x.cols()) = eval_function(f, x.row(i).transpose());
  std::vector<std::string> header = f.input_names;
  header.push_back("y");
  write_text_file(a.out, matrix_csv(data, header));
  out << "evaluated " << a.function << " at " << x.rows() << " points; wrote " << a.out << '\n';
  return kOk;
}

// ---------------------------------------------------------------------------

/// Runs the CLI on `args` (without the program name).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Bayesian variable selection for Gaussian process models", "ssgp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "maximum-likelihood fit of an ordinary kriging model");
  add_data_options(fit_cmd, fit.data);
  fit_cmd->add_option("--seed", fit.seed, "seed of the multi-start design")->capture_default_str();
  fit_cmd->add_option("--starts", fit.starts, "optimizer starts")->capture_default_str()->check(CLI::PositiveNumber);
  fit_cmd->add_option("--out,-o", fit.out, "model file")->capture_default_str();

  SelectArgs sel;
  auto* sel_cmd = app.add_subcommand("select", "run the variable-selection sampler");
  add_data_options(sel_cmd, sel.data);
  sel_cmd->add_option("--iters", sel.iters, "Gibbs scans M")->capture_default_str();
  sel_cmd->add_option("--burnin", sel.burnin, "burn-in scans")->capture_default_str();
  sel_cmd->add_option("--thin", sel.thin, "keep every k-th draw")->capture_default_str();
  sel_cmd->add_option("--seed", sel.seed, "chain seed")->capture_default_str();
  sel_cmd->add_option("--tau", sel.tau, "spike scale (default 1/(3 range))");
  sel_cmd->add_option("--c", sel.c, "slab multiplier (default 25)");
  sel_cmd->add_option("--p", sel.p, "prior inclusion probability (default 0.5)");
  sel_cmd->add_option("--prop-sd", sel.prop_sd, "random-walk proposal sd (default 0.03)");
  sel_cmd->add_option("--nugget", sel.nugget, "diagonal jitter while sampling")->capture_default_str();
  sel_cmd->add_option("--rule", sel.rule, "modal or median")->capture_default_str();
  sel_cmd->add_option("--out-dir", sel.out_dir, "output directory")->capture_default_str();
  sel_cmd->add_option("--top", sel.top, "gamma vectors to list")->capture_default_str();
  sel_cmd->add_option("--acf-lag", sel.acf_lag, "largest lag in acf.csv")->capture_default_str();

  PredictArgs pred;
  auto* pred_cmd = app.add_subcommand("predict", "kriging predictions from a model or a chain");
  auto* model_opt = pred_cmd->add_option("--model", pred.model, "model.json from fit");
  auto* chain_opt = pred_cmd->add_option("--chain", pred.chain, "chain.json from select (posterior means)");
  model_opt->excludes(chain_opt);
  pred_cmd->add_option("test", pred.test, "test CSV; an extra last column is taken as the truth")->required();
  pred_cmd->add_option("--out,-o", pred.out, "predictions CSV")->capture_default_str();

  BenchmarkArgs bench;
  auto* bench_cmd = app.add_subcommand("benchmark", "replicated benchmark from a JSON spec");
  bench_cmd->add_option("spec", bench.spec, "benchmark spec JSON")->required();
  bench_cmd->add_option("--out-dir", bench.out_dir, "output directory")->capture_default_str();
  bench_cmd->add_option("--workers", bench.workers, "parallel replicates")->check(CLI::PositiveNumber);

  DesignArgs des;
  auto* des_cmd = app.add_subcommand("design", "generate a Latin hypercube design");
  des_cmd->add_option("--kind", des.kind, "random-lhd or maximin-lhd")->capture_default_str();
  des_cmd->add_option("--n", des.n, "runs")->required();
  des_cmd->add_option("--d", des.d, "inputs")->required();
  des_cmd->add_option("--seed", des.seed, "seed")->capture_default_str();
  des_cmd->add_option("--swaps", des.swaps, "maximin swap budget (0 = 100 n)")->capture_default_str();
  des_cmd->add_option("--ranges", des.ranges, "CSV of lo,hi per input to map the design onto");
  des_cmd->add_option("--out,-o", des.out, "design CSV")->capture_default_str();

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "evaluate a benchmark function on a design");
  sim_cmd->add_option("--function", sim.function, "toy, linear, sinusoidal or borehole")->required();
  sim_cmd->add_option("--design", sim.design, "design CSV")->required();
  sim_cmd->add_flag("--from-unit", sim.from_unit, "design is in [0,1]^d; map it onto the function's ranges");
  sim_cmd->add_option("--out,-o", sim.out, "data CSV")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kInvalid;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out, err);
    if (*sel_cmd) return cmd_select(sel, out, err);
    if (*pred_cmd) return cmd_predict(pred, out, err);
    if (*bench_cmd) return cmd_benchmark(bench, out, err);
    if (*des_cmd) return cmd_design(des, out, err);
    if (*sim_cmd) return cmd_simulate(sim, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const SamplerFailed& e) {
    err << "error: sampler failed at scan " << e.scan() << ": " << e.what() << '\n';
    return kSamplerFailed;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kFitFailed;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUnexpected;
  }
  return kInvalid;
}

}  // namespace ssgp::cli
