#pragma once

// JSON documents for fitted models, chains, selection reports and benchmarks.
// Every document carries `schema_version` and `kind`; readers reject others.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ssgp/csv.hpp"
#include "ssgp/designs.hpp"
#include "ssgp/error.hpp"
#include "ssgp/gp_core.hpp"
#include "ssgp/sampler.hpp"
#include "ssgp/selection.hpp"
#include "ssgp/testbed.hpp"

namespace ssgp {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Malformed or incompatible JSON document.
class FormatError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

namespace detail {

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector vector_from(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw FormatError(what + "[" + std::to_string(i) + "]: expected a number");
    v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  }
  return v;
}

template <class T>
T field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw FormatError(where + ": field '" + key + "' has the wrong type");
  }
}

inline void check_header(const Json& j, const std::string& kind, const std::string& where) {
  const auto version = field<int>(j, "schema_version", where);
  if (version != kSchemaVersion)
    throw FormatError(where + ": schema_version " + std::to_string(version) + " is not supported (expected " +
                      std::to_string(kSchemaVersion) + ")");
  const auto got = field<std::string>(j, "kind", where);
  if (got != kind) throw FormatError(where + ": expected a '" + kind + "' document, got '" + got + "'");
}

}  // namespace detail

inline Json to_json(const GpParams& p) {
  return {{"mu", p.mu}, {"sigma2", p.sigma2}, {"phi", detail::vector_json(p.phi)},
          {"theta", detail::vector_json(p.theta())}};
}

inline GpParams gp_params_from_json(const Json& j) {
  GpParams p;
  p.mu = detail::field<double>(j, "mu", "params");
  p.sigma2 = detail::field<double>(j, "sigma2", "params");
  p.phi = detail::vector_from(j.at("phi"), "params.phi");
  return p;
}

/// Points are stored on the unit scale together with the ranges that map them back.
inline Json to_json(const Dataset& data) {
  Json ranges = Json::array();
  for (const Range& r : data.ranges) ranges.push_back({r.lo, r.hi});
  Json points = Json::array();
  for (Eigen::Index i = 0; i < data.points.rows(); ++i) points.push_back(detail::vector_json(data.points.row(i).transpose()));
  return {{"fingerprint", fingerprint(data)}, {"n", data.n()}, {"d", data.d()}, {"ranges", ranges},
          {"points", points}, {"responses", detail::vector_json(data.responses)}};
}

inline Dataset dataset_from_json(const Json& j) {
  const auto n = detail::field<std::size_t>(j, "n", "dataset");
  const auto d = detail::field<std::size_t>(j, "d", "dataset");
  const Json& pts = j.at("points");
  const Json& rng = j.at("ranges");
  if (pts.size() != n || rng.size() != d) throw FormatError("dataset: size fields disagree with contents");
  Dataset data;
  data.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    const Vector row = detail::vector_from(pts[i], "dataset.points");
    if (static_cast<std::size_t>(row.size()) != d) throw FormatError("dataset.points: ragged row");
    data.points.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  data.responses = detail::vector_from(j.at("responses"), "dataset.responses");
  if (static_cast<std::size_t>(data.responses.size()) != n) throw FormatError("dataset.responses: wrong length");
  for (const Json& r : rng) {
    if (!r.is_array() || r.size() != 2) throw FormatError("dataset.ranges: expected [lo, hi] pairs");
    data.ranges.push_back({r[0].get<double>(), r[1].get<double>()});
  }
  const auto fp = detail::field<std::string>(j, "fingerprint", "dataset");
  if (fp != fingerprint(data)) throw FormatError("dataset: fingerprint mismatch (file modified or corrupted)");
  return data;
}

inline Json to_json(const Hyperparams& h) {
  return {{"tau", detail::vector_json(h.tau)},
          {"c", detail::vector_json(h.c)},
          {"p", detail::vector_json(h.p)},
          {"prop_sd", detail::vector_json(h.prop_sd)},
          {"iters", h.iters},
          {"burnin", h.burnin},
          {"thin", h.thin},
          {"seed", h.seed},
          {"nugget", h.nugget}};
}

inline Hyperparams hyperparams_from_json(const Json& j) {
  Hyperparams h;
  h.tau = detail::vector_from(j.at("tau"), "hyper.tau");
  h.c = detail::vector_from(j.at("c"), "hyper.c");
  h.p = detail::vector_from(j.at("p"), "hyper.p");
  h.prop_sd = detail::vector_from(j.at("prop_sd"), "hyper.prop_sd");
  h.iters = detail::field<std::size_t>(j, "iters", "hyper");
  h.burnin = detail::field<std::size_t>(j, "burnin", "hyper");
  h.thin = detail::field<std::size_t>(j, "thin", "hyper");
  h.seed = detail::field<std::uint64_t>(j, "seed", "hyper");
  h.nugget = detail::field<double>(j, "nugget", "hyper");
  return h;
}

// ---------------------------------------------------------------------------
// Fitted model

struct ModelFile {
  MleFit fit;
  Dataset data;
  Json config = Json::object();
};

inline Json to_json(const ModelFile& m) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "ssgp-model"},
          {"params", to_json(m.fit.params)},
          {"objective", m.fit.objective},
          {"nugget", m.fit.nugget},
          {"successful_starts", m.fit.successful_starts},
          {"degenerate", m.fit.degenerate},
          {"warnings", m.fit.warnings},
          {"dataset", to_json(m.data)},
          {"config", m.config}};
}

inline ModelFile model_from_json(const Json& j) {
  detail::check_header(j, "ssgp-model", "model");
  ModelFile m;
  m.fit.params = gp_params_from_json(j.at("params"));
  m.fit.objective = detail::field<double>(j, "objective", "model");
  m.fit.nugget = detail::field<double>(j, "nugget", "model");
  m.fit.successful_starts = detail::field<std::size_t>(j, "successful_starts", "model");
  m.fit.degenerate = detail::field<bool>(j, "degenerate", "model");
  m.fit.warnings = detail::field<std::vector<std::string>>(j, "warnings", "model");
  m.data = dataset_from_json(j.at("dataset"));
  m.config = j.value("config", Json::object());
  return m;
}

// ---------------------------------------------------------------------------
// Chain

struct ChainFile {
  Chain chain;
  Dataset data;
  Json config = Json::object();
};

inline Json to_json(const ChainFile& f) {
  const Chain& c = f.chain;
  Json meta = {{"hyper", to_json(c.meta.hyper)},
               {"dataset_fingerprint", c.meta.dataset_fingerprint},
               {"n", c.meta.n},
               {"d", c.meta.d},
               {"initial", to_json(c.meta.initial)},
               {"mle", c.meta.mle ? to_json(*c.meta.mle) : Json(nullptr)},
               {"notes", c.meta.notes}};
  Json phi = Json::array(), gamma = Json::array();
  for (std::size_t i = 0; i < c.size(); ++i) {
    phi.push_back(detail::vector_json(c.phi[i]));
    Json g = Json::array();
    for (auto v : c.gamma[i]) g.push_back(static_cast<int>(v));
    gamma.push_back(g);
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "ssgp-chain"},
          {"meta", meta},
          {"mh_accept_rate", c.mh_accept_rate},
          {"proposal_failures", c.proposal_failures},
          {"max_nugget", c.max_nugget},
          {"warnings", c.warnings},
          {"draws", {{"scan", c.scan}, {"mu", c.mu}, {"sigma2", c.sigma2}, {"phi", phi}, {"gamma", gamma}}},
          {"dataset", to_json(f.data)},
          {"config", f.config}};
}

inline ChainFile chain_from_json(const Json& j) {
  detail::check_header(j, "ssgp-chain", "chain");
  ChainFile f;
  Chain& c = f.chain;
  const Json& meta = j.at("meta");
  c.meta.hyper = hyperparams_from_json(meta.at("hyper"));
  c.meta.dataset_fingerprint = detail::field<std::string>(meta, "dataset_fingerprint", "chain.meta");
  c.meta.n = detail::field<std::size_t>(meta, "n", "chain.meta");
  c.meta.d = detail::field<std::size_t>(meta, "d", "chain.meta");
  c.meta.initial = gp_params_from_json(meta.at("initial"));
  if (!meta.at("mle").is_null()) c.meta.mle = gp_params_from_json(meta.at("mle"));
  c.meta.notes = detail::field<std::vector<std::string>>(meta, "notes", "chain.meta");
  c.mh_accept_rate = detail::field<double>(j, "mh_accept_rate", "chain");
  c.proposal_failures = detail::field<std::size_t>(j, "proposal_failures", "chain");
  c.max_nugget = detail::field<double>(j, "max_nugget", "chain");
  c.warnings = detail::field<std::vector<std::string>>(j, "warnings", "chain");

  const Json& draws = j.at("draws");
  c.scan = detail::field<std::vector<std::size_t>>(draws, "scan", "chain.draws");
  c.mu = detail::field<std::vector<double>>(draws, "mu", "chain.draws");
  c.sigma2 = detail::field<std::vector<double>>(draws, "sigma2", "chain.draws");
  const Json& phi = draws.at("phi");
  const Json& gamma = draws.at("gamma");
  const std::size_t m = c.scan.size();
  if (c.mu.size() != m || c.sigma2.size() != m || phi.size() != m || gamma.size() != m)
    throw FormatError("chain.draws: columns have different lengths");
  for (std::size_t i = 0; i < m; ++i) {
    c.phi.push_back(detail::vector_from(phi[i], "chain.draws.phi"));
    Gamma g;
    for (const Json& v : gamma[i]) g.push_back(v.get<int>() != 0 ? 1 : 0);
    if (static_cast<std::size_t>(c.phi.back().size()) != c.meta.d || g.size() != c.meta.d)
      throw FormatError("chain.draws: draw " + std::to_string(i) + " has the wrong dimension");
    c.gamma.push_back(std::move(g));
  }
  f.data = dataset_from_json(j.at("dataset"));
  if (fingerprint(f.data) != c.meta.dataset_fingerprint)
    throw FormatError("chain: embedded dataset does not match the chain's fingerprint");
  f.config = j.value("config", Json::object());
  return f;
}

// ---------------------------------------------------------------------------
// Selection report

inline Json gamma_json(const Gamma& g) {
  Json out = Json::array();
  for (auto v : g) out.push_back(static_cast<int>(v));
  return out;
}

/// `top` limits the tabulated gamma vectors (0 keeps all).
inline Json selection_json(const SelectionReport& r, const GammaTable& table, std::size_t top,
                           const std::vector<std::string>& input_names) {
  Json rows = Json::array();
  for (std::size_t i = 0; i < table.rows.size() && (top == 0 || i < top); ++i)
    rows.push_back({{"gamma", gamma_json(table.rows[i].gamma)},
                    {"count", table.rows[i].count},
                    {"frequency", table.rows[i].frequency}});
  Json names = Json::array();
  for (std::size_t k : r.selected) names.push_back(k < input_names.size() ? input_names[k] : "x" + std::to_string(k + 1));
  std::vector<std::size_t> one_based;
  for (std::size_t k : r.selected) one_based.push_back(k + 1);
  return {{"rule", to_string(r.rule)},
          {"modal_gamma", gamma_json(r.modal_gamma)},
          {"modal_freq", r.modal_freq},
          {"modal_tie", r.modal_tie},
          {"marginal_inclusion", r.marginal_inclusion},
          {"selected", one_based},
          {"selected_names", names},
          {"total_draws", table.total},
          {"gamma_table", rows}};
}

// ---------------------------------------------------------------------------
// Benchmarks

/// Reads a benchmark spec; unknown keys are rejected so typos do not pass silently.
inline BenchmarkSpec benchmark_spec_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("benchmark spec: expected a JSON object");
  static const std::vector<std::string> keys{"function", "design", "n",       "reps",          "hyper",
                                             "seed",     "n_test", "rule",    "workers",       "design_swaps",
                                             "external_test", "schema_version", "kind", "description"};
  for (const auto& [key, value] : j.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw FormatError("benchmark spec: unknown field '" + key + "'");
  BenchmarkSpec s;
  const std::string where = "benchmark spec";
  s.function = detail::field<std::string>(j, "function", where);
  if (j.contains("design")) s.design = design_kind_from_string(detail::field<std::string>(j, "design", where));
  if (j.contains("n")) s.n = detail::field<std::size_t>(j, "n", where);
  if (j.contains("reps")) s.reps = detail::field<std::size_t>(j, "reps", where);
  if (j.contains("seed")) s.seed = detail::field<std::uint64_t>(j, "seed", where);
  if (j.contains("n_test")) s.n_test = detail::field<std::size_t>(j, "n_test", where);
  if (j.contains("rule")) s.rule = selection_rule_from_string(detail::field<std::string>(j, "rule", where));
  if (j.contains("workers")) s.workers = detail::field<std::size_t>(j, "workers", where);
  if (j.contains("design_swaps")) s.design_swaps = detail::field<std::size_t>(j, "design_swaps", where);
  if (j.contains("external_test")) s.external_test = detail::field<std::string>(j, "external_test", where);
  if (j.contains("hyper")) {
    const Json& h = j.at("hyper");
    static const std::vector<std::string> hkeys{"tau", "c", "p", "prop_sd", "iters", "burnin", "thin"};
    for (const auto& [key, value] : h.items())
      if (std::find(hkeys.begin(), hkeys.end(), key) == hkeys.end())
        throw FormatError("benchmark spec: unknown hyper field '" + key + "'");
    const std::string hw = "benchmark spec hyper";
    if (h.contains("tau")) s.hyper.tau = detail::field<double>(h, "tau", hw);
    if (h.contains("c")) s.hyper.c = detail::field<double>(h, "c", hw);
    if (h.contains("p")) s.hyper.p = detail::field<double>(h, "p", hw);
    if (h.contains("prop_sd")) s.hyper.prop_sd = detail::field<double>(h, "prop_sd", hw);
    if (h.contains("iters")) s.hyper.iters = detail::field<std::size_t>(h, "iters", hw);
    if (h.contains("burnin")) s.hyper.burnin = detail::field<std::size_t>(h, "burnin", hw);
    if (h.contains("thin")) s.hyper.thin = detail::field<std::size_t>(h, "thin", hw);
  }
  return s;
}

inline Json to_json(const BenchmarkSpec& s) {
  Json h = Json::object();
  if (s.hyper.tau) h["tau"] = *s.hyper.tau;
  if (s.hyper.c) h["c"] = *s.hyper.c;
  if (s.hyper.p) h["p"] = *s.hyper.p;
  if (s.hyper.prop_sd) h["prop_sd"] = *s.hyper.prop_sd;
  if (s.hyper.iters) h["iters"] = *s.hyper.iters;
  if (s.hyper.burnin) h["burnin"] = *s.hyper.burnin;
  if (s.hyper.thin) h["thin"] = *s.hyper.thin;
  Json out = {{"function", s.function}, {"design", to_string(s.design)}, {"n", s.n},       {"reps", s.reps},
              {"hyper", h},             {"seed", s.seed},                {"n_test", s.n_test}, {"rule", to_string(s.rule)},
              {"design_swaps", s.design_swaps}};
  if (!s.external_test.empty()) out["external_test"] = s.external_test;
  return out;
}

inline Json to_json(const MetricResult& m) { return {{"rmspe", m.rmspe}, {"mar", m.mar}, {"n_test", m.n_test}}; }

inline Json to_json(const ScreeningScore& s) {
  return {{"aci", s.aci}, {"ami", s.ami}, {"aci_rate", s.aci_rate}, {"ami_rate", s.ami_rate}};
}

/// Worker count is left out on purpose: results do not depend on it.
inline Json to_json(const BenchmarkReport& r) {
  Json reps = Json::array();
  for (const ReplicateResult& x : r.replicates) {
    Json e = {{"index", x.index}, {"seed", x.seed}, {"ok", x.ok}};
    if (!x.ok) {
      e["error"] = x.error;
    } else {
      e["modal_gamma"] = gamma_json(x.selection.modal_gamma);
      e["modal_freq"] = x.selection.modal_freq;
      e["marginal_inclusion"] = x.selection.marginal_inclusion;
      std::vector<std::size_t> sel;
      for (std::size_t k : x.selection.selected) sel.push_back(k + 1);
      e["selected"] = sel;
      if (x.score) e["score"] = to_json(*x.score);
      e["ssgp"] = to_json(x.ssgp);
      e["mle"] = to_json(x.mle);
      if (x.ssgp_external) e["ssgp_external"] = to_json(*x.ssgp_external);
      if (x.mle_external) e["mle_external"] = to_json(*x.mle_external);
      e["posterior"] = to_json(x.posterior);
      e["mle_params"] = to_json(x.mle_params);
      e["mh_accept_rate"] = x.mh_accept_rate;
      e["hyper"] = to_json(x.hyper);
      e["warnings"] = x.warnings;
    }
    reps.push_back(e);
  }
  Json out = {{"schema_version", kSchemaVersion},
              {"kind", "ssgp-benchmark"},
              {"spec", to_json(r.spec)},
              {"metric_kind", r.metric_kind},
              {"failures", r.failures},
              {"quota_exceeded", r.quota_exceeded},
              {"mean_ssgp", to_json(r.mean_ssgp)},
              {"mean_mle", to_json(r.mean_mle)},
              {"ssgp_better", r.ssgp_better},
              {"notes", r.notes},
              {"replicates", reps}};
  if (r.failures < r.replicates.size()) out["hyper"] = to_json(r.hyper);
  if (r.mean_score) out["mean_score"] = to_json(*r.mean_score);
  return out;
}

/// One row per replicate: index, seed, ok, selected (1-based, ';'-joined), aci, ami,
/// RMSPE/MAR for both models, acceptance rate.
inline std::string replicates_csv(const BenchmarkReport& r) {
  std::ostringstream out;
  out << "index,seed,ok,selected,aci,ami,rmspe_ssgp,rmspe_mle,mar_ssgp,mar_mle,mh_accept_rate\n";
  for (const ReplicateResult& x : r.replicates) {
    out << x.index << ',' << x.seed << ',' << (x.ok ? 1 : 0) << ',';
    if (!x.ok) {
      out << ",,,,,,,\n";
      continue;
    }
    for (std::size_t i = 0; i < x.selection.selected.size(); ++i) out << (i ? ";" : "") << x.selection.selected[i] + 1;
    out << ',' << (x.score ? format_double(x.score->aci) : "") << ',' << (x.score ? format_double(x.score->ami) : "")
        << ',' << format_double(x.ssgp.rmspe) << ',' << format_double(x.mle.rmspe) << ','
        << format_double(x.ssgp.mar) << ',' << format_double(x.mle.mar) << ',' << format_double(x.mh_accept_rate)
        << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(path + ": invalid JSON (" + e.what() + ")");
  }
}

inline void write_json_file(const std::string& path, const Json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace ssgp
