#pragma once

// Variable-selection summaries of a chain and MCMC diagnostics.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ssgp/csv.hpp"
#include "ssgp/error.hpp"
#include "ssgp/sampler.hpp"

namespace ssgp {

struct GammaRow {
  Gamma gamma;
  std::size_t count = 0;
  double frequency = 0.0;
};

/// Distinct gamma vectors, most frequent first; equal counts in lexicographic order.
struct GammaTable {
  std::vector<GammaRow> rows;
  std::size_t total = 0;
};

inline GammaTable tabulate_gamma(const std::vector<Gamma>& draws) {
  if (draws.empty()) throw InvalidArgument("tabulate_gamma: empty chain");
  std::map<Gamma, std::size_t> counts;
  for (const Gamma& g : draws) ++counts[g];
  GammaTable t;
  t.total = draws.size();
  for (const auto& [g, count] : counts)
    t.rows.push_back({g, count, static_cast<double>(count) / static_cast<double>(draws.size())});
  // std::map iterates lexicographically, so a stable sort keeps that order within ties.
  std::stable_sort(t.rows.begin(), t.rows.end(),
                   [](const GammaRow& a, const GammaRow& b) { return a.count > b.count; });
  return t;
}

inline GammaTable tabulate_gamma(const Chain& chain) { return tabulate_gamma(chain.gamma); }

/// Fraction of draws with gamma_k = 1, per k.
inline std::vector<double> marginal_inclusion(const std::vector<Gamma>& draws) {
  if (draws.empty()) throw InvalidArgument("marginal_inclusion: empty chain");
  std::vector<std::size_t> ones(draws.front().size(), 0);
  for (const Gamma& g : draws)
    for (std::size_t k = 0; k < g.size(); ++k) ones[k] += g[k];
  std::vector<double> out(ones.size());
  for (std::size_t k = 0; k < ones.size(); ++k)
    out[k] = static_cast<double>(ones[k]) / static_cast<double>(draws.size());
  return out;
}

inline std::vector<double> marginal_inclusion(const Chain& chain) { return marginal_inclusion(chain.gamma); }

enum class SelectionRule {
  Modal,   ///< variables switched on in the most frequent gamma vector
  Median,  ///< variables with marginal inclusion > 0.5
};

inline std::string to_string(SelectionRule r) { return r == SelectionRule::Modal ? "modal" : "median"; }

inline SelectionRule selection_rule_from_string(const std::string& s) {
  if (s == "modal") return SelectionRule::Modal;
  if (s == "median") return SelectionRule::Median;
  throw InvalidArgument("unknown selection rule '" + s + "' (valid: modal, median)");
}

struct SelectionReport {
  Gamma modal_gamma;
  double modal_freq = 0.0;
  std::vector<double> marginal_inclusion;
  /// 0-based indices of the selected inputs, ascending.
  std::vector<std::size_t> selected;
  SelectionRule rule = SelectionRule::Modal;
  /// More than one gamma vector shared the top frequency.
  bool modal_tie = false;
};

inline SelectionReport decide_selection(const GammaTable& table, const std::vector<double>& marginals,
                                        SelectionRule rule = SelectionRule::Modal) {
  if (table.rows.empty()) throw InvalidArgument("decide_selection: empty table");
  if (marginals.size() != table.rows.front().gamma.size())
    throw InvalidArgument("decide_selection: marginals do not match gamma dimension");
  SelectionReport r;
  r.rule = rule;
  r.modal_gamma = table.rows.front().gamma;
  r.modal_freq = table.rows.front().frequency;
  r.modal_tie = table.rows.size() > 1 && table.rows[1].count == table.rows.front().count;
  r.marginal_inclusion = marginals;
  for (std::size_t k = 0; k < marginals.size(); ++k) {
    const bool on = rule == SelectionRule::Modal ? r.modal_gamma[k] == 1 : marginals[k] > 0.5;
    if (on) r.selected.push_back(k);
  }
  return r;
}

inline SelectionReport decide_selection(const Chain& chain, SelectionRule rule = SelectionRule::Modal) {
  return decide_selection(tabulate_gamma(chain), marginal_inclusion(chain), rule);
}

/// Sample autocorrelation (biased normalization, so every lag lies in [-1, 1]).
inline std::vector<double> autocorrelation(const std::vector<double>& series, std::size_t max_lag) {
  const std::size_t n = series.size();
  if (n <= max_lag) throw InvalidArgument("autocorrelation: series length must exceed max_lag");
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t t = 0; t < n; ++t) centered[t] = series[t] - mean;
  double c0 = 0.0;
  for (double v : centered) c0 += v * v;
  if (!(c0 > 0.0)) throw InvalidArgument("autocorrelation: series has zero variance");
  std::vector<double> acf(max_lag + 1);
  acf[0] = 1.0;
  for (std::size_t lag = 1; lag <= max_lag; ++lag) {
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += centered[t] * centered[t + lag];
    acf[lag] = s / c0;
  }
  return acf;
}

/// Trace CSV header: scan,mu,sigma2,phi_1..phi_d,gamma_1..gamma_d.
inline std::vector<std::string> trace_header(std::size_t d) {
  std::vector<std::string> h{"scan", "mu", "sigma2"};
  for (std::size_t k = 1; k <= d; ++k) h.push_back("phi_" + std::to_string(k));
  for (std::size_t k = 1; k <= d; ++k) h.push_back("gamma_" + std::to_string(k));
  return h;
}

inline std::string trace_csv(const Chain& chain) {
  const std::size_t d = chain.d();
  std::ostringstream out;
  const auto header = trace_header(d);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (std::size_t i = 0; i < chain.size(); ++i) {
    out << chain.scan[i] << ',' << format_double(chain.mu[i]) << ',' << format_double(chain.sigma2[i]);
    for (std::size_t k = 0; k < d; ++k) out << ',' << format_double(chain.phi[i](static_cast<Eigen::Index>(k)));
    for (std::size_t k = 0; k < d; ++k) out << ',' << static_cast<int>(chain.gamma[i][k]);
    out << '\n';
  }
  return out.str();
}

inline void export_trace(const Chain& chain, const std::string& path) {
  write_text_file(path, trace_csv(chain));
}

/// Reads draws back from a trace CSV (meta fields are left empty).
inline Chain import_trace(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.cols() < 3 || (t.cols() - 3) % 2 != 0)
    throw InvalidArgument(path + ": not a trace file (bad column count)");
  const std::size_t d = (t.cols() - 3) / 2;
  if (t.header != trace_header(d)) throw InvalidArgument(path + ": unexpected trace header");
  Chain chain;
  chain.meta.d = d;
  for (const auto& row : t.rows) {
    SamplerState s;
    s.mu = row[1];
    s.sigma2 = row[2];
    s.phi.resize(static_cast<Eigen::Index>(d));
    s.gamma.resize(d);
    for (std::size_t k = 0; k < d; ++k) {
      s.phi(static_cast<Eigen::Index>(k)) = row[3 + k];
      s.gamma[k] = row[3 + d + k] != 0.0 ? 1 : 0;
    }
    chain.push(static_cast<std::size_t>(row[0]), s);
  }
  return chain;
}

/// Rows of "lag,<series...>" for plotting the ACF of mu, sigma2 and each phi_k.
inline std::string acf_csv(const Chain& chain, std::size_t max_lag) {
  const std::size_t d = chain.d();
  std::vector<std::vector<double>> columns;
  std::vector<std::string> names{"lag", "mu", "sigma2"};
  auto add = [&](const std::vector<double>& s) {
    try {
      columns.push_back(autocorrelation(s, max_lag));
    } catch (const InvalidArgument&) {
      columns.emplace_back(max_lag + 1, std::nan(""));
    }
  };
  add(chain.mu);
  add(chain.sigma2);
  for (std::size_t k = 0; k < d; ++k) {
    std::vector<double> s(chain.size());
    for (std::size_t i = 0; i < chain.size(); ++i) s[i] = chain.phi[i](static_cast<Eigen::Index>(k));
    add(s);
    names.push_back("phi_" + std::to_string(k + 1));
  }
  std::ostringstream out;
  for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
  out << '\n';
  for (std::size_t lag = 0; lag <= max_lag; ++lag) {
    out << lag;
    for (const auto& c : columns) out << ',' << format_double(c[lag]);
    out << '\n';
  }
  return out.str();
}

}  // namespace ssgp
