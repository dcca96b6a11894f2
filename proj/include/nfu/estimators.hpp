#pragma once

// Quasi-randomisation estimators of a population total under RHG nonresponse
// adjustment: inverse-propensity Horvitz-Thompson, inverse-propensity GREG and
// calibrated imputation, each with its sampling (v1) and nonresponse (v2)
// variance estimates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "nfu/core.hpp"

namespace nfu {

enum class EstimatorKind { IpwHt, IpwGreg, CalImpute };

inline const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::IpwHt: return "IPW-HT";
    case EstimatorKind::IpwGreg: return "IPW-GREG";
    case EstimatorKind::CalImpute: return "CAL-IMPUTE";
  }
  return "?";
}

/// Weighting constant u_i of the spread-back term in calibrated imputation.
enum class ImputeWeighting { InverseVariance, WeightedInverseVariance };

struct EstimatorOptions {
  double max_condition = 1e12;
  /// Use g_i * e_i / pi_i instead of e_i / pi_i in the variance terms.
  bool g_weighted_residuals = false;
  std::vector<double> c_weights;  // per unit; empty means all 1
  std::vector<double> sigma2;     // per unit residual-variance model; empty means all 1
  ImputeWeighting u_choice = ImputeWeighting::InverseVariance;
  bool compute_v1 = true;
};

struct RegressionFit {
  Eigen::VectorXd coefficients;
  std::vector<double> c_weights;
  double condition = 0.0;
};

struct EstimateReport {
  EstimatorKind kind = EstimatorKind::IpwHt;
  double point = 0.0;
  double v1 = 0.0;
  double v2 = 0.0;
  std::vector<std::pair<std::string, double>> per_group_v2;  // table order
  std::vector<std::pair<std::string, double>> s2_by_group;   // table order

  [[nodiscard]] double total_variance() const { return v1 + v2; }
};

// ---------------------------------------------------------------------------
// Second-order inclusion probabilities
// ---------------------------------------------------------------------------

/// pi_ij - pi_i pi_j for units i and j of the dataset.
inline double delta_ij(const SampleDataset& data, std::size_t i, std::size_t j) {
  const auto& a = data.units.at(i);
  const auto& b = data.units.at(j);
  if (i == j) return a.pi * (1.0 - a.pi);
  if (const auto* srs = std::get_if<StratifiedSrs>(&data.design)) {
    if (a.design_stratum != b.design_stratum) return 0.0;
    const auto& st = srs->strata.at(a.design_stratum);
    const double N = static_cast<double>(st.N);
    const double n = static_cast<double>(st.n);
    const double pij = st.N > 1 ? (n * (n - 1.0)) / (N * (N - 1.0)) : 0.0;
    return pij - a.pi * b.pi;
  }
  const auto& pairs = std::get<ExplicitPairs>(data.design);
  const auto pij = pairs.get(a.unit_id, b.unit_id);
  if (!pij) throw InputError("no joint inclusion probability for units '" + a.unit_id + "' and '" + b.unit_id + "'");
  return *pij - a.pi * b.pi;
}

namespace detail {

/// Per-unit group lookup plus group-level rho-hat, checked against the table.
struct GroupIndex {
  std::vector<std::size_t> unit_group;
  std::vector<std::int64_t> n;
  std::vector<std::int64_t> m;
  std::vector<double> rho;

  GroupIndex(const SampleDataset& data, const RhgTable& table) {
    const std::size_t H = table.size();
    n.assign(H, 0);
    m.assign(H, 0);
    rho.assign(H, 0.0);
    unit_group.reserve(data.units.size());
    for (const auto& u : data.units) {
      const auto h = table.index_of(u.rhg_id);
      unit_group.push_back(h);
      ++n[h];
      if (u.delta) ++m[h];
    }
    for (std::size_t h = 0; h < H; ++h) {
      const auto& g = table[h];
      if (g.n != n[h] || g.m != m[h]) {
        throw InputError("RHG '" + g.id + "': table counts (n=" + std::to_string(g.n) + ", m=" + std::to_string(g.m) +
                         ") disagree with microdata (n=" + std::to_string(n[h]) + ", m=" + std::to_string(m[h]) + ")");
      }
      if (n[h] == 0) continue;
      if (m[h] < 2) {
        throw DegenerateGroupError("RHG '" + g.id + "' has " + std::to_string(m[h]) +
                                   " respondents; at least 2 are needed, merge it with an adjacent group");
      }
      rho[h] = static_cast<double>(m[h]) / static_cast<double>(n[h]);
    }
  }

  [[nodiscard]] double rho_of(std::size_t unit) const { return rho[unit_group[unit]]; }
};

/// Sample variance (divisor count - 1) of `values` over respondents of each group.
inline std::vector<double> respondent_variance(const SampleDataset& data, const GroupIndex& gi,
                                               const std::vector<double>& values) {
  const std::size_t H = gi.n.size();
  std::vector<double> mean(H, 0.0);
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    if (data.units[i].delta) mean[gi.unit_group[i]] += values[i];
  }
  for (std::size_t h = 0; h < H; ++h) {
    if (gi.m[h] > 0) mean[h] /= static_cast<double>(gi.m[h]);
  }
  std::vector<double> ss(H, 0.0);
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    if (!data.units[i].delta) continue;
    const double d = values[i] - mean[gi.unit_group[i]];
    ss[gi.unit_group[i]] += d * d;
  }
  for (std::size_t h = 0; h < H; ++h) ss[h] = gi.m[h] >= 2 ? ss[h] / static_cast<double>(gi.m[h] - 1) : 0.0;
  return ss;
}

inline void fill_v2(EstimateReport& rep, const RhgTable& table, const GroupIndex& gi, const std::vector<double>& s2) {
  rep.v2 = 0.0;
  rep.per_group_v2.clear();
  rep.s2_by_group.clear();
  for (std::size_t h = 0; h < table.size(); ++h) {
    double term = 0.0;
    if (gi.n[h] > 0) {
      const double n = static_cast<double>(gi.n[h]);
      term = n * n * (1.0 - gi.rho[h]) / static_cast<double>(gi.m[h]) * s2[h];
    }
    rep.per_group_v2.emplace_back(table[h].id, term);
    rep.s2_by_group.emplace_back(table[h].id, s2[h]);
    rep.v2 += term;
  }
}

/// Joint response probability of two units under the RHG cases.
inline double rho_pair(const GroupIndex& gi, std::size_t i, std::size_t j) {
  const auto hi = gi.unit_group[i];
  const auto hj = gi.unit_group[j];
  if (i == j) return gi.rho[hi];
  if (hi == hj) {
    const double m = static_cast<double>(gi.m[hi]);
    const double n = static_cast<double>(gi.n[hi]);
    return (m / n) * ((m - 1.0) / (n - 1.0));
  }
  return gi.rho[hi] * gi.rho[hj];
}

}  // namespace detail

/// Sampling-variance double sum  sum_i sum_j (Delta_ij / rho_ij) d_i v_i d_j v_j
/// over respondents, where `values` already holds v_i / pi_i. Quadratic in the
/// respondent count; works for every design.
inline double v1_double_sum(const SampleDataset& data, const RhgTable& table, const std::vector<double>& values) {
  const detail::GroupIndex gi(data, table);
  std::vector<std::size_t> resp;
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    if (data.units[i].delta) resp.push_back(i);
  }
  double total = 0.0;
  for (const auto i : resp) {
    double row = 0.0;
    for (const auto j : resp) row += delta_ij(data, i, j) / detail::rho_pair(gi, i, j) * values[j];
    total += row * values[i];
  }
  return total;
}

namespace detail {

/// Closed-form regrouping of the double sum for stratified SRS: Delta_ij is
/// constant for distinct units of one stratum and zero across strata.
inline double v1_stratified(const SampleDataset& data, const StratifiedSrs& srs, const GroupIndex& gi,
                            const std::vector<double>& values) {
  const std::size_t H = gi.n.size();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> cells;
  double diag = 0.0;
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    const auto& u = data.units[i];
    if (!u.delta) continue;
    const auto h = gi.unit_group[i];
    const double r = values[i];
    diag += u.pi * (1.0 - u.pi) / gi.rho[h] * r * r;
    auto& cell = cells[u.design_stratum];
    if (cell.first.empty()) {
      cell.first.assign(H, 0.0);
      cell.second.assign(H, 0.0);
    }
    cell.first[h] += r;
    cell.second[h] += r * r;
  }
  double off = 0.0;
  for (const auto& [name, cell] : cells) {
    const auto& st = srs.strata.at(name);
    if (st.N < 2) continue;
    const double N = static_cast<double>(st.N);
    const double n = static_cast<double>(st.n);
    const double pi = n / N;
    const double d = (n * (n - 1.0)) / (N * (N - 1.0)) - pi * pi;
    const auto& s1 = cell.first;
    const auto& s2 = cell.second;
    double within = 0.0;
    double scaled = 0.0;
    double scaled_sq = 0.0;
    for (std::size_t h = 0; h < H; ++h) {
      if (gi.m[h] == 0 || (s1[h] == 0.0 && s2[h] == 0.0)) continue;
      const double m = static_cast<double>(gi.m[h]);
      const double ng = static_cast<double>(gi.n[h]);
      const double rho_same = (m / ng) * ((m - 1.0) / (ng - 1.0));
      within += (s1[h] * s1[h] - s2[h]) / rho_same;
      scaled += s1[h] / gi.rho[h];
      scaled_sq += (s1[h] / gi.rho[h]) * (s1[h] / gi.rho[h]);
    }
    off += d * (within + scaled * scaled - scaled_sq);
  }
  return diag + off;
}

inline double v1_for(const SampleDataset& data, const RhgTable& table, const GroupIndex& gi,
                     const std::vector<double>& values) {
  if (const auto* srs = std::get_if<StratifiedSrs>(&data.design)) return v1_stratified(data, *srs, gi, values);
  return v1_double_sum(data, table, values);
}

inline std::vector<double> unit_constants(const std::vector<double>& given, std::size_t count, const char* what) {
  if (given.empty()) return std::vector<double>(count, 1.0);
  if (given.size() != count) throw InputError(std::string(what) + " must have one entry per unit");
  for (const double c : given) {
    if (!(c > 0.0) || !std::isfinite(c)) throw InputError(std::string(what) + " must be positive and finite");
  }
  return given;
}

/// Rank-revealing solve of  M b = rhs  with an explicit singularity check.
struct NormalSystem {
  Eigen::MatrixXd matrix;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;
  double condition = 0.0;

  NormalSystem(Eigen::MatrixXd m, double max_condition) : matrix(std::move(m)), qr(matrix) {
    const auto p = matrix.rows();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(matrix);
    const auto& sv = svd.singularValues();
    condition = (p == 0 || sv(p - 1) <= 0.0) ? std::numeric_limits<double>::infinity() : sv(0) / sv(p - 1);
    if (qr.rank() < p || !(condition <= max_condition)) {
      const auto perm = qr.colsPermutation().indices();
      std::string cols;
      for (auto r = std::min<Eigen::Index>(qr.rank(), p - 1); r < p; ++r) {
        if (!cols.empty()) cols += ", ";
        cols += "x" + std::to_string(perm(r) + 1);
      }
      throw NumericalError("auxiliary normal matrix is rank deficient (condition " + std::to_string(condition) +
                           "); dependent columns: " + cols);
    }
  }

  [[nodiscard]] Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return qr.solve(rhs); }
};

inline Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

/// The respondent regression shared by GREG and calibrated imputation.
struct GregCore {
  GroupIndex groups;
  std::vector<double> c;
  NormalSystem system;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd calibration_gap;  // T_x - sum_r (d / rho) x

  static Eigen::MatrixXd normal_matrix(const SampleDataset& data, const GroupIndex& gi, const std::vector<double>& c) {
    const auto p = static_cast<Eigen::Index>(data.aux_dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < data.units.size(); ++i) {
      const auto& u = data.units[i];
      if (!u.delta) continue;
      const auto x = as_vector(u.x);
      m.noalias() += (u.weight() / gi.rho_of(i) * c[i]) * x * x.transpose();
    }
    return m;
  }

  GregCore(const SampleDataset& data, const RhgTable& table, const EstimatorOptions& opt)
      : groups(data, table),
        c(unit_constants(opt.c_weights, data.units.size(), "c_weights")),
        system(normal_matrix(data, groups, c), opt.max_condition) {
    const auto p = static_cast<Eigen::Index>(data.aux_dim());
    Eigen::VectorXd xy = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd xr = Eigen::VectorXd::Zero(p);
    for (std::size_t i = 0; i < data.units.size(); ++i) {
      const auto& u = data.units[i];
      if (!u.delta) continue;
      const double a = u.weight() / groups.rho_of(i);
      xy += (a * c[i] * *u.y) * as_vector(u.x);
      xr += a * as_vector(u.x);
    }
    coefficients = system.solve(xy);
    calibration_gap = as_vector(data.tx) - xr;
  }

  [[nodiscard]] double fitted(const UnitRecord& u) const { return as_vector(u.x).dot(coefficients); }
};

inline void check_dataset(const SampleDataset& data, const RhgTable& table) {
  if (table.empty()) throw InputError("RHG table is empty");
  data.validate();
}

}  // namespace detail

/// IPW Horvitz-Thompson estimator  sum_h sum_i delta d y / rho_h.
inline EstimateReport t_hat_ipw(const SampleDataset& data, const RhgTable& table, const EstimatorOptions& opt = {}) {
  detail::check_dataset(data, table);
  const detail::GroupIndex gi(data, table);
  EstimateReport rep;
  rep.kind = EstimatorKind::IpwHt;
  std::vector<double> ytilde(data.units.size(), 0.0);
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    const auto& u = data.units[i];
    if (!u.delta) continue;
    ytilde[i] = *u.y / u.pi;
    rep.point += ytilde[i] / gi.rho_of(i);
  }
  detail::fill_v2(rep, table, gi, detail::respondent_variance(data, gi, ytilde));
  if (opt.compute_v1) rep.v1 = detail::v1_for(data, table, gi, ytilde);
  return rep;
}

/// Fits the respondent regression used by the GREG estimator.
inline RegressionFit greg_fit(const SampleDataset& data, const RhgTable& table, const EstimatorOptions& opt = {}) {
  detail::check_dataset(data, table);
  const detail::GregCore core(data, table, opt);
  return {core.coefficients, core.c, core.system.condition};
}

/// Calibration g-weights for every sample unit (nonrespondents included; only
/// respondents enter the estimator).
inline std::vector<double> greg_gweights(const SampleDataset& data, const RhgTable& table,
                                         const EstimatorOptions& opt = {}) {
  detail::check_dataset(data, table);
  const detail::GregCore core(data, table, opt);
  const Eigen::VectorXd lambda = core.system.solve(core.calibration_gap);
  std::vector<double> g(data.units.size());
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    g[i] = 1.0 + core.c[i] * detail::as_vector(data.units[i].x).dot(lambda);
  }
  return g;
}

/// IPW GREG estimator  sum_h sum_i delta d g y / rho_h.
inline EstimateReport t_hat_greg(const SampleDataset& data, const RhgTable& table, const EstimatorOptions& opt = {}) {
  detail::check_dataset(data, table);
  const detail::GregCore core(data, table, opt);
  const Eigen::VectorXd lambda = core.system.solve(core.calibration_gap);
  EstimateReport rep;
  rep.kind = EstimatorKind::IpwGreg;
  std::vector<double> etilde(data.units.size(), 0.0);
  for (std::size_t i = 0; i < data.units.size(); ++i) {
    const auto& u = data.units[i];
    if (!u.delta) continue;
    const double g = 1.0 + core.c[i] * detail::as_vector(u.x).dot(lambda);
    rep.point += u.weight() * g * *u.y / core.groups.rho_of(i);
    etilde[i] = (*u.y - core.fitted(u)) / u.pi;
    if (opt.g_weighted_residuals) etilde[i] *= g;
  }
  detail::fill_v2(rep, table, core.groups, detail::respondent_variance(data, core.groups, etilde));
  if (opt.compute_v1) rep.v1 = detail::v1_for(data, table, core.groups, etilde);
  return rep;
}

struct ImputationResult {
  EstimateReport report;
  std::vector<double> imputed;  // y* for nonrespondents, NaN for respondents
  std::vector<double> g;        // full-sample calibration weights
};

/// Calibrated imputation: nonrespondents receive the regression prediction plus
/// a share of the IPW-weighted respondent residual total, spread in proportion
/// to d g / u.
inline ImputationResult calibrated_imputation(const SampleDataset& data, const RhgTable& table,
                                              const EstimatorOptions& opt = {}) {
  detail::check_dataset(data, table);
  const detail::GregCore core(data, table, opt);
  const std::size_t count = data.units.size();
  const auto sigma2 = detail::unit_constants(opt.sigma2, count, "sigma2");
  const auto p = static_cast<Eigen::Index>(data.aux_dim());

  // g-weights calibrating the whole sample to T_x
  Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xs = Eigen::VectorXd::Zero(p);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& u = data.units[i];
    const auto x = detail::as_vector(u.x);
    ms.noalias() += (u.weight() * core.c[i]) * x * x.transpose();
    xs += u.weight() * x;
  }
  const detail::NormalSystem full(std::move(ms), opt.max_condition);
  const Eigen::VectorXd lambda = full.solve(detail::as_vector(data.tx) - xs);

  ImputationResult out;
  out.g.resize(count);
  out.imputed.assign(count, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> mu(count), dg(count), u_const(count);
  double spread_total = 0.0;
  double denom = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const auto& u = data.units[i];
    out.g[i] = 1.0 + core.c[i] * detail::as_vector(u.x).dot(lambda);
    mu[i] = core.fitted(u);
    dg[i] = u.weight() * out.g[i];
    u_const[i] = opt.u_choice == ImputeWeighting::InverseVariance ? 1.0 / sigma2[i] : dg[i] / sigma2[i];
    if (u.delta) {
      const double rho = core.groups.rho_of(i);
      spread_total += (1.0 - rho) / rho * dg[i] * (*u.y - mu[i]);
    } else {
      denom += dg[i] * dg[i] / u_const[i];
    }
  }

  auto& rep = out.report;
  rep.kind = EstimatorKind::CalImpute;
  const bool any_missing = std::any_of(data.units.begin(), data.units.end(), [](const auto& u) { return !u.delta; });
  for (std::size_t i = 0; i < count; ++i) {
    const auto& u = data.units[i];
    if (u.delta) {
      rep.point += dg[i] * *u.y;
    } else if (any_missing && denom != 0.0) {
      out.imputed[i] = mu[i] + dg[i] / u_const[i] / denom * spread_total;
      rep.point += dg[i] * out.imputed[i];
    } else {
      throw NumericalError("calibrated imputation: spread-back denominator is zero");
    }
  }

  std::vector<double> etilde(count, 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& u = data.units[i];
    if (!u.delta) continue;
    etilde[i] = (*u.y - mu[i]) / u.pi;
    if (opt.g_weighted_residuals) etilde[i] *= out.g[i];
  }
  detail::fill_v2(rep, table, core.groups, detail::respondent_variance(data, core.groups, etilde));
  if (!any_missing) {
    // nothing was imputed; every group has rho = 1
    for (auto& [id, v] : rep.per_group_v2) v = 0.0;
    rep.v2 = 0.0;
  }
  if (opt.compute_v1) rep.v1 = detail::v1_for(data, table, core.groups, etilde);
  return out;
}

inline EstimateReport t_hat_impute(const SampleDataset& data, const RhgTable& table, const EstimatorOptions& opt = {}) {
  return calibrated_imputation(data, table, opt).report;
}

inline EstimateReport estimate(EstimatorKind kind, const SampleDataset& data, const RhgTable& table,
                               const EstimatorOptions& opt = {}) {
  switch (kind) {
    case EstimatorKind::IpwHt: return t_hat_ipw(data, table, opt);
    case EstimatorKind::IpwGreg: return t_hat_greg(data, table, opt);
    case EstimatorKind::CalImpute: return t_hat_impute(data, table, opt);
  }
  throw InputError("unknown estimator");
}

}  // namespace nfu
