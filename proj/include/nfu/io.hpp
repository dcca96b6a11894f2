#pragma once

// File formats: CSV inputs (RHG summaries, microdata, design files, scored
// units), CSV/JSON outputs for plans, sweeps, estimates and CV reports, and the
// JSON simulation config.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nfu/allocator.hpp"
#include "nfu/core.hpp"
#include "nfu/estimators.hpp"
#include "nfu/propensity.hpp"
#include "nfu/simulator.hpp"

namespace nfu {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// CSV reading
// ---------------------------------------------------------------------------

struct CsvDocument {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line;  // 1-based line number of each row

  [[nodiscard]] std::optional<std::size_t> column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }

  [[nodiscard]] std::size_t require(std::string_view name) const {
    if (auto c = column(name)) return *c;
    throw InputError(source + ": missing required column '" + std::string(name) + "'");
  }

  [[noreturn]] void fail(std::size_t row, const std::string& what) const {
    throw InputError(source + ":" + std::to_string(line[row]) + ": " + what);
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& text) {
  std::vector<std::string> out;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::string(trim(field)));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(std::string(trim(field)));
  return out;
}

}  // namespace detail

inline CsvDocument read_csv(std::istream& in, std::string source = "<input>") {
  CsvDocument doc;
  doc.source = std::move(source);
  std::string text;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++lineno;
    if (lineno == 1 && text.rfind("\xEF\xBB\xBF", 0) == 0) text.erase(0, 3);
    if (detail::trim(text).empty()) continue;
    auto fields = detail::split_csv_line(text);
    if (!have_header) {
      doc.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != doc.header.size()) {
      throw InputError(doc.source + ":" + std::to_string(lineno) + ": expected " + std::to_string(doc.header.size()) +
                       " fields, found " + std::to_string(fields.size()));
    }
    doc.rows.push_back(std::move(fields));
    doc.line.push_back(lineno);
  }
  if (!have_header) throw InputError(doc.source + ": empty file, a header row is required");
  return doc;
}

namespace detail {

inline double parse_double(const CsvDocument& doc, std::size_t row, const std::string& field, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size() || !std::isfinite(v)) throw std::invalid_argument(field);
    return v;
  } catch (const std::logic_error&) {
    doc.fail(row, std::string("invalid ") + what + " '" + field + "'");
  }
}

inline std::int64_t parse_int(const CsvDocument& doc, std::size_t row, const std::string& field, const char* what) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::logic_error&) {
    doc.fail(row, std::string("invalid ") + what + " '" + field + "'");
  }
}

/// Columns named prefix1, prefix2, ... in order.
inline std::vector<std::size_t> numbered_columns(const CsvDocument& doc, const std::string& prefix) {
  std::vector<std::size_t> cols;
  for (std::size_t j = 1;; ++j) {
    auto c = doc.column(prefix + std::to_string(j));
    if (!c) break;
    cols.push_back(*c);
  }
  return cols;
}

/// Shortest decimal form that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string fmt_fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

/// Decimal dollars without grouping, e.g. 19640.00.
inline std::string plain_dollars(Money m) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(m.cents() / 100),
                static_cast<long long>(m.cents() % 100));
  return buf;
}

}  // namespace detail

/// rhg_id,score_lo,score_hi,n,m,unit_cost,s2
inline RhgTable read_rhg_table(std::istream& in, const std::string& source = "<rhg>") {
  const auto doc = read_csv(in, source);
  const auto c_id = doc.require("rhg_id");
  const auto c_lo = doc.require("score_lo");
  const auto c_hi = doc.require("score_hi");
  const auto c_n = doc.require("n");
  const auto c_m = doc.require("m");
  const auto c_cost = doc.require("unit_cost");
  const auto c_s2 = doc.require("s2");
  std::vector<RhgSummary> groups;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& f = doc.rows[r];
    RhgSummary g;
    g.id = f[c_id];
    if (!f[c_lo].empty() || !f[c_hi].empty()) {
      g.range = ScoreRange{detail::parse_double(doc, r, f[c_lo], "score_lo"),
                           detail::parse_double(doc, r, f[c_hi], "score_hi")};
    }
    g.n = detail::parse_int(doc, r, f[c_n], "n");
    g.m = detail::parse_int(doc, r, f[c_m], "m");
    try {
      g.unit_cost = Money::parse(f[c_cost]);
    } catch (const InputError& e) {
      doc.fail(r, e.what());
    }
    g.s2 = detail::parse_double(doc, r, f[c_s2], "s2");
    try {
      g.validate();
    } catch (const InputError& e) {
      doc.fail(r, e.what());
    }
    groups.push_back(std::move(g));
  }
  if (groups.empty()) throw InputError(source + ": no RHG rows");
  return RhgTable(std::move(groups));
}

inline void write_rhg_table(std::ostream& out, const RhgTable& table) {
  out << "rhg_id,score_lo,score_hi,n,m,unit_cost,s2\n";
  for (const auto& g : table) {
    out << g.id << ',' << (g.range ? detail::fmt_double(g.range->lo) : "") << ','
        << (g.range ? detail::fmt_double(g.range->hi) : "") << ',' << g.n << ',' << g.m << ','
        << detail::plain_dollars(g.unit_cost) << ',' << detail::fmt_double(g.s2) << '\n';
  }
}

/// unit_id,design_stratum,rhg_id,pi,delta,y,x1..xp
inline std::vector<UnitRecord> read_microdata(std::istream& in, const std::string& source = "<microdata>") {
  const auto doc = read_csv(in, source);
  const auto c_id = doc.require("unit_id");
  const auto c_st = doc.require("design_stratum");
  const auto c_rhg = doc.require("rhg_id");
  const auto c_pi = doc.require("pi");
  const auto c_delta = doc.require("delta");
  const auto c_y = doc.require("y");
  const auto xs = detail::numbered_columns(doc, "x");
  if (xs.empty()) throw InputError(source + ": missing auxiliary columns x1..xp");
  std::vector<UnitRecord> units;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& f = doc.rows[r];
    UnitRecord u;
    u.unit_id = f[c_id];
    u.design_stratum = f[c_st];
    u.rhg_id = f[c_rhg];
    u.pi = detail::parse_double(doc, r, f[c_pi], "pi");
    if (f[c_delta] == "1") {
      u.delta = true;
    } else if (f[c_delta] != "0") {
      doc.fail(r, "delta must be 0 or 1");
    }
    if (!f[c_y].empty()) u.y = detail::parse_double(doc, r, f[c_y], "y");
    if (u.delta && !u.y) doc.fail(r, "respondent without a y value");
    for (const auto c : xs) u.x.push_back(detail::parse_double(doc, r, f[c], "auxiliary value"));
    units.push_back(std::move(u));
  }
  return units;
}

/// stratum,N,n
inline StratifiedSrs read_strata(std::istream& in, const std::string& source = "<strata>") {
  const auto doc = read_csv(in, source);
  const auto c_st = doc.require("stratum");
  const auto c_N = doc.require("N");
  const auto c_n = doc.require("n");
  StratifiedSrs srs;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& f = doc.rows[r];
    StratifiedSrs::Stratum st{detail::parse_int(doc, r, f[c_N], "N"), detail::parse_int(doc, r, f[c_n], "n")};
    if (st.n < 1 || st.n > st.N) doc.fail(r, "need 1 <= n <= N");
    srs.strata[f[c_st]] = st;
  }
  return srs;
}

/// unit_i,unit_j,pi_ij
inline ExplicitPairs read_pairs(std::istream& in, const std::string& source = "<pairs>") {
  const auto doc = read_csv(in, source);
  const auto c_i = doc.require("unit_i");
  const auto c_j = doc.require("unit_j");
  const auto c_p = doc.require("pi_ij");
  ExplicitPairs pairs;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& f = doc.rows[r];
    pairs.set(f[c_i], f[c_j], detail::parse_double(doc, r, f[c_p], "pi_ij"));
  }
  return pairs;
}

/// unit_id,score,cat1..catq (score empty for units to impute)
inline std::vector<ScoredUnit> read_scored_units(std::istream& in, const std::string& source = "<scores>") {
  const auto doc = read_csv(in, source);
  const auto c_id = doc.require("unit_id");
  const auto c_score = doc.require("score");
  const auto cats = detail::numbered_columns(doc, "cat");
  if (cats.empty()) throw InputError(source + ": missing categorical columns cat1..catq");
  std::vector<ScoredUnit> out;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& f = doc.rows[r];
    ScoredUnit u;
    u.unit_id = f[c_id];
    if (!f[c_score].empty()) {
      u.score = detail::parse_double(doc, r, f[c_score], "score");
      if (!(*u.score > 0.0 && *u.score <= 1.0)) doc.fail(r, "score must lie in (0, 1]");
    }
    for (const auto c : cats) u.cat.push_back(f[c]);
    out.push_back(std::move(u));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Outputs
// ---------------------------------------------------------------------------

inline json to_json(const EstimateReport& r) {
  json pg = json::object();
  for (const auto& [id, v] : r.per_group_v2) pg[id] = v;
  json s2 = json::object();
  for (const auto& [id, v] : r.s2_by_group) s2[id] = v;
  return {{"kind", to_string(r.kind)}, {"point", r.point}, {"v1", r.v1},
          {"v2", r.v2},                {"per_group_v2", pg}, {"s2_by_group", s2}};
}

inline json to_json(const AllocationPlan& p, const RhgTable& table, ConversionModel model) {
  json groups = json::array();
  for (std::size_t h = 0; h < table.size(); ++h) {
    groups.push_back({{"rhg_id", table[h].id},
                      {"k", p.k[h]},
                      {"expected_converts", p.expected_converts[h]},
                      {"group_cost", static_cast<double>(p.group_cost_cents[h]) / 100.0},
                      {"group_v2", p.per_group_objective[h]}});
  }
  return {{"model", to_string(model)},
          {"groups", groups},
          {"total_cost", p.cost.dollars()},
          {"total_converts", p.total_converts()},
          {"objective", p.objective},
          {"response_rate", response_rate(table, p.expected_converts)}};
}

inline void write_plan_csv(std::ostream& out, const AllocationPlan& p, const RhgTable& table) {
  out << "rhg_id,k,expected_converts,group_cost,group_v2\n";
  for (std::size_t h = 0; h < table.size(); ++h) {
    out << table[h].id << ',' << p.k[h] << ',' << detail::fmt_double(p.expected_converts[h]) << ','
        << detail::plain_dollars(Money::from_cents(p.group_cost_cents[h])) << ','
        << detail::fmt_double(p.per_group_objective[h]) << '\n';
  }
}

inline json to_json(const std::vector<SweepRow>& rows) {
  json arr = json::array();
  for (const auto& r : rows) {
    json row = {{"budget", r.budget.dollars()},
                {"v2", r.plan.objective},
                {"response_rate", r.response_rate},
                {"actual_cost", r.plan.cost.dollars()},
                {"roi_per_dollar", nullptr},
                {"k", r.plan.k}};
    if (r.roi_thousands) row["roi_per_dollar"] = *r.roi_thousands;
    arr.push_back(row);
  }
  return {{"roi_units", "1e3 variance units per dollar"}, {"rows", arr}};
}

struct SweepRecord {
  double budget = 0.0;
  double v2 = 0.0;
  double response_rate = 0.0;
  double actual_cost = 0.0;
  std::optional<double> roi;
  std::vector<int> k;
};

/// Reads back the sweep JSON document.
inline std::vector<SweepRecord> sweep_from_json(const json& doc) {
  std::vector<SweepRecord> out;
  try {
    for (const auto& row : doc.at("rows")) {
      SweepRecord r;
      r.budget = row.at("budget").get<double>();
      r.v2 = row.at("v2").get<double>();
      r.response_rate = row.at("response_rate").get<double>();
      r.actual_cost = row.at("actual_cost").get<double>();
      if (!row.at("roi_per_dollar").is_null()) r.roi = row.at("roi_per_dollar").get<double>();
      r.k = row.at("k").get<std::vector<int>>();
      out.push_back(std::move(r));
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed sweep document: ") + e.what());
  }
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "budget,v2,response_rate,actual_cost,roi_per_dollar\n";
  for (const auto& r : rows) {
    out << detail::plain_dollars(r.budget) << ',' << detail::fmt_double(r.plan.objective) << ','
        << detail::fmt_double(r.response_rate) << ',' << detail::plain_dollars(r.plan.cost) << ','
        << (r.roi_thousands ? detail::fmt_double(*r.roi_thousands) : "") << '\n';
  }
}

inline json to_json(const CvReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"k", e.k}, {"rmse", e.rmse}, {"se", e.se}, {"fold_rmse", e.fold_rmse}});
  }
  return {{"folds", r.folds}, {"seed", r.seed}, {"rule", r.rule}, {"chosen_k", r.chosen_k}, {"entries", entries}};
}

inline void write_cv_csv(std::ostream& out, const CvReport& r) {
  out << "k,rmse\n";
  for (const auto& e : r.entries) out << e.k << ',' << detail::fmt_double(e.rmse) << '\n';
}

inline json to_json(const SimReport& r) {
  json est = json::array();
  for (const auto& s : r.estimators) {
    est.push_back({{"kind", to_string(s.kind)},
                   {"mean", s.mean},
                   {"relative_bias", s.relative_bias},
                   {"variance", s.variance},
                   {"mse", s.mse},
                   {"mc_se", s.mc_se},
                   {"mean_v1", s.mean_v1},
                   {"mean_v2", s.mean_v2},
                   {"nonresponse_variance", s.nonresponse_variance}});
  }
  return {{"seed", r.seed},
          {"replicates", r.replicates},
          {"strategy", r.strategy},
          {"mechanism", r.mechanism},
          {"population_total", r.population_total},
          {"mean_cost", r.mean_cost},
          {"mean_response_rate_before", r.mean_response_rate_before},
          {"mean_response_rate_after", r.mean_response_rate_after},
          {"estimators", est}};
}

inline json to_json(const StrategyComparison& c) {
  json rows = json::array();
  for (const auto& s : c.strategies) {
    rows.push_back({{"label", s.label},
                    {"rank", s.rank},
                    {"mse", s.mse},
                    {"nonresponse_variance", s.nonresponse_variance},
                    {"mean_cost", s.mean_cost},
                    {"mean_response_rate", s.mean_response_rate},
                    {"mse_diff_vs_first", s.mse_diff_vs_first},
                    {"mse_diff_se_vs_first", s.mse_diff_se_vs_first}});
  }
  return {{"estimator", to_string(c.estimator)},
          {"strategies", rows},
          {"red_flag", c.red_flag},
          {"red_flag_detail", c.red_flag_detail}};
}

/// One row per (replicate, estimator).
inline void write_replicates_csv(std::ostream& out, const SimReport& r, const std::vector<EstimatorKind>& kinds) {
  out << "replicate,seed,estimator,point,full_point,v1,v2,sampled,respondents_before,respondents_after,cost\n";
  for (const auto& rec : r.records) {
    for (std::size_t e = 0; e < rec.estimates.size(); ++e) {
      const auto& est = rec.estimates[e];
      out << rec.index << ',' << rec.seed << ',' << to_string(kinds[e]) << ',' << detail::fmt_double(est.point) << ','
          << detail::fmt_double(est.full_point) << ',' << detail::fmt_double(est.v1) << ','
          << detail::fmt_double(est.v2) << ',' << rec.sampled << ',' << rec.respondents_before << ','
          << rec.respondents_after << ',' << detail::plain_dollars(rec.cost) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Simulation config
// ---------------------------------------------------------------------------

inline EstimatorKind parse_estimator_kind(std::string_view s) {
  if (s == "IPW-HT" || s == "ipw") return EstimatorKind::IpwHt;
  if (s == "IPW-GREG" || s == "greg") return EstimatorKind::IpwGreg;
  if (s == "CAL-IMPUTE" || s == "impute") return EstimatorKind::CalImpute;
  throw InputError("unknown estimator '" + std::string(s) + "' (expected ipw, greg or impute)");
}

inline ConversionMechanism parse_mechanism(std::string_view s) {
  if (s == "per-visit-bernoulli") return ConversionMechanism::PerVisitBernoulli;
  if (s == "single-draw-linear") return ConversionMechanism::SingleDrawLinear;
  throw InputError("unknown conversion mechanism '" + std::string(s) + "'");
}

inline FollowupStrategy parse_strategy(std::string_view s) {
  if (s == "none") return FollowupStrategy::None;
  if (s == "plan") return FollowupStrategy::FixedPlan;
  if (s == "optimal") return FollowupStrategy::Optimal;
  if (s == "uniform") return FollowupStrategy::Uniform;
  throw InputError("unknown follow-up strategy '" + std::string(s) + "'");
}

namespace detail {

inline Money money_from_json(const json& v) {
  if (v.is_string()) return Money::parse(v.get<std::string>());
  if (v.is_number_integer()) return Money::from_dollars(v.get<std::int64_t>());
  if (v.is_number()) return Money::from_cents(std::llround(v.get<double>() * 100.0));
  throw InputError("money values must be numbers or strings");
}

}  // namespace detail

inline FollowupSpec followup_from_json(const json& j) {
  FollowupSpec f;
  f.strategy = parse_strategy(j.value("strategy", "none"));
  if (j.contains("plan")) f.plan = j.at("plan").get<Visits>();
  if (j.contains("budget")) f.budget = detail::money_from_json(j.at("budget"));
  f.max_visits = j.value("max_visits", 6);
  f.model = parse_conversion_model(j.value("model", "linear"));
  f.mechanism = parse_mechanism(j.value("mechanism", "single-draw-linear"));
  f.planning_estimator = parse_estimator_kind(j.value("planning_estimator", "IPW-GREG"));
  f.label = j.value("label", "");
  return f;
}

/// Parses and validates a simulation config; see docs/sim_config.md.
inline SimConfig sim_config_from_json(const json& j) {
  SimConfig c;
  try {
    for (const auto& s : j.at("strata")) {
      c.strata.push_back({s.at("name").get<std::string>(), s.at("N").get<std::int64_t>(), s.at("n").get<std::int64_t>(),
                          s.value("effect", 0.0)});
    }
    for (const auto& v : j.at("covariates")) c.covariates.push_back({v.value("mean", 0.0), v.value("sd", 1.0)});
    c.beta = j.at("beta").get<std::vector<double>>();
    c.sigma = j.value("sigma", 1.0);
    c.rhg_covariate = j.value("rhg_covariate", std::size_t{0});
    for (const auto& r : j.at("rhgs")) {
      SimConfig::Rhg g;
      g.id = r.at("id").get<std::string>();
      g.share = r.at("share").get<double>();
      g.rho = r.at("rho").get<double>();
      g.noise_scale = r.value("noise_scale", 1.0);
      if (r.contains("unit_cost")) g.unit_cost = detail::money_from_json(r.at("unit_cost"));
      c.rhgs.push_back(std::move(g));
    }
    if (j.contains("followup")) c.followup = followup_from_json(j.at("followup"));
    if (j.contains("estimators")) {
      c.estimators.clear();
      for (const auto& e : j.at("estimators")) c.estimators.push_back(parse_estimator_kind(e.get<std::string>()));
    }
    c.replicates = j.value("replicates", std::size_t{1});
    c.seed = j.value("seed", std::uint64_t{1});
    c.threads = j.value("threads", std::size_t{1});
    c.compute_v1 = j.value("compute_v1", true);
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed simulation config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace nfu
