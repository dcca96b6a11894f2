#pragma once

// Command-line front end. `run` is the whole program; tools/nfu.cpp only
// forwards main() to it so tests can drive every subcommand in-process.
//
// Exit status: 0 success, 2 input or validation error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfu/allocator.hpp"
#include "nfu/core.hpp"
#include "nfu/estimators.hpp"
#include "nfu/io.hpp"
#include "nfu/propensity.hpp"
#include "nfu/simulator.hpp"

namespace nfu::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

enum class Format { Table, Csv, Json };

inline Format parse_format(const std::string& s) {
  if (s == "table") return Format::Table;
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw InputError("unknown format '" + s + "' (expected table, csv or json)");
}

namespace render {

inline std::string pad_left(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

inline std::string billions(double v) { return nfu::detail::fmt_fixed(v / 1e9, 2); }

inline std::string grouped_dollars(Money m) { return m.format().substr(1); }

inline std::string range_text(const RhgSummary& g) {
  if (!g.range) return "-";
  return "(" + nfu::detail::fmt_double(g.range->lo) + "," + nfu::detail::fmt_double(g.range->hi) + "]";
}

/// Layout of the optimal-allocation table: k, converts, group cost, group V2.
inline void plan_table(std::ostream& out, const AllocationPlan& p, const RhgTable& table, const std::string& title) {
  out << title << "\n";
  out << pad_right("RHG", 6) << pad_right("Score range", 14) << pad_left("k", 4) << pad_left("Converts", 11)
      << pad_left("Cost ($)", 12) << pad_left("V2 (1e9)", 11) << "\n";
  for (std::size_t h = 0; h < table.size(); ++h) {
    out << pad_right(table[h].id, 6) << pad_right(range_text(table[h]), 14) << pad_left(std::to_string(p.k[h]), 4)
        << pad_left(nfu::detail::fmt_fixed(p.expected_converts[h], 0), 11)
        << pad_left(grouped_dollars(Money::from_cents(p.group_cost_cents[h])), 12)
        << pad_left(billions(p.per_group_objective[h]), 11) << "\n";
  }
  out << pad_right("Total", 20) << pad_left("-", 4) << pad_left(nfu::detail::fmt_fixed(p.total_converts(), 0), 11)
      << pad_left(grouped_dollars(p.cost), 12) << pad_left(billions(p.objective), 11) << "\n";
  out << "Response rate: " << nfu::detail::fmt_fixed(100.0 * response_rate(table, p.expected_converts), 1) << "%\n";
}

/// Layout of the budget-sweep table.
inline void sweep_table(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << pad_left("Budget ($)", 12) << pad_left("V2 (1e9)", 11) << pad_left("Resp. (%)", 11)
      << pad_left("Actual ($)", 12) << pad_left("ROI (1e3/$)", 13) << "\n";
  for (const auto& r : rows) {
    out << pad_left(grouped_dollars(r.budget), 12) << pad_left(billions(r.plan.objective), 11)
        << pad_left(nfu::detail::fmt_fixed(100.0 * r.response_rate, 1), 11) << pad_left(grouped_dollars(r.plan.cost), 12)
        << pad_left(r.roi_thousands ? nfu::detail::fmt_fixed(*r.roi_thousands, 0) : "-", 13) << "\n";
  }
}

inline void estimate_table(std::ostream& out, const EstimateReport& r) {
  out << to_string(r.kind) << "\n";
  out << "  point  " << nfu::detail::fmt_double(r.point) << "\n";
  out << "  v1     " << nfu::detail::fmt_double(r.v1) << "\n";
  out << "  v2     " << nfu::detail::fmt_double(r.v2) << "\n";
  out << "  " << pad_right("rhg", 8) << pad_left("s2", 16) << pad_left("v2", 16) << "\n";
  for (std::size_t h = 0; h < r.per_group_v2.size(); ++h) {
    out << "  " << pad_right(r.per_group_v2[h].first, 8) << pad_left(nfu::detail::fmt_double(r.s2_by_group[h].second), 16)
        << pad_left(nfu::detail::fmt_double(r.per_group_v2[h].second), 16) << "\n";
  }
}

}  // namespace render

namespace detail {

struct Output {
  std::ostream* stream = nullptr;
  std::unique_ptr<std::ofstream> file;

  Output(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream = &fallback;
    } else {
      file = std::make_unique<std::ofstream>(path);
      if (!*file) throw InputError("cannot open output file '" + path + "'");
      stream = file.get();
    }
  }
  std::ostream& operator*() const { return *stream; }
};

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file '" + path + "'");
  return in;
}

inline RhgTable load_table(const std::string& path) {
  auto in = open_input(path);
  return read_rhg_table(in, path);
}

inline std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    const auto dots = part.find("..");
    try {
      if (dots != std::string::npos) {
        const auto lo = std::stoul(part.substr(0, dots));
        const auto hi = std::stoul(part.substr(dots + 2));
        if (lo > hi) throw InputError("empty k range '" + part + "'");
        for (auto k = lo; k <= hi; ++k) out.push_back(k);
      } else {
        out.push_back(std::stoul(part));
      }
    } catch (const std::logic_error&) {
      throw InputError("invalid k list '" + text + "'");
    }
  }
  if (out.empty()) throw InputError("empty k list");
  return out;
}

inline std::vector<double> parse_number_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw InputError(std::string("invalid ") + what + " list '" + text + "'");
    }
  }
  return out;
}

}  // namespace detail

struct CommonOptions {
  std::string input;
  std::string output;
  std::string format = "table";
  std::string model = "linear";
  std::string budget = "0";
  std::vector<std::string> budgets;
  int max_visits = 6;
  std::uint64_t seed = 0;
  bool seed_given = false;
};

inline int cmd_allocate(const CommonOptions& o, std::ostream& stdout_) {
  const auto table = detail::load_table(o.input);
  const auto model = parse_conversion_model(o.model);
  const auto fmt = parse_format(o.format);
  const auto plan = solve_exact({table, Money::parse(o.budget), o.max_visits, model});
  detail::Output out(o.output, stdout_);
  if (fmt == Format::Json) {
    *out << to_json(plan, table, model).dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    write_plan_csv(*out, plan, table);
  } else {
    render::plan_table(*out, plan, table,
                       "Optimal allocation, budget " + Money::parse(o.budget).format() + ", k0 = " +
                           std::to_string(o.max_visits) + ", " + to_string(model) + " model");
  }
  return kExitOk;
}

inline int cmd_baseline(const CommonOptions& o, std::ostream& stdout_) {
  const auto table = detail::load_table(o.input);
  const auto model = parse_conversion_model(o.model);
  const auto fmt = parse_format(o.format);
  const auto budget = Money::parse(o.budget);
  const auto uniform = baseline_uniform(table, budget, o.max_visits, model);
  const auto exact = solve_exact({table, budget, o.max_visits, model});
  detail::Output out(o.output, stdout_);
  if (fmt == Format::Json) {
    json doc = {{"uniform", to_json(uniform, table, model)}, {"optimal", to_json(exact, table, model)}};
    *out << doc.dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    write_plan_csv(*out, uniform, table);
  } else {
    render::plan_table(*out, uniform, table, "Uniform (common-practice) allocation, budget " + budget.format());
    *out << "\n";
    render::plan_table(*out, exact, table, "Optimal allocation, budget " + budget.format());
    *out << "\nUniform V2 exceeds optimal by "
         << nfu::detail::fmt_fixed(100.0 * (uniform.objective - exact.objective) / exact.objective, 1) << "%\n";
  }
  return kExitOk;
}

inline int cmd_sweep(const CommonOptions& o, std::ostream& stdout_) {
  const auto table = detail::load_table(o.input);
  const auto model = parse_conversion_model(o.model);
  const auto fmt = parse_format(o.format);
  if (o.budgets.empty()) throw InputError("sweep needs --budgets");
  std::vector<Money> budgets;
  for (const auto& b : o.budgets) budgets.push_back(Money::parse(b));
  const auto rows = sweep(table, budgets, o.max_visits, model);
  detail::Output out(o.output, stdout_);
  if (fmt == Format::Json) {
    *out << to_json(rows).dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    write_sweep_csv(*out, rows);
  } else {
    render::sweep_table(*out, rows);
  }
  return kExitOk;
}

struct EstimateOptions {
  std::string rhg;
  std::string strata;
  std::string pairs;
  std::string totals;
  std::string estimator = "all";
  std::string u_choice = "inverse-variance";
  bool g_residuals = false;
};

inline int cmd_estimate(const CommonOptions& o, const EstimateOptions& e, std::ostream& stdout_) {
  const auto fmt = parse_format(o.format);
  SampleDataset data;
  {
    auto in = detail::open_input(o.input);
    data.units = read_microdata(in, o.input);
  }
  data.tx = detail::parse_number_list(e.totals, "totals");
  if (!e.strata.empty() == !e.pairs.empty()) throw InputError("give exactly one of --strata or --pairs");
  if (!e.strata.empty()) {
    auto in = detail::open_input(e.strata);
    data.design = read_strata(in, e.strata);
  } else {
    auto in = detail::open_input(e.pairs);
    data.design = read_pairs(in, e.pairs);
  }
  const RhgTable table = e.rhg.empty() ? tabulate(data) : tabulate(detail::load_table(e.rhg), data);

  EstimatorOptions opt;
  opt.g_weighted_residuals = e.g_residuals;
  if (e.u_choice == "inverse-variance") {
    opt.u_choice = ImputeWeighting::InverseVariance;
  } else if (e.u_choice == "weighted-inverse-variance") {
    opt.u_choice = ImputeWeighting::WeightedInverseVariance;
  } else {
    throw InputError("unknown --u-choice '" + e.u_choice + "'");
  }
  std::vector<EstimatorKind> kinds;
  if (e.estimator == "all") {
    kinds = {EstimatorKind::IpwHt, EstimatorKind::IpwGreg, EstimatorKind::CalImpute};
  } else {
    kinds = {parse_estimator_kind(e.estimator)};
  }
  std::vector<EstimateReport> reports;
  for (const auto k : kinds) reports.push_back(estimate(k, data, table, opt));

  detail::Output out(o.output, stdout_);
  if (fmt == Format::Json) {
    json doc = json::array();
    for (const auto& r : reports) doc.push_back(to_json(r));
    *out << (reports.size() == 1 ? doc.front() : doc).dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    *out << "kind,point,v1,v2\n";
    for (const auto& r : reports) {
      *out << to_string(r.kind) << ',' << nfu::detail::fmt_double(r.point) << ',' << nfu::detail::fmt_double(r.v1) << ','
           << nfu::detail::fmt_double(r.v2) << '\n';
    }
  } else {
    for (const auto& r : reports) render::estimate_table(*out, r);
  }
  return kExitOk;
}

struct SimulateOptions {
  std::size_t threads = 0;  // 0 keeps the config value
  std::size_t replicates = 0;
  std::string replicates_csv;
  std::string compare;  // comma-separated strategies
};

inline int cmd_simulate(const CommonOptions& o, const SimulateOptions& s, std::ostream& stdout_) {
  const auto fmt = parse_format(o.format);
  json doc;
  {
    auto in = detail::open_input(o.input);
    try {
      doc = json::parse(in);
    } catch (const json::exception& e) {
      throw InputError(o.input + ": " + e.what());
    }
  }
  auto config = sim_config_from_json(doc);
  if (o.seed_given) config.seed = o.seed;
  if (s.threads > 0) config.threads = s.threads;
  if (s.replicates > 0) config.replicates = s.replicates;

  detail::Output out(o.output, stdout_);
  if (!s.compare.empty()) {
    std::vector<FollowupSpec> specs;
    std::stringstream ss(s.compare);
    std::string name;
    while (std::getline(ss, name, ',')) {
      auto spec = config.followup;
      spec.strategy = parse_strategy(name);
      spec.label = name;
      specs.push_back(spec);
    }
    const auto cmp = compare_strategies(config, specs);
    if (fmt == Format::Json) {
      *out << to_json(cmp).dump(2) << "\n";
    } else if (fmt == Format::Csv) {
      *out << "label,rank,mse,nonresponse_variance,mean_cost,mean_response_rate\n";
      for (const auto& r : cmp.strategies) {
        *out << r.label << ',' << r.rank << ',' << nfu::detail::fmt_double(r.mse) << ','
             << nfu::detail::fmt_double(r.nonresponse_variance) << ',' << nfu::detail::fmt_double(r.mean_cost) << ','
             << nfu::detail::fmt_double(r.mean_response_rate) << '\n';
      }
    } else {
      *out << "Strategy comparison (" << to_string(cmp.estimator) << ", " << config.replicates << " replicates)\n";
      for (const auto& r : cmp.strategies) {
        *out << "  " << render::pad_right(r.label, 10) << " rank " << r.rank << "  mse " << nfu::detail::fmt_double(r.mse)
             << "  nr-var " << nfu::detail::fmt_double(r.nonresponse_variance) << "  cost "
             << nfu::detail::fmt_fixed(r.mean_cost, 2) << "  rr " << nfu::detail::fmt_fixed(100.0 * r.mean_response_rate, 1)
             << "%\n";
      }
      if (cmp.red_flag) *out << "RED FLAG: " << cmp.red_flag_detail << "\n";
    }
    return kExitOk;
  }

  const auto report = run_replicates(config);
  if (!s.replicates_csv.empty()) {
    std::ofstream csv(s.replicates_csv);
    if (!csv) throw InputError("cannot open '" + s.replicates_csv + "'");
    write_replicates_csv(csv, report, config.estimators);
  }
  if (fmt == Format::Json) {
    *out << to_json(report).dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    write_replicates_csv(*out, report, config.estimators);
  } else {
    *out << "Simulation: " << report.replicates << " replicates, seed " << report.seed << ", strategy "
         << report.strategy << " (" << report.mechanism << ")\n";
    *out << "Population total " << nfu::detail::fmt_double(report.population_total) << "; response rate "
         << nfu::detail::fmt_fixed(100.0 * report.mean_response_rate_before, 1) << "% -> "
         << nfu::detail::fmt_fixed(100.0 * report.mean_response_rate_after, 1) << "%; mean cost $"
         << nfu::detail::fmt_fixed(report.mean_cost, 2) << "\n";
    for (const auto& e : report.estimators) {
      *out << "  " << render::pad_right(to_string(e.kind), 11) << " rel.bias " << nfu::detail::fmt_fixed(100.0 * e.relative_bias, 3)
           << "%  var " << nfu::detail::fmt_double(e.variance) << "  mse " << nfu::detail::fmt_double(e.mse) << "  mean v2 "
           << nfu::detail::fmt_double(e.mean_v2) << "  nr-var " << nfu::detail::fmt_double(e.nonresponse_variance) << "\n";
    }
  }
  return kExitOk;
}

struct PropensityOptions {
  std::string k_candidates = "1..12";
  std::size_t folds = 10;
  std::size_t k = 0;  // 0 means choose by cross validation
  std::string edges;
};

inline int cmd_propensity(const CommonOptions& o, const PropensityOptions& p, std::ostream& stdout_) {
  const auto fmt = parse_format(o.format);
  std::vector<ScoredUnit> units;
  {
    auto in = detail::open_input(o.input);
    units = read_scored_units(in, o.input);
  }
  std::vector<ScoredUnit> donors, targets;
  for (const auto& u : units) (u.score ? donors : targets).push_back(u);

  std::optional<CvReport> cv;
  std::size_t k = p.k;
  if (k == 0) {
    cv = kfold_cv_rmse(donors, detail::parse_k_list(p.k_candidates), p.folds, o.seed);
    k = cv->chosen_k;
  }
  const auto imputed = knn_impute(targets, donors, k);

  std::vector<double> scores;
  for (const auto& u : units) scores.push_back(u.score.value_or(0.0));
  for (std::size_t t = 0, i = 0; i < units.size(); ++i) {
    if (!units[i].score) scores[i] = imputed[t++];
  }
  const auto edges = p.edges.empty() ? default_edges() : detail::parse_number_list(p.edges, "edge");
  const auto bins = bin_rhg(scores, edges);

  detail::Output out(o.output, stdout_);
  if (fmt == Format::Json) {
    json doc;
    if (cv) doc["cv"] = to_json(*cv);
    doc["chosen_k"] = k;
    json imp = json::array();
    for (std::size_t t = 0; t < targets.size(); ++t) imp.push_back({{"unit_id", targets[t].unit_id}, {"score", imputed[t]}});
    doc["imputed"] = imp;
    json assign = json::array();
    for (std::size_t i = 0; i < units.size(); ++i) {
      assign.push_back({{"unit_id", units[i].unit_id},
                        {"score", scores[i]},
                        {"rhg_id", bins.table[bins.assignment[i]].id}});
    }
    doc["assignments"] = assign;
    json counts = json::array();
    for (const auto& g : bins.table) counts.push_back({{"rhg_id", g.id}, {"score_lo", g.range->lo}, {"score_hi", g.range->hi}, {"n", g.n}});
    doc["rhg_counts"] = counts;
    *out << doc.dump(2) << "\n";
  } else if (fmt == Format::Csv) {
    if (cv) {
      write_cv_csv(*out, *cv);
    } else {
      *out << "unit_id,score,rhg_id\n";
      for (std::size_t i = 0; i < units.size(); ++i) {
        *out << units[i].unit_id << ',' << nfu::detail::fmt_double(scores[i]) << ',' << bins.table[bins.assignment[i]].id << '\n';
      }
    }
  } else {
    if (cv) {
      *out << render::pad_left("k", 4) << render::pad_left("RMSE", 12) << render::pad_left("SE", 12) << "\n";
      for (const auto& e : cv->entries) {
        *out << render::pad_left(std::to_string(e.k), 4) << render::pad_left(nfu::detail::fmt_fixed(e.rmse, 6), 12)
             << render::pad_left(nfu::detail::fmt_fixed(e.se, 6), 12) << "\n";
      }
      *out << "rule: " << cv->rule << "\n";
    }
    *out << "chosen k: " << k << "\n";
    *out << "donors: " << donors.size() << ", imputed: " << targets.size() << "\n";
    for (const auto& g : bins.table) *out << "  RHG " << render::pad_right(g.id, 3) << render::pad_right(render::range_text(g), 12) << " n = " << g.n << "\n";
  }
  return kExitOk;
}

/// Entry point for the `nfu` program.
inline int run(int argc, const char* const* argv, std::ostream& stdout_ = std::cout, std::ostream& stderr_ = std::cerr) {
  CLI::App app{"Nonresponse follow-up allocation toolkit", "nfu"};
  app.require_subcommand(1, 1);

  CommonOptions common;
  EstimateOptions est;
  SimulateOptions sim;
  PropensityOptions prop;

  auto add_common = [&](CLI::App* sub, bool with_budget) {
    sub->add_option("--input,-i", common.input, "Input file")->required();
    sub->add_option("--output,-o", common.output, "Output file (default: standard output)");
    sub->add_option("--format,-f", common.format, "table, csv or json")->check(CLI::IsMember({"table", "csv", "json"}));
    if (with_budget) {
      sub->add_option("--model", common.model, "Conversion model: linear or geometric")
          ->check(CLI::IsMember({"linear", "geometric"}));
      sub->add_option("--max-visits", common.max_visits, "Maximum visits per nonrespondent (k0)")
          ->check(CLI::PositiveNumber);
    }
  };

  auto* allocate = app.add_subcommand("allocate", "Optimal follow-up allocation for one budget");
  add_common(allocate, true);
  allocate->add_option("--budget", common.budget, "Follow-up budget, e.g. 30000 or $30,000")->required();

  auto* baseline = app.add_subcommand("baseline", "Uniform common-practice allocation next to the optimum");
  add_common(baseline, true);
  baseline->add_option("--budget", common.budget, "Follow-up budget")->required();

  auto* sweep_cmd = app.add_subcommand("sweep", "Optimal allocation over a list of budgets");
  add_common(sweep_cmd, true);
  sweep_cmd->add_option("--budgets", common.budgets, "Budgets, space separated")->required()->expected(1, -1);

  auto* estimate_cmd = app.add_subcommand("estimate", "Point and variance estimates from microdata");
  add_common(estimate_cmd, false);
  estimate_cmd->add_option("--rhg", est.rhg, "RHG summary CSV (optional; groups are taken from the microdata)");
  estimate_cmd->add_option("--strata", est.strata, "Stratified SRS design CSV: stratum,N,n");
  estimate_cmd->add_option("--pairs", est.pairs, "Joint inclusion probabilities CSV: unit_i,unit_j,pi_ij");
  estimate_cmd->add_option("--totals", est.totals, "Population totals of x1..xp, comma separated")->required();
  estimate_cmd->add_option("--estimator", est.estimator, "ipw, greg, impute or all")
      ->check(CLI::IsMember({"ipw", "greg", "impute", "all"}));
  estimate_cmd->add_option("--u-choice", est.u_choice, "inverse-variance or weighted-inverse-variance");
  estimate_cmd->add_flag("--g-residuals", est.g_residuals, "Multiply residuals by g in the variance terms");

  auto* simulate = app.add_subcommand("simulate", "Monte Carlo validation from a JSON config");
  add_common(simulate, false);
  simulate->add_option("--seed", common.seed, "Override the master seed");
  simulate->add_option("--threads", sim.threads, "Worker threads");
  simulate->add_option("--replicates", sim.replicates, "Override the replicate count");
  simulate->add_option("--replicates-csv", sim.replicates_csv, "Write per-replicate estimates to this CSV");
  simulate->add_option("--compare", sim.compare, "Compare strategies, e.g. optimal,uniform");

  auto* propensity = app.add_subcommand("propensity", "kNN score imputation, CV choice of k and RHG binning");
  add_common(propensity, false);
  propensity->add_option("--seed", common.seed, "Fold assignment seed");
  propensity->add_option("--k-candidates", prop.k_candidates, "Candidate k values, e.g. 1..12");
  propensity->add_option("--folds", prop.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
  propensity->add_option("--k", prop.k, "Use this k instead of cross validation");
  propensity->add_option("--edges", prop.edges, "Bin edges, comma separated (default deciles)");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    const auto subs = app.get_subcommands();
    stdout_ << (subs.empty() ? app.help() : subs.front()->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    stdout_ << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kExitInput;
  }
  common.seed_given = simulate->count("--seed") > 0;

  try {
    if (allocate->parsed()) return cmd_allocate(common, stdout_);
    if (baseline->parsed()) return cmd_baseline(common, stdout_);
    if (sweep_cmd->parsed()) return cmd_sweep(common, stdout_);
    if (estimate_cmd->parsed()) return cmd_estimate(common, est, stdout_);
    if (simulate->parsed()) return cmd_simulate(common, sim, stdout_);
    if (propensity->parsed()) return cmd_propensity(common, prop, stdout_);
  } catch (const InputError& e) {
    stderr_ << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    stderr_ << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitInput;
}

}  // namespace nfu::cli
