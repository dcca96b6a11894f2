#pragma once

// Monte Carlo harness for the full survey lifecycle: a fixed synthetic
// population, stratified SRS, missing-at-random response within RHGs, follow-up
// visits, and estimation with the RHG-adjusted estimators.
//
// Every replicate draws from its own generator seeded by a hash of (master
// seed, replicate index), and results are aggregated in replicate order, so a
// report does not depend on how many worker threads produced it.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "nfu/allocator.hpp"
#include "nfu/core.hpp"
#include "nfu/estimators.hpp"

namespace nfu {

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of an independent stream for (master seed, replicate index, purpose).
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index, std::uint64_t stream = 0) {
  return splitmix64(splitmix64(master ^ 0x5851f42d4c957f2dULL) ^ splitmix64(index * 0x2545f4914f6cdd1dULL + stream));
}

/// mt19937_64 with portable uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Box-Muller; the second variate is cached.
  double normal() {
    if (spare_) {
      const double v = *spare_;
      spare_.reset();
      return v;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    spare_ = r * std::sin(kTwoPi * u2);
    return r * std::cos(kTwoPi * u2);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound) {
    // Lemire's nearly-divisionless method
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_;
};

/// Sum with Neumaier compensation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class ConversionMechanism { PerVisitBernoulli, SingleDrawLinear };

inline const char* to_string(ConversionMechanism m) {
  return m == ConversionMechanism::PerVisitBernoulli ? "per-visit-bernoulli" : "single-draw-linear";
}

enum class FollowupStrategy { None, FixedPlan, Optimal, Uniform };

inline const char* to_string(FollowupStrategy s) {
  switch (s) {
    case FollowupStrategy::None: return "none";
    case FollowupStrategy::FixedPlan: return "plan";
    case FollowupStrategy::Optimal: return "optimal";
    case FollowupStrategy::Uniform: return "uniform";
  }
  return "?";
}

struct FollowupSpec {
  FollowupStrategy strategy = FollowupStrategy::None;
  Visits plan;  // FixedPlan: one entry per RHG
  Money budget;
  int max_visits = 6;
  ConversionModel model = ConversionModel::LinearCapped;  // used by the planners
  ConversionMechanism mechanism = ConversionMechanism::SingleDrawLinear;
  EstimatorKind planning_estimator = EstimatorKind::IpwGreg;  // source of S2 for planning
  std::string label;  // defaults to the strategy name
};

struct SimConfig {
  struct Stratum {
    std::string name;
    std::int64_t N = 0;
    std::int64_t n = 0;
    double effect = 0.0;  // stratum intercept of the outcome model
  };
  struct Covariate {
    double mean = 0.0;
    double sd = 1.0;
  };
  struct Rhg {
    std::string id;
    double share = 0.0;  // population fraction, assigned by covariate rank
    double rho = 1.0;    // true response propensity
    double noise_scale = 1.0;
    Money unit_cost = Money::from_dollars(20);
  };

  std::vector<Stratum> strata;
  std::vector<Covariate> covariates;
  std::vector<double> beta;  // one per covariate
  double sigma = 1.0;
  std::size_t rhg_covariate = 0;
  std::vector<Rhg> rhgs;
  FollowupSpec followup;
  std::vector<EstimatorKind> estimators{EstimatorKind::IpwHt, EstimatorKind::IpwGreg};
  std::size_t replicates = 1;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  bool compute_v1 = true;

  void validate() const {
    if (strata.empty()) throw InputError("simulation needs at least one stratum");
    for (const auto& s : strata) {
      if (s.N < 1) throw InputError("stratum '" + s.name + "': N must be positive");
      if (s.n < 1 || s.n > s.N) throw InputError("stratum '" + s.name + "': need 1 <= n <= N");
    }
    if (covariates.empty()) throw InputError("simulation needs at least one covariate");
    if (beta.size() != covariates.size()) throw InputError("beta must have one entry per covariate");
    if (rhg_covariate >= covariates.size()) throw InputError("rhg_covariate out of range");
    if (!(sigma >= 0.0)) throw InputError("sigma must be non-negative");
    if (rhgs.empty()) throw InputError("simulation needs at least one RHG");
    double share = 0.0;
    for (const auto& r : rhgs) {
      if (!(r.rho > 0.0 && r.rho <= 1.0)) throw InputError("RHG '" + r.id + "': rho must lie in (0, 1]");
      if (!(r.share > 0.0)) throw InputError("RHG '" + r.id + "': share must be positive");
      share += r.share;
    }
    if (std::abs(share - 1.0) > 1e-9) throw InputError("RHG shares must sum to 1");
    if (replicates < 1) throw InputError("replicates must be at least 1");
    if (followup.strategy == FollowupStrategy::FixedPlan && followup.plan.size() != rhgs.size()) {
      throw InputError("follow-up plan must have one entry per RHG");
    }
    if (followup.max_visits < 1) throw InputError("max_visits must be at least 1");
    if (estimators.empty()) throw InputError("simulation needs at least one estimator");
  }

  [[nodiscard]] std::size_t aux_dim() const { return strata.size() + covariates.size(); }
};

// ---------------------------------------------------------------------------
// Population and sampling
// ---------------------------------------------------------------------------

struct Population {
  std::vector<UnitRecord> units;  // y always present; pi and delta unset
  std::vector<double> tx;
  double total = 0.0;
  std::vector<std::vector<std::size_t>> stratum_members;
  RhgTable rhg_template;  // ids, unit costs; counts zero
  std::vector<double> rho;
};

/// Builds the finite population. Auxiliary vector: one indicator per stratum
/// followed by the covariates. The outcome is the stratum effect plus beta'z
/// plus noise scaled by the unit's RHG.
inline Population generate_population(const SimConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(derive_seed(seed, 0, 0xb0b));
  Population pop;
  const std::size_t S = config.strata.size();
  const std::size_t q = config.covariates.size();
  pop.stratum_members.resize(S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& st = config.strata[s];
    for (std::int64_t i = 0; i < st.N; ++i) {
      UnitRecord u;
      u.unit_id = st.name + "-" + std::to_string(i);
      u.design_stratum = st.name;
      u.x.assign(S + q, 0.0);
      u.x[s] = 1.0;
      for (std::size_t j = 0; j < q; ++j) u.x[S + j] = config.covariates[j].mean + config.covariates[j].sd * rng.normal();
      pop.stratum_members[s].push_back(pop.units.size());
      pop.units.push_back(std::move(u));
    }
  }

  // RHG by rank of the assignment covariate, in cumulative share order
  const std::size_t N = pop.units.size();
  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t col = S + config.rhg_covariate;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pop.units[a].x[col] < pop.units[b].x[col]; });
  std::vector<std::size_t> rhg_of(N, 0);
  double cumulative = 0.0;
  std::size_t start = 0;
  for (std::size_t h = 0; h < config.rhgs.size(); ++h) {
    cumulative += config.rhgs[h].share;
    const std::size_t stop =
        h + 1 == config.rhgs.size() ? N : std::min(N, static_cast<std::size_t>(std::llround(cumulative * static_cast<double>(N))));
    for (std::size_t r = start; r < stop; ++r) rhg_of[order[r]] = h;
    start = stop;
  }

  pop.tx.assign(S + q, 0.0);
  CompensatedSum total;
  std::vector<CompensatedSum> tx(S + q);
  for (std::size_t i = 0; i < N; ++i) {
    auto& u = pop.units[i];
    const auto& rh = config.rhgs[rhg_of[i]];
    u.rhg_id = rh.id;
    double y = 0.0;
    for (std::size_t s = 0; s < S; ++s) y += u.x[s] * config.strata[s].effect;
    for (std::size_t j = 0; j < q; ++j) y += config.beta[j] * u.x[S + j];
    y += config.sigma * rh.noise_scale * rng.normal();
    u.y = y;
    total.add(y);
    for (std::size_t j = 0; j < S + q; ++j) tx[j].add(u.x[j]);
  }
  pop.total = total.value();
  for (std::size_t j = 0; j < S + q; ++j) pop.tx[j] = tx[j].value();

  std::vector<RhgSummary> groups;
  for (const auto& r : config.rhgs) {
    RhgSummary g;
    g.id = r.id;
    g.unit_cost = r.unit_cost;
    groups.push_back(std::move(g));
    pop.rho.push_back(r.rho);
  }
  pop.rhg_template = RhgTable(std::move(groups));
  return pop;
}

/// Stratified SRS without replacement followed by independent response with
/// each unit's true RHG propensity.
inline SampleDataset draw_and_respond(const Population& pop, const SimConfig& config, std::uint64_t replicate_index) {
  Rng rng(derive_seed(config.seed, replicate_index, 1));
  SampleDataset data;
  data.tx = pop.tx;
  StratifiedSrs design;
  std::vector<std::size_t> chosen;
  for (std::size_t s = 0; s < config.strata.size(); ++s) {
    const auto& st = config.strata[s];
    if (st.n > st.N) throw InputError("stratum '" + st.name + "': n exceeds N");
    design.strata[st.name] = {st.N, st.n};
    auto members = pop.stratum_members[s];
    const auto n = static_cast<std::size_t>(st.n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = i + static_cast<std::size_t>(rng.below(members.size() - i));
      std::swap(members[i], members[j]);
    }
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::sort(chosen.begin(), chosen.end());
  data.units.reserve(chosen.size());
  for (const auto i : chosen) {
    UnitRecord u = pop.units[i];
    const auto& st = design.strata.at(u.design_stratum);
    u.pi = static_cast<double>(st.n) / static_cast<double>(st.N);
    u.delta = rng.bernoulli(pop.rho[pop.rhg_template.index_of(u.rhg_id)]);
    data.units.push_back(std::move(u));
  }
  data.design = std::move(design);
  return data;
}

struct FollowupOutcome {
  SampleDataset data;
  std::vector<std::int64_t> converted;  // per RHG
};

/// Visits every nonrespondent of group h up to k_h times. Converted units
/// become respondents with their true y.
inline FollowupOutcome apply_followup(const SampleDataset& data, const RhgTable& table, const Visits& k,
                                      const std::vector<double>& true_rho, ConversionMechanism mechanism,
                                      std::uint64_t seed) {
  if (k.size() != table.size() || true_rho.size() != table.size()) {
    throw InputError("follow-up plan must cover every RHG");
  }
  Rng rng(seed);
  FollowupOutcome out{data, std::vector<std::int64_t>(table.size(), 0)};
  for (auto& u : out.data.units) {
    if (u.delta) continue;
    const auto h = table.index_of(u.rhg_id);
    const int visits = k[h];
    if (visits <= 0) continue;
    bool converted = false;
    if (mechanism == ConversionMechanism::PerVisitBernoulli) {
      for (int v = 0; v < visits && !converted; ++v) converted = rng.bernoulli(true_rho[h]);
    } else {
      converted = rng.bernoulli(std::min(static_cast<double>(visits) * true_rho[h], 1.0));
    }
    if (converted) {
      if (!u.y) throw InputError("unit '" + u.unit_id + "' converted but has no true y");
      u.delta = true;
      ++out.converted[h];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Replicates
// ---------------------------------------------------------------------------

struct ReplicateEstimate {
  double point = 0.0;
  double full_point = 0.0;  // same sample with every unit responding
  double v1 = 0.0;
  double v2 = 0.0;
};

struct ReplicateRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::int64_t sampled = 0;
  std::int64_t respondents_before = 0;
  std::int64_t respondents_after = 0;
  Money cost;
  Visits k;
  std::vector<ReplicateEstimate> estimates;  // config.estimators order
};

struct EstimatorSummary {
  EstimatorKind kind = EstimatorKind::IpwHt;
  double mean = 0.0;
  double relative_bias = 0.0;
  double variance = 0.0;  // divisor R
  double mse = 0.0;
  double mc_se = 0.0;     // Monte Carlo SE of the mean
  double mean_v1 = 0.0;
  double mean_v2 = 0.0;
  double nonresponse_variance = 0.0;  // empirical variance of point - full_point
};

struct SimReport {
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::string strategy;
  std::string mechanism;
  double population_total = 0.0;
  double mean_cost = 0.0;
  double mean_response_rate_before = 0.0;
  double mean_response_rate_after = 0.0;
  std::vector<EstimatorSummary> estimators;
  std::vector<ReplicateRecord> records;
};

namespace detail {

inline Visits plan_for(const FollowupSpec& spec, const RhgTable& counts, const SampleDataset& data) {
  switch (spec.strategy) {
    case FollowupStrategy::None: return Visits(counts.size(), 0);
    case FollowupStrategy::FixedPlan: return spec.plan;
    case FollowupStrategy::Optimal:
    case FollowupStrategy::Uniform: {
      EstimatorOptions opt;
      opt.compute_v1 = false;
      const auto pre = estimate(spec.planning_estimator, data, counts, opt);
      std::vector<RhgSummary> groups = counts.groups();
      for (std::size_t h = 0; h < groups.size(); ++h) groups[h].s2 = pre.s2_by_group[h].second;
      const RhgTable planning(std::move(groups));
      if (spec.strategy == FollowupStrategy::Optimal) {
        return solve_exact({planning, spec.budget, spec.max_visits, spec.model}).k;
      }
      return baseline_uniform(planning, spec.budget, spec.max_visits, spec.model).k;
    }
  }
  return Visits(counts.size(), 0);
}

inline ReplicateRecord run_one(const Population& pop, const SimConfig& config, const FollowupSpec& followup,
                               std::size_t index) {
  ReplicateRecord rec;
  rec.index = index;
  rec.seed = derive_seed(config.seed, index, 1);
  const auto sample = draw_and_respond(pop, config, index);
  const auto before = tabulate(pop.rhg_template, sample);
  rec.sampled = before.total_n();
  rec.respondents_before = before.total_m();
  rec.k = plan_for(followup, before, sample);
  rec.cost = plan_cost(rec.k, before);
  const auto after = apply_followup(sample, before, rec.k, pop.rho, followup.mechanism, derive_seed(config.seed, index, 2));
  const auto counts = tabulate(pop.rhg_template, after.data);
  rec.respondents_after = counts.total_m();

  SampleDataset full = after.data;
  for (auto& u : full.units) u.delta = true;
  const auto full_counts = tabulate(pop.rhg_template, full);

  EstimatorOptions opt;
  opt.compute_v1 = config.compute_v1;
  EstimatorOptions full_opt;
  full_opt.compute_v1 = false;
  for (const auto kind : config.estimators) {
    const auto rep = estimate(kind, after.data, counts, opt);
    const auto ref = estimate(kind, full, full_counts, full_opt);
    rec.estimates.push_back({rep.point, ref.point, rep.v1, rep.v2});
  }
  return rec;
}

}  // namespace detail

/// Runs every replicate for one follow-up strategy.
inline std::vector<ReplicateRecord> run_records(const Population& pop, const SimConfig& config,
                                                const FollowupSpec& followup) {
  const std::size_t R = config.replicates;
  std::vector<ReplicateRecord> records(R);
  std::vector<std::exception_ptr> errors(R);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < R; i = next++) {
      try {
        records[i] = detail::run_one(pop, config, followup, i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::max<std::size_t>(1, std::min(config.threads, R));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (std::size_t i = 0; i < R; ++i) {
    if (!errors[i]) continue;
    const std::string where = "replicate " + std::to_string(i) + " (master seed " + std::to_string(config.seed) +
                              ", replicate seed " + std::to_string(derive_seed(config.seed, i, 1)) + "): ";
    try {
      std::rethrow_exception(errors[i]);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    } catch (const std::exception& e) {
      throw NumericalError(where + e.what());
    }
  }
  return records;
}

inline SimReport summarize(const SimConfig& config, const Population& pop, const FollowupSpec& followup,
                           std::vector<ReplicateRecord> records) {
  SimReport rep;
  rep.seed = config.seed;
  rep.replicates = records.size();
  rep.strategy = followup.label.empty() ? to_string(followup.strategy) : followup.label;
  rep.mechanism = to_string(followup.mechanism);
  rep.population_total = pop.total;
  const double R = static_cast<double>(records.size());

  CompensatedSum cost, before, after;
  for (const auto& r : records) {
    cost.add(r.cost.dollars());
    before.add(static_cast<double>(r.respondents_before) / static_cast<double>(r.sampled));
    after.add(static_cast<double>(r.respondents_after) / static_cast<double>(r.sampled));
  }
  rep.mean_cost = cost.value() / R;
  rep.mean_response_rate_before = before.value() / R;
  rep.mean_response_rate_after = after.value() / R;

  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    EstimatorSummary s;
    s.kind = config.estimators[e];
    CompensatedSum sum, v1, v2, nr;
    for (const auto& r : records) {
      sum.add(r.estimates[e].point);
      v1.add(r.estimates[e].v1);
      v2.add(r.estimates[e].v2);
      nr.add(r.estimates[e].point - r.estimates[e].full_point);
    }
    s.mean = sum.value() / R;
    s.mean_v1 = v1.value() / R;
    s.mean_v2 = v2.value() / R;
    const double nr_mean = nr.value() / R;
    CompensatedSum var, sq, nrv;
    for (const auto& r : records) {
      const double d = r.estimates[e].point - s.mean;
      var.add(d * d);
      const double err = r.estimates[e].point - pop.total;
      sq.add(err * err);
      const double z = r.estimates[e].point - r.estimates[e].full_point - nr_mean;
      nrv.add(z * z);
    }
    s.variance = var.value() / R;
    s.mse = sq.value() / R;
    s.nonresponse_variance = nrv.value() / R;
    s.relative_bias = (s.mean - pop.total) / pop.total;
    s.mc_se = R > 1 ? std::sqrt(s.variance / (R - 1.0)) : 0.0;
    rep.estimators.push_back(s);
  }
  rep.records = std::move(records);
  return rep;
}

inline SimReport run_replicates(const SimConfig& config) {
  config.validate();
  const auto pop = generate_population(config, config.seed);
  return summarize(config, pop, config.followup, run_records(pop, config, config.followup));
}

struct StrategyResult {
  std::string label;
  double mse = 0.0;
  double nonresponse_variance = 0.0;
  double mean_cost = 0.0;
  double mean_response_rate = 0.0;
  double mse_diff_vs_first = 0.0;     // paired mean of squared-error differences
  double mse_diff_se_vs_first = 0.0;  // its Monte Carlo SE
  std::size_t rank = 0;               // 1 = smallest MSE
};

struct StrategyComparison {
  EstimatorKind estimator = EstimatorKind::IpwGreg;
  std::vector<StrategyResult> strategies;
  bool red_flag = false;  // optimal worse than uniform beyond 2 Monte Carlo SEs
  std::string red_flag_detail;
};

/// Runs each strategy on identical samples and response draws (common random
/// numbers) and compares the first configured estimator across them.
inline StrategyComparison compare_strategies(const SimConfig& config, const std::vector<FollowupSpec>& strategies) {
  if (strategies.size() < 2) throw InputError("comparison needs at least two strategies");
  config.validate();
  const auto pop = generate_population(config, config.seed);
  StrategyComparison out;
  out.estimator = config.estimators.front();
  std::vector<std::vector<double>> sq_err;
  for (const auto& spec : strategies) {
    const auto rep = summarize(config, pop, spec, run_records(pop, config, spec));
    StrategyResult r;
    r.label = rep.strategy;
    r.mse = rep.estimators.front().mse;
    r.nonresponse_variance = rep.estimators.front().nonresponse_variance;
    r.mean_cost = rep.mean_cost;
    r.mean_response_rate = rep.mean_response_rate_after;
    std::vector<double> errs;
    for (const auto& rec : rep.records) {
      const double e = rec.estimates.front().point - pop.total;
      errs.push_back(e * e);
    }
    sq_err.push_back(std::move(errs));
    out.strategies.push_back(r);
  }

  auto paired = [&](std::size_t a, std::size_t b) {
    const double R = static_cast<double>(sq_err[a].size());
    CompensatedSum s;
    for (std::size_t i = 0; i < sq_err[a].size(); ++i) s.add(sq_err[a][i] - sq_err[b][i]);
    const double mean = s.value() / R;
    CompensatedSum v;
    for (std::size_t i = 0; i < sq_err[a].size(); ++i) {
      const double d = sq_err[a][i] - sq_err[b][i] - mean;
      v.add(d * d);
    }
    const double se = R > 1 ? std::sqrt(v.value() / (R - 1.0) / R) : 0.0;
    return std::pair{mean, se};
  };
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    const auto [d, se] = paired(s, 0);
    out.strategies[s].mse_diff_vs_first = d;
    out.strategies[s].mse_diff_se_vs_first = se;
  }

  std::vector<std::size_t> order(strategies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return out.strategies[a].mse < out.strategies[b].mse; });
  for (std::size_t r = 0; r < order.size(); ++r) out.strategies[order[r]].rank = r + 1;

  for (std::size_t a = 0; a < strategies.size(); ++a) {
    if (strategies[a].strategy != FollowupStrategy::Optimal) continue;
    for (std::size_t b = 0; b < strategies.size(); ++b) {
      if (strategies[b].strategy != FollowupStrategy::Uniform) continue;
      const auto [d, se] = paired(a, b);
      if (d > 2.0 * se) {
        out.red_flag = true;
        out.red_flag_detail = out.strategies[a].label + " exceeds " + out.strategies[b].label + " by " +
                              std::to_string(d) + " (2 SE = " + std::to_string(2.0 * se) + ")";
      }
    }
  }
  return out;
}

}  // namespace nfu
