#pragma once

// Allocation of a follow-up budget across RHGs. The objective is the
// nonresponse variance after follow-up,
//
//   V2(k) = sum_h n_h^2 (1 - rho_h) S2_h / (m_h + p(k_h, rho_h) (n_h - m_h)),
//
// with cost sum_h u_h k_h (n_h - m_h). The exact solver is a dynamic program
// over the budget axis in units of the gcd of the per-visit group costs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "nfu/core.hpp"

namespace nfu {

enum class ConversionModel { LinearCapped, Geometric };

inline const char* to_string(ConversionModel m) {
  return m == ConversionModel::LinearCapped ? "linear" : "geometric";
}

inline ConversionModel parse_conversion_model(std::string_view s) {
  if (s == "linear" || s == "linear-capped") return ConversionModel::LinearCapped;
  if (s == "geometric") return ConversionModel::Geometric;
  throw InputError("unknown conversion model '" + std::string(s) + "' (expected linear or geometric)");
}

/// Probability that a nonrespondent is converted within k visits.
inline double conversion_probability(int k, double rho, ConversionModel model) {
  if (k <= 0) return 0.0;
  if (model == ConversionModel::LinearCapped) return std::min(static_cast<double>(k) * rho, 1.0);
  return 1.0 - std::pow(1.0 - rho, k);
}

using Visits = std::vector<int>;

struct AllocationProblem {
  RhgTable table;
  Money budget;
  int max_visits = 1;  // k0
  ConversionModel model = ConversionModel::LinearCapped;
};

struct AllocationPlan {
  Visits k;
  Money cost;
  std::vector<double> expected_converts;
  std::vector<std::int64_t> group_cost_cents;
  double objective = 0.0;
  std::vector<double> per_group_objective;

  [[nodiscard]] double total_converts() const {
    return std::accumulate(expected_converts.begin(), expected_converts.end(), 0.0);
  }
};

struct ObjectiveValue {
  double total = 0.0;
  std::vector<double> per_group;
};

namespace detail {

inline void check_plan(const Visits& k, const RhgTable& table) {
  if (k.size() != table.size()) {
    throw InputError("plan has " + std::to_string(k.size()) + " entries for " + std::to_string(table.size()) + " RHGs");
  }
  for (std::size_t h = 0; h < k.size(); ++h) {
    if (k[h] < 0) throw InputError("RHG '" + table[h].id + "': visit count must be non-negative");
  }
}

/// Per-visit cost of following up every nonrespondent of group h, in cents.
inline std::int64_t visit_cost_cents(const RhgSummary& g) { return g.unit_cost.times(g.nonrespondents()).cents(); }

/// Nonresponse-variance contribution of one group after k visits.
inline double group_objective(const RhgSummary& g, int k, ConversionModel model, bool allow_thin_groups) {
  if (g.n == 0) return 0.0;
  const double rho = rho_hat(g);
  const double n = static_cast<double>(g.n);
  const double w = static_cast<double>(g.nonrespondents());
  const double effective = static_cast<double>(g.m) + conversion_probability(k, rho, model) * w;
  if (g.m < 2 && !(allow_thin_groups && effective >= 1.0)) {
    throw DegenerateGroupError("RHG '" + g.id + "' has " + std::to_string(g.m) +
                               " respondents; at least 2 are needed, merge it with an adjacent group");
  }
  if (!(effective > 0.0)) throw DegenerateGroupError("RHG '" + g.id + "': zero effective respondents");
  return n * n * (1.0 - rho) * g.s2 / effective;
}

}  // namespace detail

inline std::vector<double> expected_converts(const Visits& k, const RhgTable& table, ConversionModel model) {
  detail::check_plan(k, table);
  std::vector<double> out(table.size(), 0.0);
  for (std::size_t h = 0; h < table.size(); ++h) {
    const auto& g = table[h];
    if (g.n == 0) continue;
    out[h] = conversion_probability(k[h], rho_hat(g), model) * static_cast<double>(g.nonrespondents());
  }
  return out;
}

inline Money plan_cost(const Visits& k, const RhgTable& table) {
  detail::check_plan(k, table);
  Money total;
  for (std::size_t h = 0; h < table.size(); ++h) total += table[h].unit_cost.times(k[h]).times(table[h].nonrespondents());
  return total;
}

/// Objective with its per-group breakdown. Terms are accumulated from the last
/// group to the first; the exact solver builds its partial sums in the same
/// order, so the two agree bit for bit.
inline ObjectiveValue objective(const Visits& k, const RhgTable& table, ConversionModel model,
                                bool allow_thin_groups = false) {
  detail::check_plan(k, table);
  ObjectiveValue out;
  out.per_group.resize(table.size());
  for (std::size_t h = table.size(); h-- > 0;) {
    out.per_group[h] = detail::group_objective(table[h], k[h], model, allow_thin_groups);
    out.total = out.per_group[h] + out.total;
  }
  return out;
}

/// Largest admissible visit count for group h: k0, and under the linear model
/// also floor(1 / rho_h) so that k rho <= 1.
inline int visit_cap(const RhgSummary& g, int max_visits, ConversionModel model) {
  if (g.nonrespondents() == 0) return 0;
  int cap = max_visits;
  if (model == ConversionModel::LinearCapped && g.m > 0) {
    cap = static_cast<int>(std::min<std::int64_t>(cap, g.n / g.m));
  }
  return cap;
}

inline AllocationPlan evaluate_plan(const Visits& k, const RhgTable& table, ConversionModel model) {
  AllocationPlan plan;
  plan.k = k;
  plan.cost = plan_cost(k, table);
  plan.expected_converts = expected_converts(k, table, model);
  for (std::size_t h = 0; h < table.size(); ++h) {
    plan.group_cost_cents.push_back(table[h].unit_cost.times(k[h]).times(table[h].nonrespondents()).cents());
  }
  auto obj = objective(k, table, model);
  plan.objective = obj.total;
  plan.per_group_objective = std::move(obj.per_group);
  return plan;
}

namespace detail {

inline void check_problem(const AllocationProblem& p) {
  if (p.table.empty()) throw InputError("allocation needs at least one RHG");
  if (p.max_visits < 1) throw InputError("maximum visits must be at least 1");
}

}  // namespace detail

/// Global minimiser of the objective subject to cost <= budget, k_h <= k0 and
/// (linear model) k_h rho_h <= 1. Ties go to the cheaper plan, then to the
/// lexicographically smallest k.
inline AllocationPlan solve_exact(const AllocationProblem& problem) {
  detail::check_problem(problem);
  const auto& table = problem.table;
  const std::size_t H = table.size();

  std::vector<std::int64_t> unit_cost(H);
  std::vector<int> cap(H);
  std::int64_t grain = 0;
  for (std::size_t h = 0; h < H; ++h) {
    unit_cost[h] = detail::visit_cost_cents(table[h]);
    cap[h] = unit_cost[h] > 0 ? visit_cap(table[h], problem.max_visits, problem.model) : 0;
    if (unit_cost[h] > 0 && cap[h] > 0) grain = std::gcd(grain, unit_cost[h]);
  }

  // terms[h][k]; evaluated up front so that infeasible groups fail early
  std::vector<std::vector<double>> terms(H);
  for (std::size_t h = 0; h < H; ++h) {
    for (int k = 0; k <= cap[h]; ++k) terms[h].push_back(detail::group_objective(table[h], k, problem.model, false));
  }

  if (grain == 0) {
    return evaluate_plan(Visits(H, 0), table, problem.model);
  }

  std::int64_t reachable = 0;
  for (std::size_t h = 0; h < H; ++h) reachable += cap[h] * (unit_cost[h] / grain);
  const std::int64_t slots = std::min(problem.budget.cents() / grain, reachable) + 1;
  constexpr std::int64_t kMaxStates = 400'000'000;
  if (slots * static_cast<std::int64_t>(H) > kMaxStates) {
    throw NumericalError("budget grid too fine for the exact solver (" + std::to_string(slots) + " budget slots)");
  }

  // best[b]: minimal suffix objective of groups h..H-1 spending exactly b slots
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> best(static_cast<std::size_t>(slots), kInf);
  std::vector<double> next(static_cast<std::size_t>(slots), kInf);
  std::vector<std::vector<int>> choice(H, std::vector<int>(static_cast<std::size_t>(slots), -1));
  best[0] = 0.0;
  for (std::size_t h = H; h-- > 0;) {
    const std::int64_t step = unit_cost[h] / grain;
    std::fill(next.begin(), next.end(), kInf);
    for (std::int64_t b = 0; b < slots; ++b) {
      auto& slot_choice = choice[h][static_cast<std::size_t>(b)];
      for (int k = 0; k <= cap[h]; ++k) {
        const std::int64_t rest = b - k * step;
        if (rest < 0) break;
        const double tail = best[static_cast<std::size_t>(rest)];
        if (tail == kInf) continue;
        const double v = terms[h][static_cast<std::size_t>(k)] + tail;
        // strict comparison keeps the smallest k among equal values
        if (v < next[static_cast<std::size_t>(b)]) {
          next[static_cast<std::size_t>(b)] = v;
          slot_choice = k;
        }
      }
    }
    std::swap(best, next);
  }

  std::int64_t chosen = 0;
  for (std::int64_t b = 1; b < slots; ++b) {
    if (best[static_cast<std::size_t>(b)] < best[static_cast<std::size_t>(chosen)]) chosen = b;
  }
  Visits k(H, 0);
  std::int64_t b = chosen;
  for (std::size_t h = 0; h < H; ++h) {
    k[h] = choice[h][static_cast<std::size_t>(b)];
    b -= k[h] * (unit_cost[h] / grain);
  }
  return evaluate_plan(k, table, problem.model);
}

struct ContinuousSolution {
  std::vector<double> k;
  double objective = 0.0;
  double cost_dollars = 0.0;
  double multiplier = 0.0;  // budget shadow price; 0 when the budget does not bind
};

/// Continuous relaxation under the linear model by water-filling: each group's
/// effective respondent count is sqrt(A_h rho_h w_h / (lambda c_h)) clipped to
/// its box, with lambda found by bisection so that the budget binds.
inline ContinuousSolution solve_continuous(const AllocationProblem& problem) {
  detail::check_problem(problem);
  if (problem.model != ConversionModel::LinearCapped) {
    throw InputError("the continuous relaxation is defined for the linear conversion model");
  }
  const auto& table = problem.table;
  const std::size_t H = table.size();
  std::vector<double> weight(H, 0.0), upper(H, 0.0), cost(H, 0.0), rho(H, 0.0), m(H, 0.0), w(H, 0.0);
  for (std::size_t h = 0; h < H; ++h) {
    const auto& g = table[h];
    (void)detail::group_objective(g, 0, problem.model, false);
    if (g.n == 0) continue;
    rho[h] = rho_hat(g);
    m[h] = static_cast<double>(g.m);
    w[h] = static_cast<double>(g.nonrespondents());
    cost[h] = g.unit_cost.dollars() * w[h];
    const double n = static_cast<double>(g.n);
    weight[h] = n * n * (1.0 - rho[h]) * g.s2;
    if (cost[h] > 0.0 && weight[h] > 0.0 && rho[h] > 0.0) {
      upper[h] = std::min(static_cast<double>(problem.max_visits), 1.0 / rho[h]);
    }
  }

  auto k_at = [&](double lambda) {
    std::vector<double> k(H, 0.0);
    for (std::size_t h = 0; h < H; ++h) {
      if (upper[h] == 0.0) continue;
      const double target = std::sqrt(weight[h] * rho[h] * w[h] / (lambda * cost[h]));
      k[h] = std::clamp((target - m[h]) / (rho[h] * w[h]), 0.0, upper[h]);
    }
    return k;
  };
  auto spend = [&](const std::vector<double>& k) {
    double s = 0.0;
    for (std::size_t h = 0; h < H; ++h) s += cost[h] * k[h];
    return s;
  };

  const double budget = problem.budget.dollars();
  ContinuousSolution out;
  if (spend(upper) <= budget) {
    out.k = upper;
  } else {
    // spend(lambda) is nonincreasing; bisect in log space
    double lo = std::log(1e-300), hi = std::log(1e300);
    for (int it = 0; it < 400; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (spend(k_at(std::exp(mid))) > budget) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.multiplier = std::exp(hi);
    out.k = k_at(out.multiplier);
  }
  out.cost_dollars = spend(out.k);
  for (std::size_t h = 0; h < H; ++h) {
    if (table[h].n == 0) continue;
    out.objective += weight[h] / (m[h] + std::min(out.k[h] * rho[h], 1.0) * w[h]);
  }
  return out;
}

/// Common-practice plan: one visit count for every group, from the budget
/// divided by the cost of one visit to every nonrespondent, then clipped to
/// each group's cap. Rounds to nearest but steps down if that overspends.
inline AllocationPlan baseline_uniform(const RhgTable& table, Money budget, int max_visits, ConversionModel model) {
  if (table.empty()) throw InputError("baseline needs at least one RHG");
  std::int64_t per_round = 0;
  for (const auto& g : table) per_round += detail::visit_cost_cents(g);
  if (per_round <= 0) throw InputError("baseline needs at least one nonrespondent with positive unit cost");
  const std::int64_t rounded = (2 * budget.cents() + per_round) / (2 * per_round);
  auto make = [&](std::int64_t common) {
    Visits k(table.size(), 0);
    for (std::size_t h = 0; h < table.size(); ++h) {
      k[h] = static_cast<int>(std::min<std::int64_t>(common, visit_cap(table[h], max_visits, model)));
    }
    return k;
  };
  auto k = make(rounded);
  if (plan_cost(k, table) > budget) k = make(budget.cents() / per_round);
  return evaluate_plan(k, table, model);
}

struct SweepRow {
  Money budget;
  AllocationPlan plan;
  double response_rate = 0.0;
  std::optional<double> roi_thousands;  // variance reduction per dollar, in 10^3 units^2
};

/// Variance reduction per additional dollar actually spent between two plans,
/// in thousands of units squared. Empty when the cost does not change.
inline std::optional<double> roi_between(double prev_objective, Money prev_cost, double objective, Money cost) {
  const auto delta_cents = cost.cents() - prev_cost.cents();
  if (delta_cents == 0) return std::nullopt;
  return (prev_objective - objective) / (static_cast<double>(delta_cents) / 100.0) / 1e3;
}

inline std::vector<SweepRow> sweep(const RhgTable& table, const std::vector<Money>& budgets, int max_visits,
                                   ConversionModel model) {
  if (budgets.empty()) throw InputError("sweep needs at least one budget");
  std::vector<SweepRow> rows;
  rows.reserve(budgets.size());
  for (const auto budget : budgets) {
    SweepRow row;
    row.budget = budget;
    row.plan = solve_exact({table, budget, max_visits, model});
    row.response_rate = response_rate(table, row.plan.expected_converts);
    if (!rows.empty()) {
      const auto& prev = rows.back().plan;
      row.roi_thousands = roi_between(prev.objective, prev.cost, row.plan.objective, row.plan.cost);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nfu
