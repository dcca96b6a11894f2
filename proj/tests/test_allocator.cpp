#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nfu/allocator.hpp"
#include "oracles.hpp"

using Catch::Approx;
using nfu::ConversionModel;
using nfu::Money;

namespace {

const nfu::Visits kPaperPlan{6, 5, 2, 2, 2, 1, 1, 1, 1, 1};
const nfu::Visits kTenThousandPlan{2, 3, 1, 1, 1, 1, 1, 1, 0, 0};

nfu::RhgTable random_table(std::mt19937_64& rng, std::size_t H) {
  std::uniform_int_distribution<int> n_dist(4, 60);
  std::uniform_int_distribution<int> cost_dist(1, 6);
  std::uniform_real_distribution<double> s2_dist(0.5, 50.0);
  std::vector<nfu::RhgSummary> groups;
  for (std::size_t h = 0; h < H; ++h) {
    nfu::RhgSummary g;
    g.id = "g" + std::to_string(h);
    g.n = n_dist(rng);
    g.m = std::uniform_int_distribution<int>(2, static_cast<int>(g.n))(rng);
    g.unit_cost = Money::from_cents(500 * cost_dist(rng));
    g.s2 = s2_dist(rng);
    groups.push_back(g);
  }
  return nfu::RhgTable(groups);
}

}  // namespace

TEST_CASE("conversion probability models", "[allocator]") {
  for (const auto m : {ConversionModel::LinearCapped, ConversionModel::Geometric}) {
    CHECK(nfu::conversion_probability(0, 0.3, m) == 0.0);
    double prev = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double p = nfu::conversion_probability(k, 0.17, m);
      CHECK(p >= prev);
      CHECK(p <= 1.0);
      prev = p;
    }
  }
  CHECK(nfu::conversion_probability(6, 2.0 / 23.0, ConversionModel::LinearCapped) ==
        Approx(0.5217391304347826).epsilon(1e-14));
  CHECK(nfu::conversion_probability(5, 4.0 / 23.0, ConversionModel::Geometric) ==
        Approx(0.6152941196577).epsilon(1e-12));
  CHECK(nfu::conversion_probability(9, 0.25, ConversionModel::LinearCapped) == 1.0);
  CHECK(nfu::parse_conversion_model("geometric") == ConversionModel::Geometric);
  CHECK_THROWS_AS(nfu::parse_conversion_model("quadratic"), nfu::InputError);
}

TEST_CASE("no-follow-up objective reproduces the published group variances", "[allocator][golden]") {
  const auto t = oracle::reacs_table1();
  const auto obj = nfu::objective(nfu::Visits(10, 0), t, ConversionModel::LinearCapped);
  const std::vector<double> published{5.55, 3.63, 1.58, 3.60, 3.84, 6.34, 12.88, 5.55, 6.96, 7.85};
  for (std::size_t h = 0; h < 10; ++h) CHECK(obj.per_group[h] / 1e9 == Approx(published[h]).epsilon(0.01));
  CHECK(obj.total / 1e9 == Approx(57.77).epsilon(0.01));
}

TEST_CASE("published follow-up plans", "[allocator][golden]") {
  const auto t = oracle::reacs_table1();
  const auto plan = nfu::evaluate_plan(kPaperPlan, t, ConversionModel::LinearCapped);
  CHECK(plan.cost == Money::parse("$19,640"));
  CHECK(plan.total_converts() == Approx(508.0).margin(1.0));
  const std::vector<double> k1_rows{4.37, 9.56, 4.44, 6.06, 7.45};
  for (std::size_t h = 5; h < 10; ++h) CHECK(plan.per_group_objective[h] / 1e9 == Approx(k1_rows[h - 5]).epsilon(0.01));
  CHECK(plan.objective / 1e9 == Approx(38.21).epsilon(0.03));
  double sum = 0.0;
  for (const double v : plan.per_group_objective) sum += v;
  CHECK(plan.objective == Approx(sum).epsilon(1e-15));

  const auto ten = nfu::evaluate_plan(kTenThousandPlan, t, ConversionModel::LinearCapped);
  CHECK(ten.cost == Money::parse("$9,680"));
  CHECK(ten.total_converts() == Approx(225.0).margin(1.0));
  CHECK(ten.objective / 1e9 == Approx(41.91).epsilon(0.01));

  const auto zero = nfu::evaluate_plan(nfu::Visits(10, 0), t, ConversionModel::LinearCapped);
  CHECK(zero.cost == Money());
  CHECK(zero.total_converts() == 0.0);
}

TEST_CASE("exact solver on the REACS groups", "[allocator][golden]") {
  const auto t = oracle::reacs_table1();
  const double paper = nfu::objective(kPaperPlan, t, ConversionModel::LinearCapped).total;
  const auto plan = nfu::solve_exact({t, Money::from_dollars(30000), 6, ConversionModel::LinearCapped});
  CHECK(plan.objective <= paper);
  CHECK(plan.cost <= Money::from_dollars(30000));
  CHECK(plan.k == nfu::Visits{6, 5, 3, 2, 2, 1, 1, 1, 1, 1});

  const auto ten = nfu::solve_exact({t, Money::from_dollars(10000), 6, ConversionModel::LinearCapped});
  CHECK(ten.objective <= 41.91e9 * 1.005);
  CHECK(ten.cost <= Money::from_dollars(10000));

  const auto none = nfu::solve_exact({t, Money(), 6, ConversionModel::LinearCapped});
  CHECK(none.k == nfu::Visits(10, 0));
  CHECK(none.objective / 1e9 == Approx(57.77).epsilon(0.01));

  const auto geo = nfu::solve_exact({t, Money::from_dollars(30000), 6, ConversionModel::Geometric});
  CHECK(geo.objective <= nfu::objective(kPaperPlan, t, ConversionModel::Geometric).total);
}

TEST_CASE("exact solver matches exhaustive enumeration", "[allocator][oracle]") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 250; ++trial) {
    const std::size_t H = 1 + trial % 4;
    const auto t = random_table(rng, H);
    const int k0 = 1 + static_cast<int>(rng() % 4);
    const auto model = trial % 2 == 0 ? ConversionModel::LinearCapped : ConversionModel::Geometric;
    std::int64_t full = 0;
    for (const auto& g : t) full += g.unit_cost.cents() * g.nonrespondents() * k0;
    const auto budget = Money::from_cents(static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(full + 1)));
    const nfu::AllocationProblem p{t, budget, k0, model};
    const auto dp = nfu::solve_exact(p);
    const auto bf = oracle::brute_force(p);
    INFO("trial " << trial);
    REQUIRE(dp.objective == bf.objective);
    CHECK(dp.k == bf.k);
    CHECK(dp.cost == bf.cost);
  }
}

TEST_CASE("solver feasibility and budget monotonicity", "[allocator][property]") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    const auto t = random_table(rng, 2 + trial % 5);
    const int k0 = 1 + trial % 6;
    for (const auto model : {ConversionModel::LinearCapped, ConversionModel::Geometric}) {
      double prev = std::numeric_limits<double>::infinity();
      for (std::int64_t b = 0; b <= 400000; b += 25000) {
        const auto budget = Money::from_cents(b);
        const auto plan = nfu::solve_exact({t, budget, k0, model});
        CHECK(plan.cost <= budget);
        CHECK(plan.objective <= prev);
        prev = plan.objective;
        for (std::size_t h = 0; h < t.size(); ++h) {
          CHECK(plan.k[h] <= k0);
          if (model == ConversionModel::LinearCapped) CHECK(plan.k[h] * t[h].m <= t[h].n);
        }
      }
    }
  }
}

TEST_CASE("per-group objective decreases with visits", "[allocator][property]") {
  const auto t = oracle::reacs_table1();
  for (const auto model : {ConversionModel::LinearCapped, ConversionModel::Geometric}) {
    for (std::size_t h = 0; h < t.size(); ++h) {
      const int cap = nfu::visit_cap(t[h], 20, model);
      nfu::Visits k(10, 0);
      double prev = nfu::objective(k, t, model).per_group[h];
      for (int v = 1; v <= cap; ++v) {
        k[h] = v;
        const double cur = nfu::objective(k, t, model).per_group[h];
        // geometric conversion saturates in double precision after a dozen visits
        if (v <= 6) CHECK(cur < prev);
        CHECK(cur <= prev);
        prev = cur;
      }
    }
  }
  CHECK(nfu::visit_cap(t[0], 20, ConversionModel::LinearCapped) == 11);
  CHECK(nfu::visit_cap(t[9], 20, ConversionModel::LinearCapped) == 1);
}

TEST_CASE("continuous relaxation brackets the integer optimum", "[allocator][property]") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 60; ++trial) {
    const auto t = random_table(rng, 2 + trial % 5);
    const int k0 = 1 + trial % 6;
    const auto budget = Money::from_cents(static_cast<std::int64_t>(rng() % 300000));
    const nfu::AllocationProblem p{t, budget, k0, ConversionModel::LinearCapped};
    const auto relaxed = nfu::solve_continuous(p);
    const auto exact = nfu::solve_exact(p);
    CHECK(relaxed.objective <= exact.objective * (1 + 1e-12));
    CHECK(relaxed.cost_dollars <= budget.dollars() * (1 + 1e-9) + 1e-9);
    nfu::Visits floor_k(t.size());
    for (std::size_t h = 0; h < t.size(); ++h) floor_k[h] = static_cast<int>(std::floor(relaxed.k[h] + 1e-9));
    CHECK(exact.objective <= nfu::objective(floor_k, t, p.model).total);
  }

  const auto reacs = oracle::reacs_table1();
  const auto huge = nfu::solve_continuous({reacs, Money::from_dollars(10'000'000), 6, ConversionModel::LinearCapped});
  for (std::size_t h = 0; h < reacs.size(); ++h) {
    CHECK(huge.k[h] == Approx(std::min(6.0, 1.0 / nfu::rho_hat(reacs[h]))));
  }

  auto g = reacs[3];
  auto g2 = g;
  g2.id = "twin";
  g2.range.reset();
  g.range.reset();
  const nfu::RhgTable twins({g, g2});
  const auto sym = nfu::solve_continuous({twins, Money::from_dollars(1500), 6, ConversionModel::LinearCapped});
  CHECK(sym.k[0] == sym.k[1]);
  CHECK_THROWS_AS(nfu::solve_continuous({twins, Money(), 6, ConversionModel::Geometric}), nfu::InputError);
}

TEST_CASE("uniform baseline", "[allocator]") {
  const auto t = oracle::reacs_table1();
  const auto base = nfu::baseline_uniform(t, Money::from_dollars(30000), 6, ConversionModel::LinearCapped);
  CHECK(base.k == nfu::Visits{2, 2, 2, 2, 2, 1, 1, 1, 1, 1});
  CHECK(base.cost <= Money::from_dollars(30000));
  const auto opt = nfu::solve_exact({t, Money::from_dollars(30000), 6, ConversionModel::LinearCapped});
  CHECK(opt.objective <= base.objective);
  CHECK(nfu::baseline_uniform(t, Money(), 6, ConversionModel::LinearCapped).k == nfu::Visits(10, 0));

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rt = random_table(rng, 2 + trial % 4);
    const auto budget = Money::from_cents(static_cast<std::int64_t>(rng() % 200000));
    const auto b = nfu::baseline_uniform(rt, budget, 4, ConversionModel::LinearCapped);
    CHECK(b.cost <= budget);
    CHECK(nfu::solve_exact({rt, budget, 4, ConversionModel::LinearCapped}).objective <= b.objective);
  }
}

TEST_CASE("budget sweep", "[allocator]") {
  const auto t = oracle::reacs_table1();
  std::vector<Money> budgets;
  for (const char* b : {"5000", "7500", "10000", "12500", "15000", "17500", "20000", "20250"}) {
    budgets.push_back(Money::parse(b));
  }
  const auto rows = nfu::sweep(t, budgets, 6, ConversionModel::LinearCapped);
  REQUIRE(rows.size() == budgets.size());
  CHECK_FALSE(rows[0].roi_thousands.has_value());
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].plan.objective <= rows[i - 1].plan.objective);
    CHECK(rows[i].response_rate >= rows[i - 1].response_rate);
  }
  CHECK(rows[2].plan.objective <= 41.91e9 * 1.005);

  // the published rows at $7,500 and $10,000
  const auto roi = nfu::roi_between(44.42e9, Money::from_dollars(7380), 41.91e9, Money::from_dollars(9680));
  REQUIRE(roi.has_value());
  CHECK(*roi == Approx(1091.0).epsilon(0.05));
  CHECK_FALSE(nfu::roi_between(1.0, Money::from_dollars(5), 0.5, Money::from_dollars(5)).has_value());

  const auto one = nfu::sweep(t, {Money::from_dollars(10000)}, 6, ConversionModel::LinearCapped);
  REQUIRE(one.size() == 1);
  CHECK_FALSE(one[0].roi_thousands.has_value());
  CHECK_THROWS_AS(nfu::sweep(t, {}, 6, ConversionModel::LinearCapped), nfu::InputError);
}

TEST_CASE("allocation input errors", "[allocator]") {
  const auto t = oracle::reacs_table1();
  CHECK_THROWS_AS(nfu::solve_exact({nfu::RhgTable(), Money(), 6, ConversionModel::LinearCapped}), nfu::InputError);
  CHECK_THROWS_AS(nfu::solve_exact({t, Money(), 0, ConversionModel::LinearCapped}), nfu::InputError);
  CHECK_THROWS_AS(nfu::plan_cost(nfu::Visits{1, 2}, t), nfu::InputError);

  auto groups = t.groups();
  groups[0].m = 1;
  CHECK_THROWS_AS(nfu::objective(nfu::Visits(10, 0), nfu::RhgTable(groups), ConversionModel::LinearCapped),
                  nfu::DegenerateGroupError);

  std::vector<nfu::RhgSummary> full{t[0]};
  full[0].m = full[0].n;
  const nfu::RhgTable complete(full);
  const auto plan = nfu::solve_exact({complete, Money::from_dollars(1000), 6, ConversionModel::LinearCapped});
  CHECK(plan.k == nfu::Visits{0});
  CHECK(plan.objective == 0.0);
}
