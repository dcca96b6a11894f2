#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cstring>

#include "nfu/simulator.hpp"

using Catch::Approx;

namespace {

nfu::SimConfig small_config() {
  nfu::SimConfig c;
  c.strata = {{"north", 1200, 120, 50.0}, {"south", 800, 80, 80.0}};
  c.covariates = {{10.0, 2.0}, {0.0, 1.0}};
  c.beta = {4.0, 6.0};
  c.sigma = 5.0;
  c.rhg_covariate = 1;
  c.rhgs = {{"low", 0.3, 0.45, 1.5}, {"mid", 0.4, 0.7, 1.0}, {"high", 0.3, 0.9, 0.5}};
  c.estimators = {nfu::EstimatorKind::IpwHt, nfu::EstimatorKind::IpwGreg, nfu::EstimatorKind::CalImpute};
  c.replicates = 40;
  c.seed = 77;
  return c;
}

bool same_bits(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

void require_identical(const nfu::SimReport& a, const nfu::SimReport& b) {
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    REQUIRE(a.records[i].k == b.records[i].k);
    REQUIRE(a.records[i].respondents_after == b.records[i].respondents_after);
    for (std::size_t e = 0; e < a.records[i].estimates.size(); ++e) {
      REQUIRE(same_bits(a.records[i].estimates[e].point, b.records[i].estimates[e].point));
      REQUIRE(same_bits(a.records[i].estimates[e].v2, b.records[i].estimates[e].v2));
    }
  }
  for (std::size_t e = 0; e < a.estimators.size(); ++e) {
    CHECK(same_bits(a.estimators[e].mean, b.estimators[e].mean));
    CHECK(same_bits(a.estimators[e].variance, b.estimators[e].variance));
    CHECK(same_bits(a.estimators[e].mse, b.estimators[e].mse));
    CHECK(same_bits(a.estimators[e].mean_v2, b.estimators[e].mean_v2));
  }
}

}  // namespace

TEST_CASE("random streams", "[simulator]") {
  CHECK(nfu::derive_seed(1, 2, 3) == nfu::derive_seed(1, 2, 3));
  CHECK(nfu::derive_seed(1, 2, 3) != nfu::derive_seed(1, 3, 3));
  CHECK(nfu::derive_seed(1, 2, 3) != nfu::derive_seed(2, 2, 3));
  nfu::Rng a(5), b(5);
  double mean = 0.0, sq = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = a.uniform();
    REQUIRE(u == b.uniform());
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double z = a.normal();
    (void)b.normal();
    mean += z;
    sq += z * z;
    REQUIRE(a.below(7) < 7);
    (void)b.below(7);
  }
  CHECK(mean / 1e5 == Approx(0.0).margin(0.02));
  CHECK(sq / 1e5 == Approx(1.0).epsilon(0.02));
}

TEST_CASE("population generation", "[simulator]") {
  auto c = small_config();
  const auto p1 = nfu::generate_population(c, 9);
  const auto p2 = nfu::generate_population(c, 9);
  REQUIRE(p1.units.size() == 2000);
  CHECK(same_bits(p1.total, p2.total));
  CHECK(p1.tx == p2.tx);
  CHECK(p1.tx[0] == 1200.0);
  CHECK(p1.tx[1] == 800.0);
  std::map<std::string, int> sizes;
  for (const auto& u : p1.units) ++sizes[u.rhg_id];
  CHECK(sizes["low"] == 600);
  CHECK(sizes["mid"] == 800);
  CHECK(sizes["high"] == 600);

  c.strata = {{"a", 6000, 100, 0.0}, {"b", 4000, 100, 1.0}};
  const auto start = std::chrono::steady_clock::now();
  (void)nfu::generate_population(c, 1);
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(1));
}

TEST_CASE("noise-free outcomes give zero GREG nonresponse variance", "[simulator]") {
  auto c = small_config();
  c.sigma = 0.0;
  const auto pop = nfu::generate_population(c, c.seed);
  const auto sample = nfu::draw_and_respond(pop, c, 0);
  const auto rep = nfu::t_hat_greg(sample, nfu::tabulate(pop.rhg_template, sample));
  CHECK(rep.v2 == Approx(0.0).margin(1e-12 * pop.total * pop.total));
  CHECK(rep.point == Approx(pop.total).epsilon(1e-12));
}

TEST_CASE("sampling and response", "[simulator]") {
  auto c = small_config();
  const auto pop = nfu::generate_population(c, c.seed);
  const auto a = nfu::draw_and_respond(pop, c, 3);
  const auto b = nfu::draw_and_respond(pop, c, 3);
  REQUIRE(a.units.size() == 200);
  for (std::size_t i = 0; i < a.units.size(); ++i) {
    CHECK(a.units[i].unit_id == b.units[i].unit_id);
    CHECK(a.units[i].delta == b.units[i].delta);
  }
  CHECK_NOTHROW(a.validate());

  for (auto& r : c.rhgs) r.rho = 1.0;
  const auto full_pop = nfu::generate_population(c, c.seed);
  for (std::uint64_t i = 0; i < 5; ++i) {
    for (const auto& u : nfu::draw_and_respond(full_pop, c, i).units) CHECK(u.delta);
  }

  for (auto& r : c.rhgs) r.rho = 0.5;
  c.strata = {{"all", 50000, 40000, 0.0}};
  const auto big = nfu::generate_population(c, 1);
  const auto s = nfu::draw_and_respond(big, c, 0);
  double resp = 0.0;
  for (const auto& u : s.units) resp += u.delta ? 1.0 : 0.0;
  const double n = static_cast<double>(s.units.size());
  CHECK(std::abs(resp / n - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("follow-up conversion", "[simulator]") {
  auto c = small_config();
  c.strata = {{"all", 200000, 100000, 0.0}};
  c.rhgs = {{"a", 0.5, 0.2, 1.0}, {"b", 0.5, 0.25, 1.0}};
  const auto pop = nfu::generate_population(c, 2);
  const auto sample = nfu::draw_and_respond(pop, c, 0);
  const auto table = nfu::tabulate(pop.rhg_template, sample);

  const auto none = nfu::apply_followup(sample, table, {0, 0}, pop.rho, nfu::ConversionMechanism::PerVisitBernoulli, 1);
  CHECK(none.converted == std::vector<std::int64_t>{0, 0});
  for (std::size_t i = 0; i < sample.units.size(); ++i) CHECK(none.data.units[i].delta == sample.units[i].delta);

  const auto sure = nfu::apply_followup(sample, table, {1, 4}, pop.rho, nfu::ConversionMechanism::SingleDrawLinear, 1);
  CHECK(sure.converted[1] == table[1].nonrespondents());

  for (const auto mech : {nfu::ConversionMechanism::PerVisitBernoulli, nfu::ConversionMechanism::SingleDrawLinear}) {
    const auto out = nfu::apply_followup(sample, table, {3, 2}, pop.rho, mech, 42);
    for (std::size_t h = 0; h < 2; ++h) {
      const auto model = mech == nfu::ConversionMechanism::PerVisitBernoulli ? nfu::ConversionModel::Geometric
                                                                              : nfu::ConversionModel::LinearCapped;
      const double p = nfu::conversion_probability(h == 0 ? 3 : 2, pop.rho[h], model);
      const double w = static_cast<double>(table[h].nonrespondents());
      REQUIRE(w > 30000);
      CHECK(std::abs(static_cast<double>(out.converted[h]) / w - p) < 3.0 * std::sqrt(p * (1 - p) / w));
      CHECK(out.converted[h] <= table[h].nonrespondents());
    }
  }
  CHECK_THROWS_AS(nfu::apply_followup(sample, table, {1}, pop.rho, nfu::ConversionMechanism::SingleDrawLinear, 1),
                  nfu::InputError);
}

TEST_CASE("replicate reports are independent of the thread count", "[simulator]") {
  auto c = small_config();
  c.followup.strategy = nfu::FollowupStrategy::Optimal;
  c.followup.budget = nfu::Money::from_dollars(2000);
  c.threads = 1;
  const auto one = nfu::run_replicates(c);
  c.threads = 2;
  const auto two = nfu::run_replicates(c);
  c.threads = 8;
  const auto eight = nfu::run_replicates(c);
  require_identical(one, two);
  require_identical(one, eight);
  for (const auto& r : one.records) {
    CHECK(r.cost <= c.followup.budget);
    CHECK(r.respondents_after >= r.respondents_before);
    CHECK(r.respondents_after <= r.sampled);
  }
}

TEST_CASE("report summaries", "[simulator]") {
  auto c = small_config();
  c.followup.strategy = nfu::FollowupStrategy::FixedPlan;
  c.followup.plan = {2, 1, 1};
  const auto rep = nfu::run_replicates(c);
  REQUIRE(rep.estimators.size() == 3);
  for (const auto& s : rep.estimators) {
    const double bias = s.mean - rep.population_total;
    CHECK(s.mse == Approx(bias * bias + s.variance).epsilon(1e-9));
    CHECK(s.mc_se == Approx(std::sqrt(s.variance / 39.0)).epsilon(1e-12));
  }
  CHECK(rep.mean_response_rate_after > rep.mean_response_rate_before);

  c.replicates = 1;
  const auto single = nfu::run_replicates(c);
  REQUIRE(single.records.size() == 1);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(single.estimators[e].mean == single.records[0].estimates[e].point);
    CHECK(single.estimators[e].variance == 0.0);
    CHECK(single.estimators[e].mean_v2 == single.records[0].estimates[e].v2);
  }
  CHECK(single.records[0].k == nfu::Visits{2, 1, 1});
}

TEST_CASE("strategy comparison", "[simulator]") {
  auto c = small_config();
  c.replicates = 30;
  c.estimators = {nfu::EstimatorKind::IpwGreg};
  nfu::FollowupSpec uniform;
  uniform.strategy = nfu::FollowupStrategy::Uniform;
  uniform.budget = nfu::Money::from_dollars(1500);
  nfu::FollowupSpec optimal = uniform;
  optimal.strategy = nfu::FollowupStrategy::Optimal;
  const auto cmp = nfu::compare_strategies(c, {uniform, optimal, uniform});
  REQUIRE(cmp.strategies.size() == 3);
  CHECK(cmp.strategies[0].mse == cmp.strategies[2].mse);
  CHECK(cmp.strategies[2].mse_diff_vs_first == 0.0);
  CHECK(cmp.strategies[0].label == "uniform");
  CHECK(cmp.strategies[1].label == "optimal");
  CHECK(cmp.strategies[1].mean_cost <= 1500.0);
  std::vector<std::size_t> ranks;
  for (const auto& s : cmp.strategies) ranks.push_back(s.rank);
  std::sort(ranks.begin(), ranks.end());
  CHECK(ranks == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS_AS(nfu::compare_strategies(c, {uniform}), nfu::InputError);
}

TEST_CASE("configuration validation", "[simulator]") {
  auto c = small_config();
  c.rhgs[0].share = 0.5;
  CHECK_THROWS_AS(c.validate(), nfu::InputError);
  c = small_config();
  c.strata[0].n = 5000;
  CHECK_THROWS_AS(c.validate(), nfu::InputError);
  c = small_config();
  c.rhgs[1].rho = 0.0;
  CHECK_THROWS_AS(c.validate(), nfu::InputError);
  c = small_config();
  c.followup.strategy = nfu::FollowupStrategy::FixedPlan;
  c.followup.plan = {1};
  CHECK_THROWS_AS(c.validate(), nfu::InputError);
}
