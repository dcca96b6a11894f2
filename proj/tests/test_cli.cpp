#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "nfu/cli.hpp"

using Catch::Approx;

namespace {

struct Result {
  int status = -1;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "nfu");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.status = nfu::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::string kTable = NFU_DATA "/reacs_table1.csv";
const std::string kFix = NFU_FIXTURES;

std::string temp_file(const std::string& name, const std::string& content) {
  const std::string path = "nfu_cli_test_" + name;
  std::ofstream(path) << content;
  return path;
}

}  // namespace

TEST_CASE("allocate reproduces the published setting", "[cli]") {
  const auto r = run({"allocate", "--input", kTable, "--budget", "30000", "--max-visits", "6", "--model", "linear",
                      "--format", "json"});
  REQUIRE(r.status == 0);
  const auto doc = nfu::json::parse(r.out);
  CHECK(doc["total_cost"].get<double>() <= 30000.0);
  CHECK(doc["objective"].get<double>() <= 38.21e9);
  CHECK(doc["groups"].size() == 10);

  const auto table = run({"allocate", "--input", kTable, "--budget", "$30,000"});
  REQUIRE(table.status == 0);
  CHECK_THAT(table.out, Catch::Matchers::ContainsSubstring("Total"));
  CHECK_THAT(table.out, Catch::Matchers::ContainsSubstring("20,180"));

  const auto zero = run({"allocate", "--input", kTable, "--budget", "0", "--format", "json"});
  REQUIRE(zero.status == 0);
  const auto z = nfu::json::parse(zero.out);
  CHECK(z["objective"].get<double>() / 1e9 == Approx(57.77).epsilon(0.01));
  for (const auto& g : z["groups"]) CHECK(g["k"].get<int>() == 0);

  const auto csv = run({"allocate", "--input", kTable, "--budget", "10000", "--format", "csv"});
  REQUIRE(csv.status == 0);
  std::istringstream in(csv.out);
  const auto parsed = nfu::read_csv(in);
  CHECK(parsed.rows.size() == 10);
}

TEST_CASE("input errors exit with status 2", "[cli]") {
  const auto path = temp_file("no_s2.csv", "rhg_id,score_lo,score_hi,n,m,unit_cost\n1,0,0.1,23,2,20\n");
  const auto r = run({"allocate", "--input", path, "--budget", "100"});
  CHECK(r.status == 2);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("s2"));
  std::remove(path.c_str());

  CHECK(run({"allocate", "--input", "does-not-exist.csv", "--budget", "1"}).status == 2);
  CHECK(run({"allocate", "--input", kTable, "--budget", "1.001"}).status == 2);
  CHECK(run({"allocate", "--input", kTable}).status == 2);
  CHECK(run({"frobnicate"}).status == 2);
  CHECK(run({}).status == 2);
  CHECK(run({"allocate", "--input", kTable, "--budget", "1", "--model", "cubic"}).status == 2);
}

TEST_CASE("numerical failures exit with status 3", "[cli]") {
  const auto path = temp_file("thin.csv", "rhg_id,score_lo,score_hi,n,m,unit_cost,s2\n1,0,0.5,10,1,20,5\n");
  const auto r = run({"allocate", "--input", path, "--budget", "100"});
  CHECK(r.status == 3);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("merge"));
  std::remove(path.c_str());
}

TEST_CASE("sweep and baseline", "[cli]") {
  const auto r = run({"sweep", "--input", kTable, "--budgets", "5000", "7500", "10000", "12500", "15000", "17500",
                      "20000", "20250", "--format", "json"});
  REQUIRE(r.status == 0);
  const auto rows = nfu::sweep_from_json(nfu::json::parse(r.out));
  REQUIRE(rows.size() == 8);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].v2 <= rows[i - 1].v2);
  CHECK_FALSE(rows[0].roi.has_value());

  const auto one = run({"sweep", "--input", kTable, "--budgets", "10000", "--format", "csv"});
  REQUIRE(one.status == 0);
  std::istringstream in(one.out);
  CHECK(nfu::read_csv(in).rows.size() == 1);

  const auto table = run({"sweep", "--input", kTable, "--budgets", "5000", "10000"});
  REQUIRE(table.status == 0);
  CHECK_THAT(table.out, Catch::Matchers::ContainsSubstring("ROI"));

  const auto base = run({"baseline", "--input", kTable, "--budget", "30000", "--format", "json"});
  REQUIRE(base.status == 0);
  const auto b = nfu::json::parse(base.out);
  CHECK(b["uniform"]["objective"].get<double>() >= b["optimal"]["objective"].get<double>());
  CHECK(b["uniform"]["groups"][0]["k"].get<int>() == 2);
}

TEST_CASE("estimate from microdata", "[cli]") {
  const auto full = run({"estimate", "--input", kFix + "/microdata_full.csv", "--strata", kFix + "/strata_full.csv",
                         "--totals", "10,20", "--format", "json"});
  REQUIRE(full.status == 0);
  const auto doc = nfu::json::parse(full.out);
  REQUIRE(doc.size() == 3);
  for (const auto& r : doc) CHECK(r["v2"].get<double>() == 0.0);
  CHECK(doc[1]["point"].get<double>() == Approx(200.0).epsilon(1e-12));

  const auto four = run({"estimate", "--input", kFix + "/microdata_four.csv", "--strata", kFix + "/strata_four.csv",
                         "--totals", "8", "--estimator", "ipw", "--format", "json"});
  REQUIRE(four.status == 0);
  const auto f = nfu::json::parse(four.out);
  CHECK(f["point"].get<double>() == Approx(160.0));
  CHECK(f["v2"].get<double>() == Approx(1600.0 / 3.0));

  CHECK(run({"estimate", "--input", kFix + "/microdata_four.csv", "--totals", "8"}).status == 2);
  CHECK(run({"estimate", "--input", kFix + "/microdata_four.csv", "--strata", kFix + "/strata_four.csv", "--totals",
             "8,1"})
            .status == 2);
}

TEST_CASE("simulate output is reproducible", "[cli]") {
  const std::vector<std::string> base{"simulate", "--input", kFix + "/sim_small.json", "--replicates", "100",
                                      "--format", "json"};
  auto with_threads = [&](const char* t) {
    auto args = base;
    args.insert(args.end(), {"--threads", t});
    return run(args);
  };
  const auto a = with_threads("1");
  REQUIRE(a.status == 0);
  CHECK(with_threads("1").out == a.out);
  CHECK(with_threads("2").out == a.out);
  CHECK(with_threads("8").out == a.out);
  const auto doc = nfu::json::parse(a.out);
  CHECK(doc["replicates"].get<int>() == 100);

  auto reseeded = base;
  reseeded.insert(reseeded.end(), {"--seed", "5"});
  CHECK(run(reseeded).out != a.out);

  const auto cmp = run({"simulate", "--input", kFix + "/sim_small.json", "--replicates", "20", "--compare",
                        "optimal,uniform", "--format", "json"});
  REQUIRE(cmp.status == 0);
  CHECK(nfu::json::parse(cmp.out)["strategies"].size() == 2);

  const auto bad = temp_file("bad.json", "{\"strata\": [");
  CHECK(run({"simulate", "--input", bad}).status == 2);
  std::remove(bad.c_str());
}

TEST_CASE("propensity picks k = 5 on the bundled pool", "[cli]") {
  const auto r = run({"propensity", "--input", kFix + "/propensity_units.csv", "--k-candidates", "1..15", "--folds",
                      "10", "--seed", "2024"});
  REQUIRE(r.status == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("chosen k: 5"));

  const auto j = run({"propensity", "--input", kFix + "/propensity_units.csv", "--k", "3", "--format", "json"});
  REQUIRE(j.status == 0);
  const auto doc = nfu::json::parse(j.out);
  CHECK(doc["imputed"].size() == 5);
  CHECK(doc["assignments"].size() == 213);
  int total = 0;
  for (const auto& g : doc["rhg_counts"]) total += g["n"].get<int>();
  CHECK(total == 213);

  CHECK(run({"propensity", "--input", kFix + "/propensity_units.csv", "--k-candidates", "1..500"}).status == 2);
}

TEST_CASE("help exits cleanly", "[cli]") {
  const auto r = run({"--help"});
  CHECK(r.status == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("allocate"));
  const auto sub = run({"allocate", "--help"});
  CHECK(sub.status == 0);
  CHECK_THAT(sub.out, Catch::Matchers::ContainsSubstring("--budget"));
}
