#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qkd/montecarlo.hpp"
#include "qkd/oracle_suite.hpp"

using namespace qkd;

namespace {

SimConfig base_sim(double km, EveModel eve = EveModel::None) {
  SimConfig sim;
  sim.system = SystemConfig{}.at_distance(km);
  sim.eve = eve;
  sim.n_pulses = 300'000;
  sim.seed = 42;
  return sim;
}

}  // namespace

TEST_CASE("result independent of workers and batch size") {
  for (EveModel eve : {EveModel::None, EveModel::StrategyA, EveModel::StrategyB, EveModel::StrategyBStorage}) {
    SimConfig sim = base_sim(30.0, eve);
    sim.deficit = DeficitPolicy::Blind;
    sim.attack = {0.5, 0.5, 0.05};
    sim.system.detector.eta_b = 1.0;  // more clicks, more branches exercised
    const SimResult ref = simulate(sim);
    CHECK(ref.pulses == sim.n_pulses);
    for (unsigned w : {2u, 3u, 8u}) {
      for (std::uint64_t b : {std::uint64_t{1000}, std::uint64_t{77777}, std::uint64_t{1} << 20}) {
        SimConfig other = sim;
        other.workers = w;
        other.batch_size = b;
        CHECK(simulate(other) == ref);
      }
    }
  }
}

TEST_CASE("seed changes the sample") {
  SimConfig a = base_sim(0.0);
  a.system.detector.eta_b = 1.0;
  SimConfig b = a;
  b.seed = 43;
  CHECK_FALSE(simulate(a) == simulate(b));
}

TEST_CASE("simulation matches the analytic values at small N") {
  // ~50 checks: at 3 sigma one stray point is expected every few seeds, so
  // this tier only guards against gross errors
  const auto cases = oracle_cases(SystemConfig{}, 1'000'000, 7, 1);
  CHECK(cases.size() >= 10);
  for (const auto& o : run_oracle_suite(cases)) {
    for (const auto& c : o.report.checks) {
      INFO(o.name, " ", c.name, " z=", c.z);
      CHECK(std::abs(c.z) <= 4.5);
    }
  }
}

TEST_CASE("strategy A tallies") {
  SimConfig sim = base_sim(80.0, EveModel::StrategyA);
  sim.n_pulses = 2'000'000;
  const SimResult r = simulate(sim);
  CHECK(r.resends > 0);
  CHECK(r.eve_known > 0);
  CHECK(r.eve_known <= r.sifted);
  CHECK(compare(r, analytic_expectations(sim)).pass());
}

TEST_CASE("make_check edge cases") {
  const Check exact = make_check("zero", 0, 1000, 0.0);
  CHECK(exact.pass);
  CHECK(exact.z == 0.0);
  CHECK_FALSE(make_check("zero", 1, 1000, 0.0).pass);
  CHECK(make_check("one", 1000, 1000, 1.0).pass);
  CHECK_FALSE(make_check("one", 999, 1000, 1.0).pass);
  const Check c = make_check("half", 5300, 10000, 0.5);
  CHECK(c.z == doctest::Approx(6.0));
  CHECK_FALSE(c.pass);
}

TEST_CASE("configuration errors") {
  SimConfig unlimited = base_sim(20.0, EveModel::Unlimited);
  CHECK_THROWS_AS(simulate(unlimited), std::invalid_argument);

  // A cannot fill Bob's counts on a short line without a deficit policy
  SimConfig near = base_sim(0.5, EveModel::StrategyA);
  CHECK_THROWS_AS(simulate(near), std::invalid_argument);
  near.deficit = DeficitPolicy::Short;
  CHECK_NOTHROW(simulate(near));

  SimConfig bad = base_sim(20.0, EveModel::StrategyB);
  bad.attack = {1.5, 0.5, 0.1};
  CHECK_THROWS(simulate(bad));

  SimConfig zero = base_sim(20.0);
  zero.n_pulses = 0;
  CHECK_THROWS_AS(simulate(zero), std::invalid_argument);
}

TEST_CASE("result csv") {
  SimConfig sim = base_sim(0.0);
  sim.n_pulses = 1000;
  const std::string csv = result_csv(simulate(sim));
  CHECK(csv.rfind("quantity,count,trials,estimate,sigma\n", 0) == 0);
  CHECK(csv.find("\nsingles,") != std::string::npos);
}
