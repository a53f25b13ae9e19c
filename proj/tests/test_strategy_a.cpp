#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "qkd/core_stats.hpp"
#include "qkd/strategy_a.hpp"

using namespace qkd;

namespace {

double ratio_of(double info, double errors) { return errors > 0.0 ? info / errors : 0.0; }

}  // namespace

TEST_CASE("case table at mu = 0.1") {
  const auto t = case_table(0.1);
  CHECK(t[0].p_cond == doctest::Approx(0.95));
  CHECK(t[1].p_cond == doctest::Approx(0.025));
  CHECK(t[2].p_cond == doctest::Approx(0.01875));
  CHECK(t[3].p_cond == doctest::Approx(0.00625));
  CHECK(t[1].qber == doctest::Approx(0.146446609407).epsilon(1e-11));
  CHECK(t[0].ratio() == doctest::Approx(2.0));
  CHECK(t[1].ratio() == doctest::Approx(6.82842712475).epsilon(1e-11));
  CHECK(t[2].ratio() == doctest::Approx(4.0));
  CHECK(t[3].ratio() == 0.0);
  CHECK_THROWS_AS(case_table(0.0), std::domain_error);
  CHECK(case_table_valid(0.1));
  CHECK_FALSE(case_table_valid(0.5));
}

TEST_CASE("case probabilities sum as constructed") {
  for (double mu : {0.01, 0.05, 0.1, 0.2}) {
    const auto t = case_table(mu);
    CHECK(t[1].p_cond + t[2].p_cond + t[3].p_cond == doctest::Approx(mu / 2.0).epsilon(1e-14));
    CHECK(t[0].p_cond == doctest::Approx(1.0 - mu / 2.0).epsilon(1e-14));
    double sum = 0.0;
    for (const auto& row : t) sum += row.p_cond;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("allocate at 80 km is pure case B") {
  const double t = transmission(0.25 * 80.0);
  const CaseMix mix = allocate(0.1, t);
  CHECK(mix.required_rate == doctest::Approx(1e-3));
  CHECK(mix.supply_of(Case::B) == doctest::Approx(2.37906454910e-3).epsilon(1e-10));
  CHECK(mix.usage_of(Case::B) == doctest::Approx(1e-3));
  CHECK(mix.usage_of(Case::A) == 0.0);
  CHECK(mix.usage_of(Case::C) == 0.0);
  CHECK_FALSE(mix.deficit);
  CHECK(*info_per_error(mix) == doctest::Approx(6.82842712475));
}

TEST_CASE("case B exhaustion boundary near 65 km") {
  CHECK(pure_b_threshold_transmittance(0.1) == doctest::Approx(0.0237906454910).epsilon(1e-10));
  CHECK(pure_b_threshold_distance_km(0.1, 0.25) == doctest::Approx(64.9437509787).epsilon(1e-9));

  const double t = pure_b_threshold_transmittance(0.1);
  const CaseMix at = allocate(0.1, t);
  CHECK(at.usage_of(Case::B) == doctest::Approx(at.supply_of(Case::B)));
  CHECK(at.usage_of(Case::C) == doctest::Approx(0.0).epsilon(1e-15));

  // just above the threshold: a little C joins, ratio in (4, 6.83]
  const CaseMix above = allocate(0.1, t * 1.05);
  CHECK(above.usage_of(Case::C) > 0.0);
  const double r = *info_per_error(above);
  CHECK(r > 4.0);
  CHECK(r <= case_table(0.1)[1].ratio());
}

TEST_CASE("short fibers run a deficit dominated by case A") {
  const CaseMix mix = allocate(0.1, 1.0);
  CHECK(mix.deficit);
  CHECK(mix.blind == doctest::Approx(0.1 - (1.0 - std::exp(-0.1))));
  CHECK(mix.usage_of(Case::A) > 0.9 * mix.required_rate);
  for (Case c : kAllCases) CHECK(mix.usage_of(c) == doctest::Approx(mix.supply_of(c)));
  CHECK(*info_per_error(mix) < 2.0);
  CHECK(mix.total_usage() == doctest::Approx(mix.required_rate));
}

TEST_CASE("pure mixes reproduce the table ratios") {
  CaseMix pure_a;
  pure_a.usage[0] = 1e-3;
  CHECK(*info_per_error(pure_a) == doctest::Approx(2.0));
  CaseMix pure_b;
  pure_b.usage[1] = 1e-3;
  CHECK(*info_per_error(pure_b) == doctest::Approx(6.82842712475));
  CaseMix empty;
  CHECK_FALSE(info_per_error(empty).has_value());

  CHECK(attributed_info(pure_b, 0.01) == doctest::Approx(0.0682842712475));
  CHECK(attributed_info(pure_a, 0.01) == doctest::Approx(0.02));
  CHECK(attributed_info(pure_b, 0.0) == 0.0);
  CHECK(attributed_info(pure_a, 0.0) == 0.0);
  CHECK_THROWS_AS(attributed_info(pure_b, 0.2), std::domain_error);
  CHECK_THROWS_AS(attributed_info(pure_b, -0.01), std::domain_error);
}

TEST_CASE("greedy allocation beats every feasible mix on a coarse grid") {
  for (double mu : {0.05, 0.1, 0.2}) {
    for (double d : {0.0, 10.0, 30.0, 50.0, 60.0, 64.0, 70.0, 100.0}) {
      const double t = transmission(0.25 * d);
      const CaseMix greedy = allocate(mu, t);
      const double best = info_per_error(greedy).value();
      const double need = greedy.required_rate;

      // choose B and C usage on a grid; A then absorbs the rest, D and
      // blind resends cover whatever A cannot
      for (int ib = 0; ib <= 10; ++ib) {
        for (int ic = 0; ic <= 10; ++ic) {
          const double b = greedy.supply_of(Case::B) * ib / 10.0;
          const double c = greedy.supply_of(Case::C) * ic / 10.0;
          if (b + c > need) continue;
          double rest = need - b - c;
          const double a = std::min(rest, greedy.supply_of(Case::A));
          rest -= a;
          const double dd = std::min(rest, greedy.supply_of(Case::D));
          rest -= dd;
          const double info = b * 1.0 + c * (2.0 / 3.0) + a * 0.5;
          const double errors = b * case_qber(Case::B) + c / 6.0 + a * 0.25 + (dd + rest) * 0.5;
          CHECK(ratio_of(info, errors) <= best + 1e-12);
        }
      }
    }
  }
}

TEST_CASE("info per error is non-decreasing with distance until pure B") {
  const auto rows = info_per_error_curve(0.1, 0.25, 0.0, 150.0, 0.5);
  REQUIRE(rows.size() == 301);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(*rows[i].ratio >= *rows[i - 1].ratio - 1e-12);
  }
  CHECK(*rows.back().ratio == doctest::Approx(6.82842712475));
  // saturation from the crossover on
  for (const auto& row : rows) {
    if (row.distance_km > 65.0) CHECK(*row.ratio == doctest::Approx(6.82842712475));
    if (row.distance_km < 64.0) CHECK(*row.ratio < 6.8);
  }
}

TEST_CASE("required rate equals Bob's linear singles over eta") {
  for (double mu : {0.05, 0.1, 0.2}) {
    for (double d : {20.0, 60.0, 120.0}) {
      const double t = transmission(0.25 * d);
      for (double eta : {0.05, 0.1, 0.6}) {
        const double linear = p_single_linear(mu, t, eta) / eta;
        CHECK(std::abs(allocate(mu, t).required_rate - linear) / linear < 0.01);
        // the exact singles agree within 1% in the linear regime too
        if (mu * t * eta < 0.02) {
          CHECK(std::abs(allocate(mu, t).required_rate - p_single(mu, t, eta) / eta) / linear < 0.01);
        }
      }
    }
  }
}
