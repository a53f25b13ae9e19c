#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qkd/core_stats.hpp"
#include "qkd/strategy_b.hpp"

using namespace qkd;

namespace {

double poisson_by_product(unsigned n, double mean) {
  double p = std::exp(-mean);
  for (unsigned k = 1; k <= n; ++k) p *= mean / k;
  return p;
}

// Independent route to P'(n): Poisson splitting makes Eve's and Bob's photon
// numbers independent, so P'(n) = Pois(n; (1-l) mu t_e) * P(pulse passes).
double split_oracle(unsigned n, double lambda, double gamma, double t_e, double mu) {
  const double eve_empty = std::exp(-lambda * mu);
  const double pass = (1.0 - eve_empty) + gamma * eve_empty;
  return poisson_by_product(n, (1.0 - lambda) * mu * t_e) * pass;
}

const double kT60 = transmission(15.0);
const double kTe60 = kT60 * std::pow(10.0, 0.6);

}  // namespace

TEST_CASE("photon_dist_prime reduces to Poisson without shutter") {
  for (double te : {1.0, 0.5, 0.1}) {
    for (unsigned n = 1; n <= 5; ++n) {
      CHECK(photon_dist_prime(n, {0.0, 1.0, te}, 0.1) ==
            doctest::Approx(poisson_by_product(n, 0.1 * te)).epsilon(1e-12));
      CHECK(photon_dist_prime(n, {0.3, 1.0, te}, 0.1) ==
            doctest::Approx(poisson_by_product(n, 0.7 * 0.1 * te)).epsilon(1e-12));
    }
  }
  // shutter closed, half the light tapped
  CHECK(photon_dist_prime(1, {0.5, 0.0, 1.0}, 0.1) ==
        doctest::Approx(0.05 * (std::exp(-0.05) - std::exp(-0.1))).epsilon(1e-12));
}

TEST_CASE("photon_dist_prime matches the splitting oracle") {
  for (double lambda : {0.0, 0.2, 0.5, 0.9}) {
    for (double gamma : {0.0, 0.3, 1.0}) {
      for (double te : {1.0, 0.3, 0.01}) {
        for (unsigned n = 1; n <= 6; ++n) {
          CHECK(photon_dist_prime(n, {lambda, gamma, te}, 0.1) ==
                doctest::Approx(split_oracle(n, lambda, gamma, te, 0.1)).epsilon(1e-12));
        }
      }
    }
  }
  CHECK_THROWS_AS(photon_dist_prime(0, {0.5, 0.5, 0.5}, 0.1), std::domain_error);
  CHECK_THROWS_AS(photon_dist_prime(1, {1.5, 0.5, 0.5}, 0.1), std::domain_error);
  CHECK_THROWS_AS(photon_dist_prime(1, {0.5, 0.5, 0.0}, 0.1), std::domain_error);
}

TEST_CASE("bob_probs_prime identities") {
  for (PhotonForm form : {PhotonForm::Exact, PhotonForm::Leading, PhotonForm::SecondOrder}) {
    const BobProbs clean = bob_probs_clean(0.1, kT60, 0.1, BasisMode::Active, form);
    const BobProbs same = bob_probs_prime({0.0, 1.0, kT60}, 0.1, 0.1, BasisMode::Active, form);
    CHECK(same.p_single == doctest::Approx(clean.p_single).epsilon(1e-14));
    CHECK(same.p_coinc == doctest::Approx(clean.p_coinc).epsilon(1e-14));
    const BobProbs split = bob_probs_prime({0.5, 1.0, 2.0 * kT60}, 0.1, 0.1, BasisMode::Active, form);
    CHECK(split.p_single == doctest::Approx(clean.p_single).epsilon(1e-14));
  }
  // the exact clean reference is the core-stats one
  const BobProbs clean = bob_probs_clean(0.1, kT60, 0.1);
  CHECK(clean.p_single == doctest::Approx(p_single(0.1, kT60, 0.1)).epsilon(1e-15));
  CHECK(clean.p_coinc == doctest::Approx(p_coinc(0.1, kT60, 0.1, BasisMode::Active)).epsilon(1e-15));
  // Leading form is eta P'(1) and (1/4) eta^2 P'(2)
  const BeamsplitAttack attack{0.5, 0.5, 0.0632};
  const BobProbs lead = bob_probs_prime(attack, 0.1, 0.1, BasisMode::Active, PhotonForm::Leading);
  CHECK(lead.p_single == doctest::Approx(0.1 * photon_dist_prime(1, attack, 0.1)).epsilon(1e-13));
  CHECK(lead.p_coinc == doctest::Approx(0.25 * 0.01 * photon_dist_prime(2, attack, 0.1)).epsilon(1e-13));
}

TEST_CASE("distribution normalization") {
  for (int i = 0; i <= 10; ++i) {
    for (int j = 0; j <= 10; ++j) {
      for (double te : {1.0, 0.2, 0.02}) {
        const BeamsplitAttack a{i / 10.0, j / 10.0, te};
        double sum = photon_dist_prime_zero(a, 0.1);
        for (unsigned n = 1; n <= 10; ++n) sum += photon_dist_prime(n, a, 0.1);
        CHECK(std::abs(sum - 1.0) < 1e-9);
      }
    }
  }
}

TEST_CASE("solve_gamma") {
  // matched beamsplitter with a 3 dB coupler
  const GammaSolution half = solve_gamma(0.1, kT60, 0.5, 2.0 * kT60);
  REQUIRE(half.feasible());
  CHECK(half.gamma == doctest::Approx(1.0).epsilon(1e-12));

  // full blocking threshold t_ab = t_e mu / 4 in the second-order form
  const double te = 0.4;
  const GammaSolution block = solve_gamma(0.1, te * 0.1 / 4.0, 0.5, te, 0.1, PhotonForm::SecondOrder);
  REQUIRE(block.feasible());
  CHECK(block.gamma == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(block.gamma) < 1e-12);
  CHECK(solve_gamma(0.1, te * 0.1 / 4.0 * 0.99, 0.5, te, 0.1, PhotonForm::SecondOrder).status ==
        GammaStatus::Overshoot);
  CHECK(solve_gamma(0.1, kT60, 0.9, kT60 * 2.0).status == GammaStatus::Undershoot);

  // gamma = 0 boundary in dB
  const double t100 = transmission(25.0);
  CHECK(blocking_threshold_gain_db(0.1, t100, 0.1, PhotonForm::SecondOrder) ==
        doctest::Approx(10.0 * std::log10(40.0)).epsilon(1e-9));
  const double exact = blocking_threshold_gain_db(0.1, t100, 0.1, PhotonForm::Exact);
  CHECK(exact > 16.02);
  CHECK(exact < 16.2);
  CHECK(std::isinf(blocking_threshold_gain_db(0.1, kT60, 0.1)));
}

TEST_CASE("solve_gamma round trip reproduces clean singles") {
  for (PhotonForm form : {PhotonForm::Exact, PhotonForm::Leading, PhotonForm::SecondOrder}) {
    const double clean = bob_probs_clean(0.1, kT60, 0.1, BasisMode::Active, form).p_single;
    for (int i = 0; i <= 100; ++i) {
      const double lambda = i / 100.0;
      for (double ratio : {1.5, 4.0, 20.0, 31.0}) {
        const double te = kT60 * ratio;
        const GammaSolution gs = solve_gamma(0.1, kT60, lambda, te, 0.1, form);
        if (!gs.feasible()) continue;
        const BobProbs p = bob_probs_prime({lambda, gs.gamma, te}, 0.1, 0.1, BasisMode::Active, form);
        CHECK(std::abs(p.p_single - clean) < 1e-10 * clean);
      }
    }
  }
}

TEST_CASE("solve_lambda picks the low-coincidence branch") {
  const auto l = solve_lambda(0.1, kT60, 1.0, kTe60);
  REQUIRE(l);
  CHECK(*l == doctest::Approx(1.0 - kT60 / kTe60).epsilon(1e-12));
  const auto l2 = solve_lambda(0.1, kT60, 0.5, kTe60);
  REQUIRE(l2);
  CHECK(solve_gamma(0.1, kT60, *l2, kTe60).gamma == doctest::Approx(0.5).epsilon(1e-9));
  CHECK_FALSE(solve_lambda(0.1, kT60, 0.0, kTe60));  // 6 dB cannot afford blocking
}

TEST_CASE("eve_info_b") {
  CHECK(eve_info_b({0.5, 1.0, 0.3}, 0.1) == doctest::Approx(0.0125).epsilon(1e-15));
  for (double l : {0.0, 0.3, 0.9}) CHECK(eve_info_b({l, 0.0, 0.3}, 0.1) == 0.5);
  CHECK(eve_info_b({0.0, 1.0, 0.3}, 0.1) == 0.0);
  CHECK(eve_info_b({1.0, 1.0, 0.3}, 0.1) == 0.0);
  // linear in gamma, maximized over lambda at 1/2 for gamma = 1
  for (double l : {0.1, 0.4, 0.7}) {
    const double i0 = eve_info_b({l, 0.0, 0.3}, 0.1);
    const double i1 = eve_info_b({l, 1.0, 0.3}, 0.1);
    CHECK(eve_info_b({l, 0.25, 0.3}, 0.1) == doctest::Approx(0.75 * i0 + 0.25 * i1).epsilon(1e-14));
    CHECK(i1 < eve_info_b({0.5, 1.0, 0.3}, 0.1));
  }
  // accounting form: ~ lambda mu / 2 unshuttered, 1/2 fully shuttered
  CHECK(eve_info_b_accounting({0.5, 1.0, 0.3}, 0.1) == doctest::Approx(0.5 * (1.0 - std::exp(-0.05))));
  CHECK(eve_info_b_accounting({0.5, 0.0, 0.3}, 0.1) == doctest::Approx(0.5));
  CHECK(eve_info_b_accounting({0.0, 0.0, 0.3}, 0.1) == 0.0);
}

TEST_CASE("cascade_info_bound") {
  CHECK(cascade_info_bound(0.1, 0.0) == 0.0);
  CHECK(cascade_info_bound(0.1, 0.0, 1) == 0.0);
  CHECK(cascade_info_bound(0.1, 10.0 * std::log10(2.0), 1) == doctest::Approx(0.0125).epsilon(1e-12));
  CHECK(cascade_info_bound(0.1, 3.0, 1) == doctest::Approx(0.0125).epsilon(1e-4));
  // one coupler never beats mu/8, however large the gain
  CHECK(cascade_info_bound(0.1, 20.0, 1) == doctest::Approx(0.0125).epsilon(1e-9));
  // continuum: (mu/4)(1 - T^2)
  const double t6 = transmission(6.0);
  CHECK(cascade_info_bound(0.1, 6.0) == doctest::Approx(0.025 * (1.0 - t6 * t6)).epsilon(1e-14));
  CHECK(cascade_info_bound(0.1, 30.0) == doctest::Approx(0.025).epsilon(1e-5));

  for (unsigned n : {0u, 1u, 2u, 5u, 50u}) {
    double prev = 0.0;
    for (int g = 0; g <= 40; ++g) {
      const double b = cascade_info_bound(0.1, 0.5 * g, n);
      CHECK(b >= prev - 1e-15);
      CHECK(b <= 0.025);
      prev = b;
    }
  }
  // more couplers help
  CHECK(cascade_info_bound(0.1, 6.0, 5) > cascade_info_bound(0.1, 6.0, 2));
  CHECK(cascade_info_bound(0.1, 6.0, 50) < cascade_info_bound(0.1, 6.0));
}

TEST_CASE("coincidence alarm at 60 km") {
  const BeamsplitAttack clean_like{1.0 - kT60 / kTe60, 1.0, kTe60};
  const AlarmStats a = coincidence_alarm(clean_like, 0.1, 0.1, kT60, 1e10);
  CHECK(a.expected_coinc_clean == doctest::Approx(124.980237587).epsilon(1e-9));
  CHECK(2.0 * a.sigma == doctest::Approx(22.3589).epsilon(1e-4));
  CHECK(std::abs(a.z_score) < 1e-9);
  CHECK(a.stealthy());

  const auto l = solve_lambda(0.1, kT60, 0.7, kTe60);
  REQUIRE(l);
  const AlarmStats b = coincidence_alarm({*l, 0.7, kTe60}, 0.1, 0.1, kT60, 1e10);
  CHECK(b.z_score > 0.0);
  CHECK_THROWS(coincidence_alarm(clean_like, 0.1, 0.1, kT60, 0.0));
}

TEST_CASE("matched singles with gamma < 1 always raise coincidences") {
  // grid 20 x 20 x 5; t_ab is chosen so the clean singles equal the attacked.
  // lambda = 0 is left out: with gamma = 0 nothing reaches Bob at all.
  for (PhotonForm form : {PhotonForm::Exact, PhotonForm::SecondOrder}) {
    for (int i = 0; i < 20; ++i) {
      const double lambda = (i + 1) / 21.0;
      for (int j = 0; j < 20; ++j) {
        const double gamma = j / 20.0;
        for (double te : {1.0, 0.5, 0.2, 0.1, 0.05}) {
          const BeamsplitAttack a{lambda, gamma, te};
          const BobProbs p = bob_probs_prime(a, 0.1, 0.1, BasisMode::Active, form);
          const double t_ab = form == PhotonForm::Exact ? -std::log1p(-p.p_single) / (0.1 * 0.1)
                                                        : p.p_single / (0.1 * 0.1);
          const BobProbs c = bob_probs_clean(0.1, t_ab, 0.1, BasisMode::Active, form);
          CHECK(c.p_single == doctest::Approx(p.p_single).epsilon(1e-12));
          CHECK(p.p_coinc > c.p_coinc);
        }
      }
    }
  }
}

TEST_CASE("max_stealth_info at 60 km") {
  const StealthSolution s = max_stealth_info(0.1, kT60, kTe60, 0.1, 1e10);
  CHECK_FALSE(s.fallback);
  CHECK(s.z_score == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(s.attack.gamma < 1.0);
  CHECK(s.info > 0.0125);
  CHECK(s.info < 0.5);
  const BobProbs p = bob_probs_prime(s.attack, 0.1, 0.1);
  CHECK(p.p_single == doctest::Approx(p_single(0.1, kT60, 0.1)).epsilon(1e-10));

  // nothing on the gamma sweep at z <= 2 beats the optimizer
  for (const auto& row : alarm_curve(0.1, kT60, kTe60, 0.1, 1e10, 0.01)) {
    if (row.alarm.z_score <= 2.0) CHECK(row.info <= s.info + 1e-9);
  }
}

TEST_CASE("max_stealth_info limits") {
  // infinitely sensitive alarm: plain beamsplitting
  const StealthSolution tight = max_stealth_info(0.1, kT60, kTe60, 0.1, 1e30);
  CHECK(tight.fallback);
  CHECK(tight.attack.gamma == 1.0);
  CHECK(tight.attack.lambda == doctest::Approx(1.0 - kT60 / kTe60));

  // 20 dB gain and a loose window: full blocking
  const double t120 = transmission(30.0);
  const StealthSolution loose = max_stealth_info(0.1, t120, t120 * 100.0, 0.1, 1e6);
  CHECK(loose.attack.gamma == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(loose.info == doctest::Approx(0.5).epsilon(1e-9));

  // more pulses, less information
  double prev = 1.0;
  for (double n : {1e8, 1e9, 1e10, 1e11, 1e12}) {
    const double info = max_stealth_info(0.1, kT60, kTe60, 0.1, n).info;
    CHECK(info <= prev);
    prev = info;
  }

  StealthOptions unmonitored;
  unmonitored.unmonitored = true;
  CHECK(max_stealth_info(0.1, kT60, kTe60, 0.1, 1e10, unmonitored).info >=
        max_stealth_info(0.1, kT60, kTe60, 0.1, 1e10).info);

  // no gain: nothing to exploit
  const StealthSolution none = max_stealth_info(0.1, kT60, kT60, 0.1, 1e10);
  CHECK(none.info == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS(max_stealth_info(0.1, kT60, kT60 / 2.0, 0.1, 1e10));
}

TEST_CASE("alarm curve") {
  const auto rows = alarm_curve(0.1, kT60, kTe60, 0.1, 1e10, 0.05);
  REQUIRE_FALSE(rows.empty());
  CHECK(rows.back().gamma == 1.0);
  CHECK(std::abs(rows.back().alarm.z_score) < 1e-9);
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i].alarm.z_score > rows[i + 1].alarm.z_score);
    CHECK(rows[i].info > rows[i + 1].info);
  }
}
