#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkd/keyrate.hpp"
#include "qkd/strategy_b.hpp"

namespace qkd {

// What Strategy A does when her case supply cannot cover Bob's expected
// counts (short fibers).
enum class DeficitPolicy {
  Unset,  // refuse to run if a deficit occurs
  Blind,  // resend random states on empty pulses to fill the gap
  Short,  // leave Bob short of counts
};

inline constexpr unsigned kMaxPhotons = 20;

struct SimConfig {
  SystemConfig system;  // channel.length_ab is the simulated distance
  EveModel eve = EveModel::None;
  BeamsplitAttack attack;  // Strategy B only
  DeficitPolicy deficit = DeficitPolicy::Unset;
  std::uint64_t n_pulses = 1'000'000;
  std::uint64_t seed = 1;
  std::uint64_t batch_size = 1u << 20;
  unsigned workers = 1;

  void validate() const;
};

struct Estimate {
  double value;
  double sigma;  // binomial sqrt(p(1-p)/n)
};

struct SimResult {
  std::uint64_t pulses = 0;
  std::uint64_t singles = 0;        // pulses with at least one click
  std::uint64_t double_clicks = 0;  // both gated detectors
  std::uint64_t coincidences = 0;   // double clicks with Bob in the wrong basis
  std::uint64_t sifted = 0;
  std::uint64_t errors = 0;
  std::uint64_t eve_known = 0;      // sifted bits Eve knows with certainty after sifting
  std::uint64_t arrivals_1 = 0;     // pulses with exactly one photon entering Bob's setup
  std::uint64_t arrivals_2 = 0;
  std::uint64_t eve_detected = 0;   // pulses in which Eve saw at least one photon
  std::uint64_t resends = 0;

  SimResult& operator+=(const SimResult& o);
  bool operator==(const SimResult& o) const = default;

  static Estimate ratio(std::uint64_t k, std::uint64_t n);
  Estimate p_single() const { return ratio(singles, pulses); }
  Estimate p_coinc() const { return ratio(coincidences, pulses); }
  Estimate qber() const { return ratio(errors, sifted); }
  Estimate eve_known_fraction() const { return ratio(eve_known, sifted); }
};

SimResult simulate(const SimConfig& cfg);

// One quantity compared against its analytic value.
struct Check {
  std::string name;
  std::uint64_t count;
  std::uint64_t trials;
  double expected;
  double estimate;
  double sigma;
  double z;
  bool pass;
};

inline constexpr double kOracleSigmas = 3.0;

Check make_check(std::string name, std::uint64_t count, std::uint64_t trials, double expected);

struct Expectation {
  std::string name;
  std::uint64_t SimResult::*count;
  std::uint64_t SimResult::*trials;
  double value;
};

struct CompareReport {
  std::vector<Check> checks;
  bool pass() const;
};

CompareReport compare(const SimResult& sim, const std::vector<Expectation>& expected);

// Analytic counterparts of the tallies for the configuration; quantities
// without a closed form in the model are left out.
std::vector<Expectation> analytic_expectations(const SimConfig& cfg);

// quantity,count,trials,estimate,sigma rows.
std::string result_csv(const SimResult& r);

}  // namespace qkd
