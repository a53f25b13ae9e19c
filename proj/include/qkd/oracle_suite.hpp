#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qkd/montecarlo.hpp"

namespace qkd {

struct OracleCase {
  std::string name;
  SimConfig sim;
  std::vector<Expectation> expected;
};

// The fixed set of simulation configurations that cross-check the analytic
// modules, scaled to n_pulses each.
std::vector<OracleCase> oracle_cases(const SystemConfig& base, std::uint64_t n_pulses, std::uint64_t seed,
                                     unsigned workers);

struct OracleOutcome {
  std::string name;
  CompareReport report;
};

std::vector<OracleOutcome> run_oracle_suite(const std::vector<OracleCase>& cases);

bool all_pass(const std::vector<OracleOutcome>& outcomes);

// case,quantity,count,trials,expected,estimate,z,pass
std::string oracle_report_csv(const std::vector<OracleOutcome>& outcomes);

}  // namespace qkd
