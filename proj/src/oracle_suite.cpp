#include "qkd/oracle_suite.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qkd/csv.hpp"

namespace qkd {

std::vector<OracleCase> oracle_cases(const SystemConfig& base, std::uint64_t n_pulses, std::uint64_t seed,
                                     unsigned workers) {
  std::vector<OracleCase> cases;
  std::uint64_t index = 0;
  auto add = [&](std::string name, SimConfig sim, std::vector<Expectation> extra = {}) {
    sim.n_pulses = n_pulses;
    // distinct stream per case so cases do not share randomness
    sim.seed = seed + 0x9E3779B97F4A7C15ull * ++index;
    sim.workers = workers;
    auto expected = analytic_expectations(sim);
    expected.insert(expected.end(), extra.begin(), extra.end());
    cases.push_back({std::move(name), sim, std::move(expected)});
  };
  auto quiet_at = [&](double km) {
    SimConfig sim;
    sim.system = base.at_distance(km);
    sim.system.detector.p_dark = 0.0;
    sim.system.detector.mode = BasisMode::Active;
    return sim;
  };

  add("none-60km", quiet_at(60.0));
  {
    SimConfig sim = quiet_at(0.0);
    sim.system.detector.eta_b = 1.0;
    add("none-0km-eta1", sim);
  }
  {
    SimConfig sim = quiet_at(60.0);
    sim.system.detector.p_dark = base.detector.p_dark > 0.0 ? base.detector.p_dark : 1e-6;
    add("none-60km-dark", sim);
  }
  for (double km : {80.0, 40.0}) {
    SimConfig sim = quiet_at(km);
    sim.eve = EveModel::StrategyA;
    sim.deficit = DeficitPolicy::Blind;
    add(fmt::format("strategy-a-{}km", km), sim);
  }

  const double t60 = base.at_distance(60.0).channel.t_ab();
  auto beamsplit = [&](const BeamsplitAttack& attack, EveModel eve = EveModel::StrategyB) {
    SimConfig sim = quiet_at(60.0);
    sim.eve = eve;
    sim.attack = attack;
    return sim;
  };
  {
    // matched 3 dB tap: Bob's singles stay those of the clean 60 km line
    SimConfig sim = beamsplit({0.5, 1.0, 2.0 * t60});
    const double clean = p_single(sim.system.source.mu, t60, sim.system.detector.eta_b);
    add("strategy-b-matched", sim, {{"p_single_clean", &SimResult::singles, &SimResult::pulses, clean}});
  }
  add("strategy-b-half", beamsplit({0.5, 0.5, 0.0632}));
  add("strategy-b-half-storage", beamsplit({0.5, 0.5, 0.0632}, EveModel::StrategyBStorage));
  {
    SimConfig sim = beamsplit({0.5, 0.2, 0.8});
    sim.system.source.mu = 0.1;
    sim.system.detector.eta_b = 0.5;
    add("strategy-b-bright", sim);
  }
  add("strategy-b-blocked", beamsplit({0.5, 0.0, 1.0}));

  // points of the coincidence-alarm sweep at 60 km with a 6 dB gain
  const double t_e = std::min(1.0, t60 * std::pow(10.0, 0.6));
  for (double gamma : {0.3, 0.6, 0.9}) {
    const auto lambda = solve_lambda(base.source.mu, t60, gamma, t_e, base.detector.eta_b);
    if (!lambda) continue;
    add(fmt::format("strategy-b-sweep-g{}", gamma), beamsplit({*lambda, gamma, t_e}));
  }
  return cases;
}

std::vector<OracleOutcome> run_oracle_suite(const std::vector<OracleCase>& cases) {
  std::vector<OracleOutcome> out;
  for (const auto& c : cases) out.push_back({c.name, compare(simulate(c.sim), c.expected)});
  return out;
}

bool all_pass(const std::vector<OracleOutcome>& outcomes) {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const OracleOutcome& o) { return o.report.pass(); });
}

std::string oracle_report_csv(const std::vector<OracleOutcome>& outcomes) {
  CsvTable table({"case", "quantity", "count", "trials", "expected", "estimate", "z", "pass"});
  for (const auto& o : outcomes) {
    for (const auto& c : o.report.checks) {
      table.row({o.name, c.name, std::to_string(c.count), std::to_string(c.trials), csv_number(c.expected),
                 csv_number(c.estimate), fmt::format("{:.3f}", c.z), c.pass ? "PASS" : "FAIL"});
    }
  }
  return table.str();
}

}  // namespace qkd
