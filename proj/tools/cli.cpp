#include "cli.hpp"

#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qkd/config.hpp"
#include "qkd/core_stats.hpp"
#include "qkd/csv.hpp"
#include "qkd/keyrate.hpp"
#include "qkd/montecarlo.hpp"
#include "qkd/oracle_suite.hpp"
#include "qkd/strategy_a.hpp"
#include "qkd/strategy_b.hpp"

namespace qkd::cli {

namespace {

constexpr std::uint64_t kVerifyPulses = 100'000'000;
// transmittance at which the blocking gain is reported; low enough that
// Eve's line is never capped at t_e = 1
constexpr double kThresholdTab = 1e-3;

struct Options {
  std::string config_path;
  std::string out_path;
  std::vector<std::string> sets;
  std::string seed;
  std::string pulses;
  std::string workers;
  std::string report;
};

// CSV goes to --out when given; otherwise everything goes to out, reports
// as comment lines after the table.
class Output {
 public:
  Output(std::ostream& out, std::string path) : out_(out), path_(std::move(path)) {}

  void report(const std::string& line) { reports_.push_back(line); }

  void finish(const std::string& csv) {
    if (path_.empty()) {
      out_ << csv;
      for (const auto& r : reports_) out_ << "# " << r << '\n';
      return;
    }
    std::ofstream file(path_, std::ios::binary);
    if (!file) throw ConfigError(fmt::format("cannot write '{}'", path_));
    file << csv;
    for (const auto& r : reports_) out_ << r << '\n';
  }

 private:
  std::ostream& out_;
  std::string path_;
  std::vector<std::string> reports_;
};

std::vector<std::string> header(std::string_view subcommand, const RunConfig& cfg) {
  std::vector<std::string> lines{fmt::format("qkd-eve-lab {}", subcommand)};
  // worker count never changes a result
  for (auto& l : effective_config(cfg)) {
    if (l.rfind("sim.workers", 0) != 0) lines.push_back(std::move(l));
  }
  return lines;
}

std::string optional_number(const std::optional<double>& v) { return v ? csv_number(*v) : ""; }

void cmd_stats(const RunConfig& cfg, Output& output) {
  CsvTable t({"mu", "distance_km", "t_ab", "p0", "p1", "p2", "p2_second_order", "multi_fraction",
              "multi_fraction_second_order", "p_single", "p_single_linear", "p_coinc", "p_coinc_approx",
              "raw_hz", "sifted_hz"});
  t.comments(header("stats", cfg));
  const auto& det = cfg.system.detector;
  const auto n = static_cast<int>(std::floor((cfg.curve.d_max - cfg.curve.d_min) / cfg.curve.step + 1e-9));
  for (double mu : cfg.mu_list) {
    SourceParams src = cfg.system.source;
    src.mu = mu;
    for (int i = 0; i <= n; ++i) {
      const double d = cfg.curve.d_min + i * cfg.curve.step;
      const double tr = transmission(cfg.system.channel.alpha_ab * d);
      const Rates r = rates(src, tr, det);
      t.row({csv_number(mu), csv_number(d), csv_number(tr), csv_number(poisson_pmf(0, mu)),
             csv_number(poisson_pmf(1, mu)), csv_number(poisson_pmf(2, mu)),
             csv_number(poisson_pmf_second_order(2, mu)), csv_number(multi_photon_fraction(mu)),
             csv_number(multi_photon_fraction(mu, Approx::SecondOrder)), csv_number(p_single(src, tr, det)),
             csv_number(p_single_linear(mu, tr, det.eta_b)), csv_number(p_coinc(src, tr, det)),
             csv_number(p_coinc_approx(mu, tr, det.eta_b, det.mode)), csv_number(r.raw_hz),
             csv_number(r.sifted_hz)});
    }
    if (!src.second_order_valid()) {
      output.report(fmt::format("warning: mu = {} is above {}, second-order columns are unreliable", mu,
                                kSecondOrderMaxMu));
    }
  }
  output.finish(t.str());
}

void cmd_strategy_a(const RunConfig& cfg, Output& output) {
  const double mu = cfg.system.source.mu;
  const double alpha = cfg.system.channel.alpha_ab;
  CsvTable t({"distance_km", "t_ab", "required", "usage_a", "usage_b", "usage_c", "usage_d", "blind",
              "info_per_error"});
  t.comments(header("strategy-a", cfg));
  for (const auto& row : info_per_error_curve(mu, alpha, cfg.curve.d_min, cfg.curve.d_max, cfg.curve.step)) {
    const CaseMix& m = row.mix;
    t.row({csv_number(row.distance_km), csv_number(row.t_ab), csv_number(m.required_rate),
           csv_number(m.usage_of(Case::A)), csv_number(m.usage_of(Case::B)), csv_number(m.usage_of(Case::C)),
           csv_number(m.usage_of(Case::D)), csv_number(m.blind), optional_number(row.ratio)});
  }
  if (!case_table_valid(mu)) output.report(fmt::format("warning: case table is unreliable at mu = {}", mu));
  output.report(fmt::format("pure case B from {:.2f} km (mu = {}, alpha_ab = {} dB/km)",
                            pure_b_threshold_distance_km(mu, alpha), mu, alpha));
  output.report(fmt::format("info per error plateau {:.4f}", case_table(mu)[1].ratio()));
  output.finish(t.str());
}

void cmd_strategy_b(const RunConfig& cfg, const Options& opts, Output& output) {
  const double mu = cfg.system.source.mu;
  const double eta = cfg.system.detector.eta_b;
  const SystemConfig here = cfg.system.at_distance(cfg.alarm.distance_km);
  const double t_ab = here.channel.t_ab();
  const double gain = std::max(0.0, eve_gain_db(here.channel, cfg.system.keyrate.monitor_tof));
  const double t_e = std::min(1.0, t_ab * std::pow(10.0, gain / 10.0));
  const double n_pulses = cfg.system.keyrate.alarm_pulses;
  StealthOptions options;
  options.mode = cfg.system.detector.mode;

  CsvTable t({"gamma", "lambda", "coinc_clean", "coinc_attack", "sigma", "z", "info", "stealthy"});
  t.comments(header("strategy-b", cfg));
  for (const auto& row : alarm_curve(mu, t_ab, t_e, eta, n_pulses, cfg.alarm.gamma_step, options)) {
    t.row({csv_number(row.gamma), csv_number(row.lambda), csv_number(row.alarm.expected_coinc_clean),
           csv_number(row.alarm.expected_coinc_attack), csv_number(row.alarm.sigma), csv_number(row.alarm.z_score),
           csv_number(row.info), row.alarm.stealthy() ? "1" : "0"});
  }
  const StealthSolution best = max_stealth_info(mu, t_ab, t_e, eta, n_pulses, options);
  output.report(fmt::format("distance {} km, Eve gain {:.2f} dB, t_ab {:.6g}, t_e {:.6g}", cfg.alarm.distance_km,
                            gain, t_ab, t_e));
  output.report(fmt::format("max stealthy information {:.5f} at lambda {:.5f} gamma {:.5f} (z = {:.3f}{})",
                            best.info, best.attack.lambda, best.attack.gamma, best.z_score,
                            best.fallback ? ", plain beamsplitter" : ""));
  if (opts.report == "thresholds") {
    const double second = blocking_threshold_gain_db(mu, kThresholdTab, eta, PhotonForm::SecondOrder);
    const double exact = blocking_threshold_gain_db(mu, kThresholdTab, eta, PhotonForm::Exact);
    output.report(fmt::format("blocking gain {:.2f} dB (second-order singles, t_ab = t_e mu/4)", second));
    output.report(fmt::format("blocking gain {:.2f} dB (exact singles)", exact));
    output.report(fmt::format("single-coupler information at 3 dB {:.5f} (mu/8 = {:.5f})",
                              cascade_info_bound(mu, 10.0 * std::log10(2.0), 1), mu / 8.0));
    for (double g : {3.0, 6.0, 10.0}) {
      output.report(fmt::format("cascade bound at {:.0f} dB: {:.5f} ({:.1f}% of mu/4)", g, cascade_info_bound(mu, g),
                                100.0 * cascade_info_bound(mu, g) / (mu / 4.0)));
    }
  }
  output.finish(t.str());
}

void cmd_rates(const RunConfig& cfg, Output& output) {
  CsvTable t({"eve", "mu", "distance_km", "t_ab", "qber_mes", "i_eve", "mu_opt", "r_net_normalized",
              "r_net_relative"});
  t.comments(header("rates", cfg));
  const auto& c = cfg.curve;
  auto emit = [&](EveModel m, const SystemConfig& sys, const std::string& mu_label) {
    for (const auto& p : curve(m, sys, c.d_min, c.d_max, c.step, cfg.workers)) {
      t.row({std::string(to_string(m)), mu_label, csv_number(p.distance_km), csv_number(p.t_ab),
             csv_number(p.qber.qber_mes), csv_number(p.i_eve), optional_number(p.mu_opt), csv_number(p.r_net),
             csv_number(p.r_net_relative)});
    }
    const MaxDistance md = max_distance(m, sys);
    output.report(md.bounded ? fmt::format("max distance {} mu={}: {:.1f} km", to_string(m), mu_label, md.km)
                             : fmt::format("max distance {} mu={}: unbounded at grid limit ({} km)", to_string(m),
                                           mu_label, kMaxDistanceLimitKm));
  };
  for (double mu : cfg.mu_list) {
    SystemConfig sys = cfg.system;
    sys.source.mu = mu;
    for (EveModel m : {EveModel::None, EveModel::StrategyA, EveModel::StrategyB, EveModel::StrategyBStorage}) {
      emit(m, sys, csv_number(mu));
    }
  }
  emit(EveModel::Unlimited, cfg.system, "opt");
  output.finish(t.str());
}

void cmd_montecarlo(const RunConfig& cfg, Output& output) {
  const SimConfig sim = cfg.sim_config();
  const SimResult r = simulate(sim);
  std::string csv;
  for (const auto& l : header("montecarlo", cfg)) csv += fmt::format("# {}\n", l);
  csv += result_csv(r);
  for (const auto& check : compare(r, analytic_expectations(sim)).checks) {
    output.report(fmt::format("{}: expected {:.6g}, simulated {:.6g}, z = {:.2f}", check.name, check.expected,
                              check.estimate, check.z));
  }
  output.finish(csv);
}

int cmd_verify(const RunConfig& cfg, const Options& opts, Output& output) {
  const std::uint64_t pulses = opts.pulses.empty() ? kVerifyPulses : cfg.pulses;
  const auto outcomes = run_oracle_suite(oracle_cases(cfg.system, pulses, cfg.seed, cfg.workers));
  std::string csv = fmt::format("# qkd-eve-lab verify\n# sim.pulses = {}\n# sim.seed = {}\n", pulses, cfg.seed);
  csv += oracle_report_csv(outcomes);
  std::size_t n_checks = 0;
  std::size_t n_fail = 0;
  for (const auto& o : outcomes) {
    for (const auto& c : o.report.checks) {
      ++n_checks;
      if (!c.pass) {
        ++n_fail;
        output.report(fmt::format("FAIL {} {}: z = {:.2f}", o.name, c.name, c.z));
      }
    }
  }
  const bool ok = n_fail == 0;
  output.report(fmt::format("verify: {} cases, {} checks, {} beyond {} sigma: {}", outcomes.size(), n_checks, n_fail,
                            kOracleSigmas, ok ? "PASS" : "FAIL"));
  output.finish(csv);
  return ok ? kExitOk : kExitVerify;
}

RunConfig build_config(const Options& opts) {
  RunConfig cfg;
  if (!opts.config_path.empty()) apply_file(cfg, opts.config_path);
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", s));
    set_value(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!opts.seed.empty()) set_value(cfg, "sim.seed", opts.seed);
  if (!opts.pulses.empty()) set_value(cfg, "sim.pulses", opts.pulses);
  if (!opts.workers.empty()) set_value(cfg, "sim.workers", opts.workers);
  cfg.validate();
  return cfg;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Eavesdropping analysis for faint-pulse BB84", "qkd-eve-lab"};
  app.require_subcommand(1);
  Options opts;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"stats", "photon statistics and detection probabilities over mu and distance"},
      {"strategy-a", "intercept-resend information per error versus distance"},
      {"strategy-b", "beamsplitter attack: coincidence alarm versus shutter fraction"},
      {"rates", "net key rate curves and maximum distances for every Eve model"},
      {"montecarlo", "pulse-level simulation of the configured system"},
      {"verify", "simulation against the analytic results, nonzero exit past 3 sigma"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", opts.config_path, "key=value config file");
    sub->add_option("--out", opts.out_path, "CSV output path");
    sub->add_option("--set", opts.sets, "override key=value (repeatable)")->take_all();
    sub->add_option("--seed", opts.seed, "simulation seed");
    sub->add_option("--pulses", opts.pulses, "number of simulated pulses");
    sub->add_option("--workers", opts.workers, "worker threads");
    sub->add_option("--report", opts.report, "extra report (strategy-b: thresholds)")
        ->check(CLI::IsMember({"thresholds"}));
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const RunConfig cfg = build_config(opts);
    Output output(out, opts.out_path);
    if (name == "stats") {
      cmd_stats(cfg, output);
    } else if (name == "strategy-a") {
      cmd_strategy_a(cfg, output);
    } else if (name == "strategy-b") {
      cmd_strategy_b(cfg, opts, output);
    } else if (name == "rates") {
      cmd_rates(cfg, output);
    } else if (name == "montecarlo") {
      cmd_montecarlo(cfg, output);
    } else {
      return cmd_verify(cfg, opts, output);
    }
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace qkd::cli
