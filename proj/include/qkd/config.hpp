#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qkd/keyrate.hpp"
#include "qkd/montecarlo.hpp"
#include "qkd/strategy_b.hpp"

namespace qkd {

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct CurveSettings {
  double d_min = 0.0;
  double d_max = 250.0;
  double step = 1.0;
};

struct AlarmSettings {
  double distance_km = 60.0;  // Strategy B alarm sweep
  double gamma_step = 0.01;
};

// Everything a run can be configured with.
struct RunConfig {
  SystemConfig system;
  EveModel eve = EveModel::None;
  BeamsplitAttack attack;
  DeficitPolicy deficit = DeficitPolicy::Unset;
  std::uint64_t pulses = 10'000'000'000ull;
  std::uint64_t seed = 1;
  std::uint64_t batch_size = 1u << 20;
  unsigned workers = 1;
  CurveSettings curve;
  AlarmSettings alarm;
  std::vector<double> mu_list{0.05, 0.1, 0.2};

  void validate() const;
  SimConfig sim_config() const;
};

// Apply one key=value. A key may be given by its last component alone
// (mu for source.mu) when that is unambiguous.
void set_value(RunConfig& cfg, std::string_view key, std::string_view value);

// Flat key=value text with # comments; later lines override earlier ones.
void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin = "<text>");
void apply_file(RunConfig& cfg, const std::string& path);

std::vector<std::string> config_keys();
// "key = value" lines in key order, for CSV headers.
std::vector<std::string> effective_config(const RunConfig& cfg);

// Values parsed the way the config reader does it; 1e8 is a valid count.
double parse_double(std::string_view key, std::string_view text);
std::uint64_t parse_count(std::string_view key, std::string_view text);

}  // namespace qkd
