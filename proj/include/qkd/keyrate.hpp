#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "qkd/core_stats.hpp"
#include "qkd/strategy_b.hpp"

namespace qkd {

enum class EveModel { None, StrategyA, StrategyB, StrategyBStorage, Unlimited };

inline constexpr EveModel kAllEveModels[] = {EveModel::None, EveModel::StrategyA, EveModel::StrategyB,
                                             EveModel::StrategyBStorage, EveModel::Unlimited};

std::string_view to_string(EveModel m);
std::optional<EveModel> parse_eve_model(std::string_view s);

// How Eve's information is removed from the corrected key.
//   Multiplicative  (1 - f h(Q))_+ (1 - I)
//   Subtractive     (1 - f h(Q) - I)_+
enum class SecretFraction { Multiplicative, Subtractive };

struct KeyrateParams {
  double qber_opt = 0.005;
  double attrib_floor = 0.01;  // QBER always charged to Eve
  double f_ec = 1.0;           // error-correction inefficiency, >= 1
  SecretFraction secret_fraction = SecretFraction::Multiplicative;
  bool monitor_tof = true;       // Eve can only exploit better fiber, not a shortcut
  bool unmonitored = false;      // Bob ignores coincidences (Strategy B worst case)
  double alarm_pulses = 1e10;    // pulses in Bob's coincidence statistics

  void validate() const;
};

struct SystemConfig {
  SourceParams source;
  ChannelParams channel;
  DetectorParams detector;
  KeyrateParams keyrate;

  void validate() const;
  // Same system with the installed fiber set to distance_km.
  SystemConfig at_distance(double distance_km) const;
};

double binary_entropy(double x);

struct QberBudget {
  double qber_opt;
  double qber_det;
  double qber_mes;
  double qber_attrib;
};

QberBudget qber_model(double distance_km, const SystemConfig& cfg);

struct RatePoint {
  double distance_km;
  double t_ab;
  QberBudget qber;
  double i_eve;
  std::optional<double> mu_opt;  // Unlimited only
  double r_net;                  // secret bits per pulse
  double r_net_relative;         // r_net over the 0 km value without Eve
};

// Information Eve holds per sifted bit at this distance, at the configured mu.
double eve_information(double distance_km, EveModel eve, const SystemConfig& cfg);

double secret_fraction(double qber_mes, double i_eve, const KeyrateParams& params);

RatePoint net_rate(double distance_km, EveModel eve, const SystemConfig& cfg);

struct UnlimitedPoint {
  std::optional<double> mu_opt;  // empty when no mu gives a positive rate
  double r_net;
  double i_eve;
};

// Unlimited-technology Eve: I = min(1, P(n >= 2)/(mu t_ab eta_b)),
// rate maximized over mu in (0, 1].
double unlimited_info(double mu, double t_ab, double eta_b);
double unlimited_objective(double mu, double distance_km, const SystemConfig& cfg);
UnlimitedPoint unlimited_rate(double distance_km, const SystemConfig& cfg);

inline constexpr double kMaxDistanceLimitKm = 500.0;

struct MaxDistance {
  double km;      // last distance with r_net > 0, to 0.1 km
  bool bounded;   // false: still positive at the grid limit
};

MaxDistance max_distance(EveModel eve, const SystemConfig& cfg);

std::vector<RatePoint> curve(EveModel eve, const SystemConfig& cfg, double d_min, double d_max,
                             double step, unsigned workers = 1);

}  // namespace qkd
