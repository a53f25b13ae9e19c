#include "qkd/keyrate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

#include "qkd/parallel.hpp"
#include "qkd/strategy_a.hpp"

namespace qkd {

namespace {

constexpr double kGolden = 0.6180339887498949;

template <typename F>
double golden_argmax(F&& f, double lo, double hi, double tol) {
  double a = hi - kGolden * (hi - lo);
  double b = lo + kGolden * (hi - lo);
  double fa = f(a);
  double fb = f(b);
  while (hi - lo > tol * hi) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + kGolden * (hi - lo);
      fb = f(b);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - kGolden * (hi - lo);
      fa = f(a);
    }
  }
  return 0.5 * (lo + hi);
}

void require_distance(double d) {
  if (!(d >= 0.0) || !std::isfinite(d)) throw std::domain_error(fmt::format("distance must be >= 0, got {}", d));
}

double stealth_info(double distance_km, const SystemConfig& cfg) {
  const SystemConfig here = cfg.at_distance(distance_km);
  const double t_ab = here.channel.t_ab();
  const double gain = std::max(0.0, eve_gain_db(here.channel, cfg.keyrate.monitor_tof));
  const double t_e = std::clamp(t_ab * std::pow(10.0, gain / 10.0), t_ab, 1.0);
  StealthOptions options;
  options.mode = cfg.detector.mode;
  options.unmonitored = cfg.keyrate.unmonitored;
  return max_stealth_info(cfg.source.mu, t_ab, t_e, cfg.detector.eta_b, cfg.keyrate.alarm_pulses, options).info;
}

}  // namespace

std::string_view to_string(EveModel m) {
  switch (m) {
    case EveModel::None: return "none";
    case EveModel::StrategyA: return "strategy-a";
    case EveModel::StrategyB: return "strategy-b";
    case EveModel::StrategyBStorage: return "strategy-b-storage";
    case EveModel::Unlimited: return "unlimited";
  }
  return "?";
}

std::optional<EveModel> parse_eve_model(std::string_view s) {
  for (EveModel m : kAllEveModels) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

void KeyrateParams::validate() const {
  if (!(qber_opt >= 0.0 && qber_opt <= 0.5)) throw std::invalid_argument("qber.opt must lie in [0, 0.5]");
  if (!(attrib_floor >= 0.0 && attrib_floor <= 0.5)) {
    throw std::invalid_argument("qber.attrib_floor must lie in [0, 0.5]");
  }
  if (!(f_ec >= 1.0)) throw std::invalid_argument("keyrate.f_ec must be >= 1");
  if (!(alarm_pulses > 0.0)) throw std::invalid_argument("keyrate.alarm_pulses must be > 0");
}

void SystemConfig::validate() const {
  source.validate();
  channel.validate();
  detector.validate();
  keyrate.validate();
  if (channel.alpha_e > channel.alpha_ab) {
    throw std::invalid_argument("channel.alpha_e must not exceed channel.alpha_ab");
  }
}

SystemConfig SystemConfig::at_distance(double distance_km) const {
  SystemConfig out = *this;
  out.channel.length_ab = distance_km;
  if (out.channel.bee_line_d) out.channel.bee_line_d = std::min(*out.channel.bee_line_d, distance_km);
  return out;
}

double binary_entropy(double x) {
  if (!(x >= 0.0 && x <= 1.0)) throw std::domain_error(fmt::format("entropy argument {} outside [0, 1]", x));
  if (x == 0.0 || x == 1.0) return 0.0;
  return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

QberBudget qber_model(double distance_km, const SystemConfig& cfg) {
  require_distance(distance_km);
  const double t = transmission(cfg.channel.alpha_ab * distance_km);
  const double signal = p_single(cfg.source, t, cfg.detector);
  const double noise = cfg.detector.n_gated() * cfg.detector.p_dark;
  const double q_det = signal + noise > 0.0 ? 0.5 * noise / (signal + noise) : 0.0;
  const double q_mes = std::min(0.5, cfg.keyrate.qber_opt + q_det);
  const double q_attrib = std::min(0.5, std::max(cfg.keyrate.attrib_floor, q_mes - q_det));
  return QberBudget{cfg.keyrate.qber_opt, q_det, q_mes, q_attrib};
}

double eve_information(double distance_km, EveModel eve, const SystemConfig& cfg) {
  require_distance(distance_km);
  const double t_ab = transmission(cfg.channel.alpha_ab * distance_km);
  switch (eve) {
    case EveModel::None:
      return 0.0;
    case EveModel::StrategyA: {
      const CaseMix mix = allocate(cfg.source.mu, t_ab);
      // Eve cannot be charged with more errors than resending everything makes
      const double q = std::min(qber_model(distance_km, cfg).qber_attrib, max_qber(mix));
      return attributed_info(mix, q);
    }
    case EveModel::StrategyB:
      return stealth_info(distance_km, cfg);
    case EveModel::StrategyBStorage:
      return std::min(1.0, 2.0 * stealth_info(distance_km, cfg));
    case EveModel::Unlimited:
      return unlimited_info(cfg.source.mu, t_ab, cfg.detector.eta_b);
  }
  return 0.0;
}

double secret_fraction(double qber_mes, double i_eve, const KeyrateParams& params) {
  const double corrected = 1.0 - params.f_ec * binary_entropy(qber_mes);
  if (params.secret_fraction == SecretFraction::Subtractive) return std::max(0.0, corrected - i_eve);
  return std::max(0.0, corrected) * std::max(0.0, 1.0 - i_eve);
}

RatePoint net_rate(double distance_km, EveModel eve, const SystemConfig& cfg) {
  require_distance(distance_km);
  const double t_ab = transmission(cfg.channel.alpha_ab * distance_km);
  const double r0 = 0.5 * p_single(cfg.source, 1.0, cfg.detector) *
                    secret_fraction(qber_model(0.0, cfg).qber_mes, 0.0, cfg.keyrate);

  RatePoint pt{distance_km, t_ab, qber_model(distance_km, cfg), 0.0, std::nullopt, 0.0, 0.0};
  if (eve == EveModel::Unlimited) {
    const UnlimitedPoint lp = unlimited_rate(distance_km, cfg);
    pt.mu_opt = lp.mu_opt;
    pt.i_eve = lp.i_eve;
    pt.r_net = lp.r_net;
    if (lp.mu_opt) {
      SystemConfig at_mu = cfg;
      at_mu.source.mu = *lp.mu_opt;
      pt.qber = qber_model(distance_km, at_mu);
    }
  } else {
    pt.i_eve = eve_information(distance_km, eve, cfg);
    pt.r_net = 0.5 * p_single(cfg.source, t_ab, cfg.detector) *
               secret_fraction(pt.qber.qber_mes, pt.i_eve, cfg.keyrate);
  }
  pt.r_net_relative = r0 > 0.0 ? pt.r_net / r0 : 0.0;
  return pt;
}

double unlimited_info(double mu, double t_ab, double eta_b) {
  const double detected = mu * t_ab * eta_b;
  if (detected <= 0.0) return 1.0;
  const double multi = 1.0 - poisson_pmf(0, mu) - poisson_pmf(1, mu);
  return std::min(1.0, std::max(0.0, multi) / detected);
}

double unlimited_objective(double mu, double distance_km, const SystemConfig& cfg) {
  SystemConfig at_mu = cfg;
  at_mu.source.mu = mu;
  const double t_ab = transmission(cfg.channel.alpha_ab * distance_km);
  const double i = unlimited_info(mu, t_ab, cfg.detector.eta_b);
  return 0.5 * p_single(mu, t_ab, cfg.detector.eta_b) *
         secret_fraction(qber_model(distance_km, at_mu).qber_mes, i, cfg.keyrate);
}

UnlimitedPoint unlimited_rate(double distance_km, const SystemConfig& cfg) {
  require_distance(distance_km);
  constexpr int kGrid = 200;
  auto f = [&](double mu) { return unlimited_objective(mu, distance_km, cfg); };
  int best = 1;
  double best_value = -1.0;
  for (int k = 1; k <= kGrid; ++k) {
    const double v = f(static_cast<double>(k) / kGrid);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  // the peak may sit below the first grid point
  double lo = best == 1 ? 1e-9 : static_cast<double>(best - 1) / kGrid;
  const double hi = std::min(1.0, static_cast<double>(best + 1) / kGrid);
  if (best == 1) {
    double scale = 1.0 / kGrid;
    while (scale > 1e-8 && f(scale / 2.0) >= f(scale)) scale /= 2.0;
    lo = scale / 2.0;
  }
  const double t_ab = transmission(cfg.channel.alpha_ab * distance_km);
  // relative tolerance: the optimum drops to ~1e-3 at long range
  const double mu = golden_argmax(f, lo, hi, 1e-6);
  const double r = f(mu);
  if (!(r > 0.0)) return UnlimitedPoint{std::nullopt, 0.0, 1.0};
  return UnlimitedPoint{mu, r, unlimited_info(mu, t_ab, cfg.detector.eta_b)};
}

MaxDistance max_distance(EveModel eve, const SystemConfig& cfg) {
  auto positive = [&](double d) { return net_rate(d, eve, cfg).r_net > 0.0; };
  if (!positive(0.0)) return MaxDistance{0.0, true};
  double lo = 0.0;
  double hi = -1.0;
  for (double d = 1.0; d <= kMaxDistanceLimitKm; d += 1.0) {
    if (!positive(d)) {
      hi = d;
      break;
    }
    lo = d;
  }
  if (hi < 0.0) return MaxDistance{kMaxDistanceLimitKm, false};
  while (hi - lo > 0.01) {
    const double mid = 0.5 * (lo + hi);
    (positive(mid) ? lo : hi) = mid;
  }
  return MaxDistance{std::floor(lo * 10.0) / 10.0, true};
}

std::vector<RatePoint> curve(EveModel eve, const SystemConfig& cfg, double d_min, double d_max,
                             double step, unsigned workers) {
  if (!(d_min >= 0.0 && d_max > d_min && step > 0.0)) {
    throw std::invalid_argument("curve needs 0 <= d_min < d_max and step > 0");
  }
  const auto n = static_cast<std::size_t>(std::floor((d_max - d_min) / step + 1e-9)) + 1;
  std::vector<RatePoint> rows(n);
  parallel_for(n, workers, [&](std::size_t i) { rows[i] = net_rate(d_min + i * step, eve, cfg); });
  return rows;
}

}  // namespace qkd
