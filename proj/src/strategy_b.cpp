#include "qkd/strategy_b.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace qkd {

namespace {

constexpr double kGammaSlack = 1e-12;

void require_mu(double mu) {
  if (!(mu > 0.0)) throw std::domain_error(fmt::format("mean photon number must be > 0, got {}", mu));
}

double coinc_prefactor(BasisMode mode) { return mode == BasisMode::Active ? 0.25 : 0.625; }

// Mean photon number continuing to Bob.
double forwarded_mean(double lambda, double mu, double t_e) { return (1.0 - lambda) * mu * t_e; }

// Probability that Eve's tap catches at least one photon, in the given form.
double tap_probability(double lambda, double mu, PhotonForm form) {
  if (form == PhotonForm::SecondOrder) return lambda * mu;
  return -std::expm1(-lambda * mu);
}

double pass_fraction(double gamma, double tap) { return tap + gamma * (1.0 - tap); }

// Singles and coincidences of an unblocked pulse with forwarded mean m.
double singles_of(double m, double eta, PhotonForm form) {
  switch (form) {
    case PhotonForm::Exact: return -std::expm1(-m * eta);
    case PhotonForm::Leading: return eta * m * std::exp(-m);
    case PhotonForm::SecondOrder: return eta * m;
  }
  return 0.0;
}

double coinc_of(double m, double eta, BasisMode mode, PhotonForm form) {
  const double two = m * m / 2.0;
  switch (form) {
    case PhotonForm::Exact:
      if (mode == BasisMode::Active) {
        const double arm = -std::expm1(-0.5 * m * eta);
        return 0.5 * arm * arm;
      }
      return coinc_prefactor(mode) * eta * eta * two * std::exp(-m);
    case PhotonForm::Leading: return coinc_prefactor(mode) * eta * eta * two * std::exp(-m);
    case PhotonForm::SecondOrder: return coinc_prefactor(mode) * eta * eta * two;
  }
  return 0.0;
}

double singles_under_attack(double mu, double lambda, double gamma, double t_e, double eta,
                            PhotonForm form) {
  return singles_of(forwarded_mean(lambda, mu, t_e), eta, form) *
         pass_fraction(gamma, tap_probability(lambda, mu, form));
}

template <class F>
double golden_max(F&& f, double lo, double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

void BeamsplitAttack::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::domain_error(fmt::format("lambda must lie in [0, 1], got {}", lambda));
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) {
    throw std::domain_error(fmt::format("gamma must lie in [0, 1], got {}", gamma));
  }
  if (!(t_e > 0.0 && t_e <= 1.0)) {
    throw std::domain_error(fmt::format("t_e must lie in (0, 1], got {}", t_e));
  }
}

double pass_probability(const BeamsplitAttack& attack, double mu) {
  attack.validate();
  return pass_fraction(attack.gamma, tap_probability(attack.lambda, mu, PhotonForm::Exact));
}

double photon_dist_prime(unsigned n, const BeamsplitAttack& attack, double mu) {
  require_mu(mu);
  attack.validate();
  if (n == 0) throw std::domain_error("photon_dist_prime is defined for n >= 1");
  const double lambda = attack.lambda;
  const double t_e = attack.t_e;
  const double bracket = (attack.gamma - 1.0) * std::exp(-mu + (1.0 - lambda) * (1.0 - t_e) * mu) +
                         std::exp(-mu * (1.0 - lambda) * t_e);
  if (bracket < -1e-15) {
    throw std::domain_error(fmt::format("negative distribution bracket {}", bracket));
  }
  const double m = forwarded_mean(lambda, mu, t_e);
  if (m == 0.0) return 0.0;
  const double log_scale = n * std::log(m) - std::lgamma(n + 1.0);
  return std::exp(log_scale) * std::max(bracket, 0.0);
}

double photon_dist_prime_zero(const BeamsplitAttack& attack, double mu) {
  require_mu(mu);
  const double pass = pass_probability(attack, mu);
  return (1.0 - pass) + pass * std::exp(-forwarded_mean(attack.lambda, mu, attack.t_e));
}

BobProbs bob_probs_prime(const BeamsplitAttack& attack, double mu, double eta_b, BasisMode mode,
                         PhotonForm form) {
  require_mu(mu);
  attack.validate();
  const double m = forwarded_mean(attack.lambda, mu, attack.t_e);
  const double pass = pass_fraction(attack.gamma, tap_probability(attack.lambda, mu, form));
  return BobProbs{singles_of(m, eta_b, form) * pass, coinc_of(m, eta_b, mode, form) * pass};
}

BobProbs bob_probs_clean(double mu, double t_ab, double eta_b, BasisMode mode, PhotonForm form) {
  require_mu(mu);
  const double m = mu * t_ab;
  return BobProbs{singles_of(m, eta_b, form), coinc_of(m, eta_b, mode, form)};
}

GammaSolution solve_gamma(double mu, double t_ab, double lambda, double t_e, double eta_b,
                          PhotonForm form) {
  require_mu(mu);
  BeamsplitAttack{lambda, 1.0, t_e}.validate();
  const double target = singles_of(mu * t_ab, eta_b, form);
  const double unblocked = singles_of(forwarded_mean(lambda, mu, t_e), eta_b, form);
  const double tap = tap_probability(lambda, mu, form);
  if (unblocked <= 0.0) return GammaSolution{GammaStatus::Undershoot, 1.0};
  if (tap >= 1.0) {
    return unblocked > target ? GammaSolution{GammaStatus::Overshoot, 0.0}
                              : GammaSolution{GammaStatus::Undershoot, 1.0};
  }

  const double gamma = (target / unblocked - tap) / (1.0 - tap);
  if (gamma > 1.0 + kGammaSlack) return GammaSolution{GammaStatus::Undershoot, 1.0};
  if (gamma < -kGammaSlack) return GammaSolution{GammaStatus::Overshoot, 0.0};
  return GammaSolution{GammaStatus::Feasible, std::clamp(gamma, 0.0, 1.0)};
}

std::optional<double> solve_lambda(double mu, double t_ab, double gamma, double t_e, double eta_b,
                                   PhotonForm form) {
  require_mu(mu);
  BeamsplitAttack{0.0, gamma, t_e}.validate();
  const double target = singles_of(mu * t_ab, eta_b, form);
  auto excess = [&](double lambda) {
    return singles_under_attack(mu, lambda, gamma, t_e, eta_b, form) - target;
  };

  // walk down from lambda = 1, where Bob gets nothing, to the first sign change
  constexpr int kSteps = 2000;
  double hi = 1.0;
  for (int i = kSteps - 1; i >= 0; --i) {
    const double lo = static_cast<double>(i) / kSteps;
    if (excess(lo) >= 0.0) {
      double a = lo;  // excess >= 0
      double b = hi;  // excess < 0
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        (excess(mid) >= 0.0 ? a : b) = mid;
      }
      return a;
    }
    hi = lo;
  }
  return std::nullopt;
}

double eve_info_b(const BeamsplitAttack& attack, double mu) {
  require_mu(mu);
  attack.validate();
  const double split = attack.lambda * (1.0 - attack.lambda);
  return attack.gamma * (mu / 2.0) * split + (1.0 - attack.gamma) * 0.5;
}

double eve_info_b_accounting(const BeamsplitAttack& attack, double mu) {
  require_mu(mu);
  attack.validate();
  const double tap = tap_probability(attack.lambda, mu, PhotonForm::Exact);
  const double pass = pass_fraction(attack.gamma, tap);
  if (pass <= 0.0) return 0.0;
  return 0.5 * tap / pass;
}

double eve_info(const BeamsplitAttack& attack, double mu, InfoForm form) {
  return form == InfoForm::Split ? eve_info_b(attack, mu) : eve_info_b_accounting(attack, mu);
}

double cascade_info_bound(double mu, double g_t_db, unsigned n_couplers) {
  require_mu(mu);
  if (!(g_t_db >= 0.0)) throw std::domain_error(fmt::format("gain must be >= 0 dB, got {}", g_t_db));
  const double t_min = transmission(g_t_db);

  // probability that the two photons of a pulse end up one with Eve and one
  // with Bob, for an overall coupler pass fraction T
  auto split = [n_couplers](double total) {
    if (n_couplers == 0) return 1.0 - total * total;
    const double t = std::pow(total, 1.0 / n_couplers);
    return 2.0 * t * (1.0 - total * total) / (1.0 + t);
  };

  double best_split = 0.0;
  if (n_couplers == 0) {
    best_split = split(t_min);
  } else {
    // Eve may use less coupling loss than her gain allows
    const double arg = golden_max(split, t_min, 1.0, 1e-12);
    best_split = std::max({split(arg), split(t_min), split(1.0)});
  }
  return (mu / 2.0) * best_split * 0.5;
}

double blocking_threshold_gain_db(double mu, double t_ab, double eta_b, PhotonForm form) {
  require_mu(mu);
  if (!(t_ab > 0.0 && t_ab <= 1.0)) throw std::domain_error("t_ab must lie in (0, 1]");
  const double target = singles_of(mu * t_ab, eta_b, form);
  auto best_blocked_singles = [&](double t_e) {
    auto f = [&](double lambda) { return singles_under_attack(mu, lambda, 0.0, t_e, eta_b, form); };
    return f(golden_max(f, 0.0, 1.0, 1e-13));
  };

  const double g_max = loss_db(t_ab);
  if (best_blocked_singles(1.0) < target) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = g_max;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double t_e = std::min(1.0, t_ab * std::pow(10.0, mid / 10.0));
    (best_blocked_singles(t_e) >= target ? hi : lo) = mid;
  }
  return hi;
}

AlarmStats coincidence_alarm(const BeamsplitAttack& attack, double mu, double eta_b, double t_ab,
                             double n_pulses, BasisMode mode, PhotonForm form) {
  if (!(n_pulses > 0.0)) throw std::invalid_argument("coincidence alarm needs n_pulses > 0");
  const double clean = n_pulses * bob_probs_clean(mu, t_ab, eta_b, mode, form).p_coinc;
  const double attacked = n_pulses * bob_probs_prime(attack, mu, eta_b, mode, form).p_coinc;
  const double sigma = std::sqrt(clean);
  double z = 0.0;
  if (sigma > 0.0) {
    z = (attacked - clean) / sigma;
  } else if (attacked > clean) {
    z = std::numeric_limits<double>::infinity();
  }
  return AlarmStats{n_pulses, clean, attacked, sigma, z};
}

StealthSolution max_stealth_info(double mu, double t_ab, double t_e, double eta_b, double n_pulses,
                                 const StealthOptions& options) {
  require_mu(mu);
  if (!(t_ab > 0.0 && t_e >= t_ab && t_e <= 1.0)) {
    throw std::domain_error(fmt::format("need 0 < t_ab <= t_e <= 1, got t_ab={} t_e={}", t_ab, t_e));
  }
  if (!(options.lambda_step > 0.0 && options.lambda_step <= 0.5)) {
    throw std::invalid_argument("lambda_step must lie in (0, 0.5]");
  }
  const PhotonForm form = options.photon_form;
  const double target = singles_of(mu * t_ab, eta_b, form);

  struct Candidate {
    BeamsplitAttack attack;
    double info;
    double z;
  };

  auto evaluate = [&](double lambda) -> std::optional<Candidate> {
    const GammaSolution gs = solve_gamma(mu, t_ab, lambda, t_e, eta_b, form);
    if (gs.status == GammaStatus::Undershoot) return std::nullopt;
    BeamsplitAttack attack{lambda, gs.gamma, t_e};
    if (gs.status == GammaStatus::Overshoot) {
      // surplus even with the shutter closed: Eve adds loss to her own line
      const double tap = tap_probability(lambda, mu, form);
      double lo = 0.0;
      double hi = t_e;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo + hi);
        (singles_of(forwarded_mean(lambda, mu, mid), eta_b, form) * tap >= target ? hi : lo) = mid;
      }
      attack = BeamsplitAttack{lambda, 0.0, hi};
    }
    const AlarmStats alarm = coincidence_alarm(attack, mu, eta_b, t_ab, n_pulses, options.mode, form);
    return Candidate{attack, eve_info(attack, mu, options.info_form), alarm.z_score};
  };
  auto stealthy = [&](const std::optional<Candidate>& c) {
    return c && (options.unmonitored || c->z <= options.z_limit);
  };

  std::optional<Candidate> best;
  auto consider = [&](const std::optional<Candidate>& c) {
    if (stealthy(c) && (!best || c->info > best->info)) best = c;
  };

  const auto n_grid = static_cast<int>(std::ceil(1.0 / options.lambda_step - 1e-9));
  std::vector<std::optional<Candidate>> grid(n_grid + 1);
  for (int i = 0; i <= n_grid; ++i) {
    grid[i] = evaluate(std::min(1.0, i * options.lambda_step));
    consider(grid[i]);
  }
  for (int i = 0; i < n_grid; ++i) {
    const bool left = stealthy(grid[i]);
    if (left == stealthy(grid[i + 1])) continue;
    double good = std::min(1.0, (left ? i : i + 1) * options.lambda_step);
    double bad = std::min(1.0, (left ? i + 1 : i) * options.lambda_step);
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (good + bad);
      (stealthy(evaluate(mid)) ? good : bad) = mid;
    }
    consider(evaluate(good));
  }

  if (!best || best->attack.gamma >= 1.0 - 1e-9) {
    BeamsplitAttack plain{1.0 - t_ab / t_e, 1.0, t_e};
    const AlarmStats alarm = coincidence_alarm(plain, mu, eta_b, t_ab, n_pulses, options.mode, form);
    return StealthSolution{plain, eve_info(plain, mu, options.info_form), alarm.z_score, true};
  }
  return StealthSolution{best->attack, best->info, best->z, false};
}

std::vector<AlarmCurveRow> alarm_curve(double mu, double t_ab, double t_e, double eta_b,
                                       double n_pulses, double gamma_step,
                                       const StealthOptions& options) {
  if (!(gamma_step > 0.0 && gamma_step <= 1.0)) throw std::invalid_argument("gamma_step must lie in (0, 1]");
  std::vector<AlarmCurveRow> rows;
  const auto n = static_cast<int>(std::floor(1.0 / gamma_step + 1e-9));
  for (int i = 0; i <= n; ++i) {
    const double gamma = std::min(1.0, i * gamma_step);
    const auto lambda = solve_lambda(mu, t_ab, gamma, t_e, eta_b, options.photon_form);
    if (!lambda) continue;
    const BeamsplitAttack attack{*lambda, gamma, t_e};
    rows.push_back(AlarmCurveRow{
        gamma, *lambda,
        coincidence_alarm(attack, mu, eta_b, t_ab, n_pulses, options.mode, options.photon_form),
        eve_info(attack, mu, options.info_form)});
  }
  return rows;
}

}  // namespace qkd
