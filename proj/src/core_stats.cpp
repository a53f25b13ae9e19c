#include "qkd/core_stats.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

namespace qkd {

namespace {

void require_positive_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw std::domain_error(fmt::format("mean photon number must be > 0, got {}", mu));
  }
}

// P(n >= 2) for a Poisson mean mu. The difference 1 - e^-mu (1 + mu) cancels
// badly for small mu, so sum the series there.
double poisson_tail_two(double mu) {
  if (mu < 0.5) {
    double term = mu * mu / 2.0;
    double sum = 0.0;
    for (int k = 2; k < 60 && term > sum * 1e-18; ++k) {
      sum += term;
      term *= mu / (k + 1);
    }
    return std::exp(-mu) * sum;
  }
  return 1.0 - std::exp(-mu) * (1.0 + mu);
}

}  // namespace

void SourceParams::validate() const {
  require_positive_mu(mu);
  if (!(nu > 0.0)) {
    throw std::invalid_argument(fmt::format("pulse rate must be > 0, got {}", nu));
  }
}

void ChannelParams::validate() const {
  if (!(alpha_ab >= 0.0) || !(length_ab >= 0.0) || !(alpha_e >= 0.0)) {
    throw std::invalid_argument("attenuations and length must be >= 0");
  }
  if (bee_line_d && (*bee_line_d < 0.0 || *bee_line_d > length_ab)) {
    throw std::invalid_argument(
        fmt::format("straight-line distance {} km must lie in [0, {}]", *bee_line_d, length_ab));
  }
}

double ChannelParams::t_ab() const { return transmission(loss_db()); }

void DetectorParams::validate() const {
  if (!(eta_b > 0.0 && eta_b <= 1.0)) {
    throw std::invalid_argument(fmt::format("detector efficiency must lie in (0, 1], got {}", eta_b));
  }
  if (!(p_dark >= 0.0 && p_dark < 1.0)) {
    throw std::invalid_argument(fmt::format("dark count probability must lie in [0, 1), got {}", p_dark));
  }
}

double poisson_pmf(unsigned n, double mu) {
  require_positive_mu(mu);
  if (n == 0) return std::exp(-mu);
  const double log_p = n * std::log(mu) - mu - std::lgamma(n + 1.0);
  return std::exp(log_p);
}

double poisson_pmf_second_order(unsigned n, double mu) {
  require_positive_mu(mu);
  switch (n) {
    case 0: return 1.0 - mu + mu * mu / 2.0;
    case 1: return mu - mu * mu;
    case 2: return mu * mu / 2.0;
    default: return 0.0;
  }
}

double multi_photon_fraction(double mu, Approx form) {
  require_positive_mu(mu);
  if (form == Approx::SecondOrder) return mu / 2.0 + mu * mu / 4.0;
  return poisson_tail_two(mu) / -std::expm1(-mu);
}

double transmission(double loss) {
  if (!(loss >= 0.0)) {
    throw std::domain_error(fmt::format("loss must be >= 0 dB, got {}", loss));
  }
  return std::pow(10.0, -loss / 10.0);
}

double loss_db(double t) {
  if (!(t > 0.0 && t <= 1.0)) {
    throw std::domain_error(fmt::format("transmittance must lie in (0, 1], got {}", t));
  }
  return -10.0 * std::log10(t);
}

double eve_gain_db(const ChannelParams& channel, bool monitor_tof) {
  channel.validate();
  if (monitor_tof) return (channel.alpha_ab - channel.alpha_e) * channel.length_ab;
  const double d = channel.bee_line_d.value_or(channel.length_ab);
  return channel.loss_db() - channel.alpha_e * d;
}

double p_single(double mu, double t, double eta) { return -std::expm1(-mu * t * eta); }

double p_single(const SourceParams& src, double t, const DetectorParams& det) {
  return p_single(src.mu, t, det.eta_b);
}

double p_single_linear(double mu, double t, double eta) { return mu * t * eta; }

double p_coinc(double mu, double t, double eta, BasisMode mode) {
  if (mode == BasisMode::Passive) {
    if (t * mu == 0.0) return 0.0;
    return 0.625 * poisson_pmf(2, mu * t) * eta * eta;
  }
  const double arm = -std::expm1(-0.5 * mu * t * eta);
  return 0.5 * arm * arm;
}

double p_coinc(const SourceParams& src, double t, const DetectorParams& det) {
  return p_coinc(src.mu, t, det.eta_b, det.mode);
}

double p_coinc_approx(double mu, double t, double eta, BasisMode mode) {
  const double prefactor = mode == BasisMode::Active ? 0.25 : 0.625;
  return prefactor * (mu * mu / 2.0) * t * t * eta * eta;
}

Rates rates(const SourceParams& src, double t, const DetectorParams& det) {
  const double per_pulse = p_single(src, t, det);
  return Rates{src.nu * per_pulse, src.nu * per_pulse / 2.0, per_pulse, per_pulse / 2.0};
}

}  // namespace qkd
