#pragma once

#include <optional>

namespace qkd {

// Bob's basis choice: active (one basis gated, 2 detectors) or passive
// (a beamsplitter picks the basis, 4 detectors gated).
enum class BasisMode { Active, Passive };

// Which form of a photon-statistics quantity to evaluate. Exact is the
// canonical one; SecondOrder reproduces the small-mu expansions.
enum class Approx { Exact, SecondOrder };

// Second-order expansions are only advertised up to this mean photon number.
inline constexpr double kSecondOrderMaxMu = 0.2;

struct SourceParams {
  double mu = 0.1;  // mean photon number per pulse
  double nu = 1e6;  // pulse repetition rate [Hz]

  void validate() const;
  bool second_order_valid() const { return mu <= kSecondOrderMaxMu; }
};

struct ChannelParams {
  double alpha_ab = 0.25;   // installed fiber attenuation [dB/km]
  double length_ab = 0.0;   // installed fiber length [km]
  double alpha_e = 0.15;    // Eve's best fiber [dB/km]
  std::optional<double> bee_line_d;  // straight-line distance [km]

  void validate() const;
  double loss_db() const { return alpha_ab * length_ab; }
  double t_ab() const;
};

struct DetectorParams {
  double eta_b = 0.1;    // quantum efficiency
  double p_dark = 1e-6;  // dark count probability per detector per gate
  BasisMode mode = BasisMode::Active;

  void validate() const;
  int n_gated() const { return mode == BasisMode::Active ? 2 : 4; }
};

// Probability of n photons in a coherent state of mean mu. Evaluated in log
// space so large n does not overflow.
double poisson_pmf(unsigned n, double mu);

// Second-order expansions of P(0), P(1), P(2); zero for n > 2.
double poisson_pmf_second_order(unsigned n, double mu);

// P(n >= 2 | n > 0).
double multi_photon_fraction(double mu, Approx form = Approx::Exact);

// 10^{-loss/10}.
double transmission(double loss_db);

// Inverse of transmission(): 10 log10(1/t).
double loss_db(double t);

// Eve's transmission gain G_t in dB. With time-of-flight monitoring she can
// only exploit the better attenuation along the same length; otherwise she
// also shortcuts to the straight line (bee_line_d, defaulting to length_ab).
double eve_gain_db(const ChannelParams& channel, bool monitor_tof);

// Bob's single-count probability 1 - exp(-mu t eta). Dark counts are not
// included; they enter through the QBER budget.
double p_single(double mu, double t, double eta);
double p_single(const SourceParams& src, double t, const DetectorParams& det);
double p_single_linear(double mu, double t, double eta);

// Wrong-basis coincidence probability. Active: (1/2)[1 - exp(-mu t eta/2)]^2.
// Passive has no exact form; it is (5/8) P(2 | mu t) eta^2.
double p_coinc(double mu, double t, double eta, BasisMode mode);
double p_coinc(const SourceParams& src, double t, const DetectorParams& det);
// Quadratic form: (1/4 or 5/8) (mu^2/2) t^2 eta^2.
double p_coinc_approx(double mu, double t, double eta, BasisMode mode);

struct Rates {
  double raw_hz;
  double sifted_hz;
  double raw_per_pulse;
  double sifted_per_pulse;
};

Rates rates(const SourceParams& src, double t, const DetectorParams& det);

}  // namespace qkd
