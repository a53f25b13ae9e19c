#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qkd/core_stats.hpp"

namespace qkd {

// Beamsplitter-and-shutter attack. Eve couples a fraction lambda out of each
// pulse into her analyzer; the remaining (1 - lambda) continues to Bob
// through her replacement fiber of transmittance t_e. When her analyzer sees
// nothing the shutter passes the pulse with probability gamma.
struct BeamsplitAttack {
  double lambda = 0.5;
  double gamma = 1.0;
  double t_e = 1.0;

  void validate() const;
};

// How Bob's counts under attack are evaluated.
//   Exact        detection of the full modified photon distribution
//   Leading      singles eta P'(1), coincidences (1/4) eta^2 P'(2)
//   SecondOrder  the same with the bracket expanded to first order in mu
// Each form is paired with the matching clean-channel reference so that an
// identity attack reproduces the clean counts exactly.
enum class PhotonForm { Exact, Leading, SecondOrder };

// Which expression credits Eve's information.
//   Split       gamma (mu/2) lambda (1 - lambda) + (1 - gamma)/2
//   Accounting  fraction of Bob's sifted bits whose pulse left a photon with
//               Eve, times 1/2 for her random basis
enum class InfoForm { Split, Accounting };

// Probability that a pulse is not blocked: 1 - (1 - gamma) e^{-lambda mu}.
double pass_probability(const BeamsplitAttack& attack, double mu);

// P'(n) at Bob's entrance for n >= 1. Throws std::domain_error if the
// distribution bracket goes negative.
double photon_dist_prime(unsigned n, const BeamsplitAttack& attack, double mu);
// P'(0), including blocked pulses; closes the distribution.
double photon_dist_prime_zero(const BeamsplitAttack& attack, double mu);

struct BobProbs {
  double p_single;
  double p_coinc;
};

BobProbs bob_probs_prime(const BeamsplitAttack& attack, double mu, double eta_b,
                         BasisMode mode = BasisMode::Active, PhotonForm form = PhotonForm::Exact);

// Bob's counts without Eve in the given form.
BobProbs bob_probs_clean(double mu, double t_ab, double eta_b, BasisMode mode = BasisMode::Active,
                         PhotonForm form = PhotonForm::Exact);

enum class GammaStatus {
  Feasible,
  Undershoot,  // even gamma = 1 leaves Bob short of singles
  Overshoot,   // even gamma = 0 gives Bob too many singles
};

struct GammaSolution {
  GammaStatus status;
  double gamma;  // meaningful only when Feasible

  bool feasible() const { return status == GammaStatus::Feasible; }
};

// Shutter pass fraction that keeps Bob's singles equal to the clean value.
GammaSolution solve_gamma(double mu, double t_ab, double lambda, double t_e, double eta_b = 0.1,
                          PhotonForm form = PhotonForm::Exact);

// Largest lambda that matches the clean singles at the given gamma (the
// branch with the fewest coincidences), or nothing if no lambda does.
std::optional<double> solve_lambda(double mu, double t_ab, double gamma, double t_e,
                                   double eta_b = 0.1, PhotonForm form = PhotonForm::Exact);

double eve_info_b(const BeamsplitAttack& attack, double mu);
double eve_info_b_accounting(const BeamsplitAttack& attack, double mu);
double eve_info(const BeamsplitAttack& attack, double mu, InfoForm form);

// Bound on Eve's information from n couplers in series whose total coupling
// loss is at most g_t_db. After catching a photon Eve switches the remaining
// couplers out, so the partner photon passes untouched. n_couplers = 0 gives
// the limit of infinitely many weak couplers.
double cascade_info_bound(double mu, double g_t_db, unsigned n_couplers = 0);

// Smallest Eve gain (dB) at which gamma = 0 keeps Bob's singles, for the
// given form. SecondOrder gives 10 log10(4/mu).
double blocking_threshold_gain_db(double mu, double t_ab, double eta_b = 0.1,
                                  PhotonForm form = PhotonForm::Exact);

inline constexpr double kAlarmSigmas = 2.0;

struct AlarmStats {
  double n_pulses;
  double expected_coinc_clean;
  double expected_coinc_attack;
  double sigma;
  double z_score;

  bool stealthy(double limit = kAlarmSigmas) const { return z_score <= limit; }
};

AlarmStats coincidence_alarm(const BeamsplitAttack& attack, double mu, double eta_b, double t_ab,
                             double n_pulses, BasisMode mode = BasisMode::Active,
                             PhotonForm form = PhotonForm::Exact);

struct StealthOptions {
  PhotonForm photon_form = PhotonForm::Exact;
  InfoForm info_form = InfoForm::Split;
  BasisMode mode = BasisMode::Active;
  double lambda_step = 1e-3;
  double z_limit = kAlarmSigmas;
  // Drop the coincidence alarm; gives the worst case for a receiver that
  // does not monitor coincidences.
  bool unmonitored = false;
};

struct StealthSolution {
  BeamsplitAttack attack;  // t_e may be below the available one if Eve adds loss
  double info;
  double z_score;
  bool fallback;  // no gamma < 1 point was stealthy
};

// Maximize Eve's information with Bob's singles matched exactly and the
// coincidence excess within z_limit sigma. Deterministic: grid over lambda,
// gamma from the singles equation, bisection refinement where stealthiness
// changes between grid points.
StealthSolution max_stealth_info(double mu, double t_ab, double t_e, double eta_b, double n_pulses,
                                 const StealthOptions& options = {});

struct AlarmCurveRow {
  double gamma;
  double lambda;
  AlarmStats alarm;
  double info;
};

// Sweep of gamma in [0, 1] at the singles-matching lambda; rows where no
// lambda matches are skipped.
std::vector<AlarmCurveRow> alarm_curve(double mu, double t_ab, double t_e, double eta_b,
                                       double n_pulses, double gamma_step,
                                       const StealthOptions& options = {});

}  // namespace qkd
