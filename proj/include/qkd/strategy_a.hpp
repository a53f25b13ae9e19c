#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <vector>

namespace qkd {

// Intercept-resend on multiphoton pulses. Eve routes every photon through a
// passive 50/50 split into both bases and classifies what she saw:
//   A  one photon
//   B  two photons, one in each basis
//   C  two photons, same basis, same detector
//   D  two photons, same basis, different detectors (known wrong basis)
enum class Case { A = 0, B = 1, C = 2, D = 3 };

inline constexpr std::array<Case, 4> kAllCases{Case::A, Case::B, Case::C, Case::D};
// Consumption order when the resend demand is filled.
inline constexpr std::array<Case, 4> kGreedyOrder{Case::B, Case::C, Case::A, Case::D};

std::string_view to_string(Case c);

struct InterceptCase {
  Case label;
  double p_cond;  // conditional on Eve detecting at least one photon
  double info;    // Eve's information per sifted bit
  double qber;    // error created per resent sifted bit

  double ratio() const { return info == 0.0 ? 0.0 : info / qber; }
};

// Per-case information and error, independent of mu.
double case_info(Case c);
double case_qber(Case c);

// Table of the four outcomes. Only meaningful for mu << 1; case_table_valid
// flags mu above 0.2, where neglecting three-photon pulses breaks down.
std::array<InterceptCase, 4> case_table(double mu);
bool case_table_valid(double mu);

struct CaseMix {
  double required_rate = 0.0;     // resent photons needed per pulse
  std::array<double, 4> supply{};  // available events per pulse, by Case
  std::array<double, 4> usage{};   // resends per pulse, by Case
  double blind = 0.0;             // unconditioned resends filling a deficit
  bool deficit = false;

  double usage_of(Case c) const { return usage[static_cast<int>(c)]; }
  double supply_of(Case c) const { return supply[static_cast<int>(c)]; }
  double total_usage() const;
  // Fraction of a case's events that Eve resends; 0 for an empty supply.
  double resend_probability(Case c) const;
};

// Fill the resend demand mu * t_ab greedily in descending info/QBER order.
// Eve's resent photons face Bob's efficiency as the originals would, so the
// demand is matched on arrivals rather than clicks.
CaseMix allocate(double mu, double t_ab);

// Eve information per created error for the mix; empty when the mix creates
// no errors.
std::optional<double> info_per_error(const CaseMix& mix);

// QBER in Bob's sifted key if every detection stems from a resend; the most
// Eve can be charged with for this mix.
double max_qber(const CaseMix& mix);

// Information credited to Eve when qber_eve of the sifted key is attributed
// to her, clamped to [0, 1].
double attributed_info(const CaseMix& mix, double qber_eve);

// Transmittance at which supply of case B alone just meets the demand.
double pure_b_threshold_transmittance(double mu);
double pure_b_threshold_distance_km(double mu, double alpha_ab);

struct InfoPerErrorRow {
  double distance_km;
  double t_ab;
  CaseMix mix;
  std::optional<double> ratio;
};

std::vector<InfoPerErrorRow> info_per_error_curve(double mu, double alpha_ab, double d_min,
                                                  double d_max, double step);

}  // namespace qkd
