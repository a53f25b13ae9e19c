#include "qkd/strategy_a.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "qkd/core_stats.hpp"

namespace qkd {

std::string_view to_string(Case c) {
  switch (c) {
    case Case::A: return "A";
    case Case::B: return "B";
    case Case::C: return "C";
    case Case::D: return "D";
  }
  return "?";
}

double case_info(Case c) {
  switch (c) {
    case Case::A: return 0.5;
    case Case::B: return 1.0;
    case Case::C: return 2.0 / 3.0;
    case Case::D: return 0.0;
  }
  return 0.0;
}

double case_qber(Case c) {
  switch (c) {
    case Case::A: return 0.25;
    case Case::B: {
      // intermediate state pi/8 away from either measured state
      const double s = std::sin(std::numbers::pi / 8.0);
      return s * s;
    }
    case Case::C: return 1.0 / 6.0;
    case Case::D: return 0.5;
  }
  return 0.5;
}

bool case_table_valid(double mu) { return mu > 0.0 && mu <= kSecondOrderMaxMu; }

std::array<InterceptCase, 4> case_table(double mu) {
  if (!(mu > 0.0)) {
    throw std::domain_error(fmt::format("mean photon number must be > 0, got {}", mu));
  }
  const double multi = mu / 2.0;
  const std::array<double, 4> p{1.0 - multi, multi / 2.0, multi * 3.0 / 8.0, multi / 8.0};
  std::array<InterceptCase, 4> table{};
  for (Case c : kAllCases) {
    const int i = static_cast<int>(c);
    table[i] = InterceptCase{c, p[i], case_info(c), case_qber(c)};
  }
  return table;
}

double CaseMix::total_usage() const {
  double sum = blind;
  for (double u : usage) sum += u;
  return sum;
}

double CaseMix::resend_probability(Case c) const {
  const int i = static_cast<int>(c);
  return supply[i] > 0.0 ? std::min(1.0, usage[i] / supply[i]) : 0.0;
}

CaseMix allocate(double mu, double t_ab) {
  if (!(t_ab >= 0.0 && t_ab <= 1.0)) {
    throw std::domain_error(fmt::format("transmittance must lie in [0, 1], got {}", t_ab));
  }
  const auto table = case_table(mu);
  // Eve's detectors are perfect: she sees every non-empty pulse.
  const double detected = -std::expm1(-mu);

  CaseMix mix;
  mix.required_rate = mu * t_ab;
  for (const auto& row : table) mix.supply[static_cast<int>(row.label)] = detected * row.p_cond;

  double remaining = mix.required_rate;
  for (Case c : kGreedyOrder) {
    const int i = static_cast<int>(c);
    const double take = std::min(remaining, mix.supply[i]);
    mix.usage[i] = take;
    remaining -= take;
  }
  if (remaining > 0.0) {
    mix.deficit = true;
    mix.blind = remaining;
  }
  return mix;
}

std::optional<double> info_per_error(const CaseMix& mix) {
  double info = 0.0;
  double errors = mix.blind * 0.5;
  for (Case c : kAllCases) {
    info += mix.usage_of(c) * case_info(c);
    errors += mix.usage_of(c) * case_qber(c);
  }
  if (errors <= 0.0) return std::nullopt;
  return info / errors;
}

double max_qber(const CaseMix& mix) {
  const double total = mix.total_usage();
  if (total <= 0.0) return 0.0;
  double errors = mix.blind * 0.5;
  for (Case c : kAllCases) errors += mix.usage_of(c) * case_qber(c);
  return errors / total;
}

double attributed_info(const CaseMix& mix, double qber_eve) {
  if (!(qber_eve >= 0.0)) {
    throw std::domain_error(fmt::format("attributed QBER must be >= 0, got {}", qber_eve));
  }
  if (qber_eve == 0.0) return 0.0;
  if (qber_eve > max_qber(mix) + 1e-12) {
    throw std::domain_error(
        fmt::format("attributed QBER {} exceeds the {} this mix can create", qber_eve, max_qber(mix)));
  }
  const auto ratio = info_per_error(mix);
  if (!ratio) return 0.0;
  return std::clamp(*ratio * qber_eve, 0.0, 1.0);
}

double pure_b_threshold_transmittance(double mu) {
  const auto table = case_table(mu);
  return -std::expm1(-mu) * table[static_cast<int>(Case::B)].p_cond / mu;
}

double pure_b_threshold_distance_km(double mu, double alpha_ab) {
  if (!(alpha_ab > 0.0)) throw std::domain_error("attenuation must be > 0");
  return loss_db(pure_b_threshold_transmittance(mu)) / alpha_ab;
}

std::vector<InfoPerErrorRow> info_per_error_curve(double mu, double alpha_ab, double d_min,
                                                  double d_max, double step) {
  if (!(d_min >= 0.0 && d_max > d_min && step > 0.0)) {
    throw std::invalid_argument("curve needs 0 <= d_min < d_max and step > 0");
  }
  std::vector<InfoPerErrorRow> rows;
  const auto n = static_cast<long>(std::floor((d_max - d_min) / step + 1e-9));
  rows.reserve(n + 1);
  for (long i = 0; i <= n; ++i) {
    const double d = d_min + i * step;
    const double t = transmission(alpha_ab * d);
    CaseMix mix = allocate(mu, t);
    auto ratio = info_per_error(mix);
    rows.push_back(InfoPerErrorRow{d, t, mix, ratio});
  }
  return rows;
}

}  // namespace qkd
