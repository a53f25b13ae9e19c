#include "qkd/montecarlo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

#include "qkd/csv.hpp"
#include "qkd/parallel.hpp"
#include "qkd/philox.hpp"
#include "qkd/strategy_a.hpp"

namespace qkd {

namespace {

// Fixed slot of every per-pulse draw. Per-photon draws follow from
// kPhotonBase in groups of kPerPhoton.
enum Slot : std::uint32_t {
  kPhotonCount = 0,
  kDarkAny = 1,
  kDarkWhich = 2,
  kDoubleBit = 3,
  kAliceBit = 4,
  kAliceBasis = 5,
  kBobBasis = 6,
  kOptFlip = 7,
  kShutter = 8,
  kEveBasis = 9,
  kResend = 10,
  kResendBit = 11,
  kResendBasis = 12,
  kResendDetect = 13,
  kResendRoute = 14,
  kIntermediate = 15,
  kPhotonBase = 16,
};
constexpr std::uint32_t kPerPhoton = 4;
// offsets inside a photon group
constexpr std::uint32_t kPhSplit = 0;    // Strategy B tap; Strategy A Eve's basis
constexpr std::uint32_t kPhSurvive = 1;  // Strategy A Eve's wrong-basis outcome
constexpr std::uint32_t kPhDetect = 2;
constexpr std::uint32_t kPhRoute = 3;

std::uint32_t photon_slot(unsigned i, std::uint32_t offset) { return kPhotonBase + kPerPhoton * i + offset; }

const double kSin2Pi8 = std::pow(std::sin(std::numbers::pi / 8.0), 2);

// a photon entering Bob's setup
struct Arrival {
  int basis;
  int bit;
  bool intermediate;            // case B resend: outcome y[b] in Bob's basis b, flipped w.p. sin^2(pi/8)
  std::array<int, 2> y;
  std::uint32_t detect_slot;
  std::uint32_t route_slot;
};

struct Model {
  SimConfig cfg;
  std::array<double, kMaxPhotons + 1> cdf{};
  double t_channel = 1.0;
  double eta = 0.1;
  double dark_any = 0.0;
  double dark_both = 0.0;  // P(both | any)
  std::array<double, 4> resend_prob{};
  double blind_prob = 0.0;

  explicit Model(const SimConfig& c) : cfg(c) {
    const double mu = cfg.system.source.mu;
    double acc = 0.0;
    for (unsigned n = 0; n <= kMaxPhotons; ++n) {
      acc += poisson_pmf(n, mu);
      cdf[n] = acc;
    }
    eta = cfg.system.detector.eta_b;
    const double p = cfg.system.detector.p_dark;
    dark_any = 1.0 - (1.0 - p) * (1.0 - p);
    dark_both = dark_any > 0.0 ? p * p / dark_any : 0.0;
    t_channel = cfg.eve == EveModel::None ? cfg.system.channel.t_ab() : cfg.attack.t_e;

    if (cfg.eve == EveModel::StrategyA) {
      const CaseMix mix = allocate(mu, cfg.system.channel.t_ab());
      for (Case k : kAllCases) resend_prob[static_cast<int>(k)] = std::min(1.0, mix.resend_probability(k));
      if (cfg.deficit == DeficitPolicy::Blind) blind_prob = std::min(1.0, mix.blind / poisson_pmf(0, mu));
    }
  }

  unsigned photons(double u) const {
    for (unsigned n = 0; n <= kMaxPhotons; ++n) {
      if (u < cdf[n]) return n;
    }
    return kMaxPhotons;
  }
};

int bit_of(double u) { return u < 0.5 ? 1 : 0; }

void run_pulse(const Model& m, SlotStream& rng, SimResult& tally) {
  const SimConfig& cfg = m.cfg;
  ++tally.pulses;
  const unsigned n = m.photons(rng(kPhotonCount));

  std::array<Arrival, kMaxPhotons> arrivals;
  unsigned n_arrive = 0;
  bool eve_known = false;
  int alice_bit = -1;
  int alice_basis = -1;
  auto alice = [&] {
    if (alice_bit < 0) {
      alice_bit = bit_of(rng(kAliceBit));
      alice_basis = bit_of(rng(kAliceBasis));
    }
  };

  switch (cfg.eve) {
    case EveModel::None:
      for (unsigned i = 0; i < n; ++i) {
        if (rng(photon_slot(i, kPhSurvive)) < m.t_channel) {
          alice();
          arrivals[n_arrive++] = {alice_basis, alice_bit, false, {}, photon_slot(i, kPhDetect),
                                  photon_slot(i, kPhRoute)};
        }
      }
      break;

    case EveModel::StrategyB:
    case EveModel::StrategyBStorage: {
      const double lambda = cfg.attack.lambda;
      unsigned tapped = 0;
      std::array<unsigned, kMaxPhotons> forward;
      unsigned n_forward = 0;
      for (unsigned i = 0; i < n; ++i) {
        if (rng(photon_slot(i, kPhSplit)) < lambda) {
          ++tapped;
        } else {
          forward[n_forward++] = i;
        }
      }
      if (tapped > 0) ++tally.eve_detected;
      const bool pass = tapped > 0 || (n_forward > 0 && rng(kShutter) < cfg.attack.gamma);
      if (pass) {
        for (unsigned k = 0; k < n_forward; ++k) {
          const unsigned i = forward[k];
          if (rng(photon_slot(i, kPhSurvive)) < m.t_channel) {
            alice();
            arrivals[n_arrive++] = {alice_basis, alice_bit, false, {}, photon_slot(i, kPhDetect),
                                    photon_slot(i, kPhRoute)};
          }
        }
      }
      // all tapped photons measured in one random basis, or stored
      if (tapped > 0 && n_arrive > 0) {
        alice();
        eve_known = cfg.eve == EveModel::StrategyBStorage || bit_of(rng(kEveBasis)) == alice_basis;
      }
      break;
    }

    case EveModel::StrategyA: {
      int resend_basis = 0;
      int resend_bit = 0;
      bool intermediate = false;
      std::array<int, 2> y{};
      double p_resend = m.blind_prob;
      bool blind = true;
      if (n > 0) {
        ++tally.eve_detected;
        alice();
        blind = false;
        // Eve's passive basis split and outcome for at most the first two photons
        const unsigned seen = std::min(n, 2u);
        std::array<int, 2> basis{};
        std::array<int, 2> outcome{};
        for (unsigned i = 0; i < seen; ++i) {
          basis[i] = bit_of(rng(photon_slot(i, kPhSplit)));
          outcome[i] = basis[i] == alice_basis ? alice_bit : bit_of(rng(photon_slot(i, kPhSurvive)));
        }
        Case c = Case::A;
        if (seen == 2) {
          if (basis[0] != basis[1]) {
            c = Case::B;
          } else {
            c = outcome[0] == outcome[1] ? Case::C : Case::D;
          }
        }
        p_resend = m.resend_prob[static_cast<int>(c)];
        switch (c) {
          case Case::A:
          case Case::C:
            resend_basis = basis[0];
            resend_bit = outcome[0];
            eve_known = basis[0] == alice_basis;
            break;
          case Case::B:
            intermediate = true;
            y[basis[0]] = outcome[0];
            y[basis[1]] = outcome[1];
            eve_known = true;
            break;
          case Case::D:
            resend_basis = 1 - basis[0];
            resend_bit = bit_of(rng(kResendBit));
            break;
        }
      }
      if (p_resend > 0.0 && rng(kResend) < p_resend) {
        ++tally.resends;
        if (blind) {
          resend_basis = bit_of(rng(kResendBasis));
          resend_bit = bit_of(rng(kResendBit));
        }
        arrivals[n_arrive++] = {resend_basis, resend_bit, intermediate, y, kResendDetect, kResendRoute};
      } else {
        eve_known = false;
      }
      break;
    }

    case EveModel::Unlimited:
      throw std::logic_error("unlimited Eve is not simulated");
  }

  if (n_arrive == 1) ++tally.arrivals_1;
  if (n_arrive == 2) ++tally.arrivals_2;

  std::array<bool, 2> click{false, false};
  if (m.dark_any > 0.0 && rng(kDarkAny) < m.dark_any) {
    const double u = rng(kDarkWhich);
    if (u < m.dark_both) {
      click = {true, true};
    } else {
      click[u < 0.5 * (1.0 + m.dark_both) ? 0 : 1] = true;
    }
  }
  if (n_arrive == 0 && !click[0] && !click[1]) return;

  const int bob_basis = bit_of(rng(kBobBasis));
  for (unsigned k = 0; k < n_arrive; ++k) {
    const Arrival& a = arrivals[k];
    if (!(rng(a.detect_slot) < m.eta)) continue;
    int detector;
    if (a.intermediate) {
      detector = a.y[bob_basis] ^ (rng(kIntermediate) < kSin2Pi8 ? 1 : 0);
    } else if (a.basis == bob_basis) {
      detector = a.bit;
    } else {
      detector = bit_of(rng(a.route_slot));
    }
    click[detector] = true;
  }
  if (!click[0] && !click[1]) return;

  alice();
  ++tally.singles;
  const bool both = click[0] && click[1];
  if (both) {
    ++tally.double_clicks;
    if (bob_basis != alice_basis) ++tally.coincidences;
  }
  if (bob_basis != alice_basis) return;

  ++tally.sifted;
  int bit = both ? bit_of(rng(kDoubleBit)) : (click[1] ? 1 : 0);
  if (rng(kOptFlip) < cfg.system.keyrate.qber_opt) bit ^= 1;
  if (bit != alice_bit) ++tally.errors;
  if (eve_known) ++tally.eve_known;
}

}  // namespace

void SimConfig::validate() const {
  system.validate();
  if (n_pulses < 1) throw std::invalid_argument("sim.pulses must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("sim.batch_size must be >= 1");
  switch (eve) {
    case EveModel::None:
      break;
    case EveModel::StrategyA:
      if (deficit == DeficitPolicy::Unset && allocate(system.source.mu, system.channel.t_ab()).deficit) {
        throw std::invalid_argument(
            "strategy A cannot cover Bob's counts at this distance; set sim.deficit to blind or short");
      }
      break;
    case EveModel::StrategyB:
    case EveModel::StrategyBStorage:
      attack.validate();
      break;
    case EveModel::Unlimited:
      throw std::invalid_argument("the unlimited-technology Eve has no pulse-level model");
  }
}

SimResult& SimResult::operator+=(const SimResult& o) {
  pulses += o.pulses;
  singles += o.singles;
  double_clicks += o.double_clicks;
  coincidences += o.coincidences;
  sifted += o.sifted;
  errors += o.errors;
  eve_known += o.eve_known;
  arrivals_1 += o.arrivals_1;
  arrivals_2 += o.arrivals_2;
  eve_detected += o.eve_detected;
  resends += o.resends;
  return *this;
}

Estimate SimResult::ratio(std::uint64_t k, std::uint64_t n) {
  if (n == 0) return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  const double p = static_cast<double>(k) / static_cast<double>(n);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(n))};
}

SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  const Model model(cfg);
  const auto key = Philox4x32::key_from_seed(cfg.seed);
  const std::uint64_t n_batches = (cfg.n_pulses + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<SimResult> batches(n_batches);
  parallel_for(n_batches, cfg.workers, [&](std::size_t b) {
    const std::uint64_t begin = b * cfg.batch_size;
    const std::uint64_t end = std::min(cfg.n_pulses, begin + cfg.batch_size);
    SimResult local;
    for (std::uint64_t pulse = begin; pulse < end; ++pulse) {
      SlotStream rng(key, pulse);
      run_pulse(model, rng, local);
    }
    batches[b] = local;
  });
  SimResult total;
  for (const auto& b : batches) total += b;
  return total;
}

Check make_check(std::string name, std::uint64_t count, std::uint64_t trials, double expected) {
  const Estimate e = SimResult::ratio(count, trials);
  double z;
  if (trials == 0) {
    z = std::numeric_limits<double>::infinity();
  } else if (expected <= 0.0 || expected >= 1.0) {
    z = e.value == expected ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    z = (e.value - expected) / std::sqrt(expected * (1.0 - expected) / static_cast<double>(trials));
  }
  return Check{std::move(name), count, trials, expected, e.value, e.sigma, z, std::abs(z) <= kOracleSigmas};
}

bool CompareReport::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

CompareReport compare(const SimResult& sim, const std::vector<Expectation>& expected) {
  CompareReport report;
  for (const auto& e : expected) report.checks.push_back(make_check(e.name, sim.*e.count, sim.*e.trials, e.value));
  return report;
}

std::vector<Expectation> analytic_expectations(const SimConfig& cfg) {
  const auto& sys = cfg.system;
  const double mu = sys.source.mu;
  const double eta = sys.detector.eta_b;
  const double q_opt = sys.keyrate.qber_opt;
  const bool quiet = sys.detector.p_dark == 0.0;
  // a flip on top of an error rate q
  auto with_flip = [q_opt](double q) { return q + q_opt - 2.0 * q * q_opt; };
  std::vector<Expectation> out;

  switch (cfg.eve) {
    case EveModel::None: {
      const double t = sys.channel.t_ab();
      if (quiet) {
        out.push_back({"p_single", &SimResult::singles, &SimResult::pulses, p_single(mu, t, eta)});
        out.push_back({"p_coinc", &SimResult::coincidences, &SimResult::pulses,
                       p_coinc(mu, t, eta, BasisMode::Active)});
        out.push_back({"sifted", &SimResult::sifted, &SimResult::pulses, 0.5 * p_single(mu, t, eta)});
        out.push_back({"qber", &SimResult::errors, &SimResult::sifted, q_opt});
      } else {
        out.push_back({"qber", &SimResult::errors, &SimResult::sifted,
                       qber_model(sys.channel.length_ab, sys).qber_mes});
      }
      break;
    }

    case EveModel::StrategyA: {
      // case frequencies of the pulse model: exact Poisson, two-photon rule
      const double p0 = poisson_pmf(0, mu);
      const double p1 = poisson_pmf(1, mu);
      const double multi = 1.0 - p0 - p1;
      const std::array<double, 4> freq{p1, 0.5 * multi, 0.375 * multi, 0.125 * multi};
      const CaseMix mix = allocate(mu, sys.channel.t_ab());
      double resent = 0.0;
      double errors = 0.0;
      double known = 0.0;
      for (Case c : kAllCases) {
        const double r = freq[static_cast<int>(c)] * std::min(1.0, mix.resend_probability(c));
        resent += r;
        errors += r * case_qber(c);
        known += r * case_info(c);
      }
      if (cfg.deficit == DeficitPolicy::Blind) {
        const double r = p0 * std::min(1.0, mix.blind / p0);
        resent += r;
        errors += 0.5 * r;
      }
      if (quiet) {
        out.push_back({"p_single", &SimResult::singles, &SimResult::pulses, eta * resent});
        out.push_back({"qber", &SimResult::errors, &SimResult::sifted, with_flip(errors / resent)});
        out.push_back({"eve_known", &SimResult::eve_known, &SimResult::sifted, known / resent});
      }
      break;
    }

    case EveModel::StrategyB:
    case EveModel::StrategyBStorage: {
      const BeamsplitAttack& a = cfg.attack;
      const BobProbs p = bob_probs_prime(a, mu, eta);
      out.push_back({"p_prime_1", &SimResult::arrivals_1, &SimResult::pulses, photon_dist_prime(1, a, mu)});
      out.push_back({"p_prime_2", &SimResult::arrivals_2, &SimResult::pulses, photon_dist_prime(2, a, mu)});
      out.push_back({"eve_detected", &SimResult::eve_detected, &SimResult::pulses,
                     -std::expm1(-a.lambda * mu)});
      if (quiet) {
        out.push_back({"p_single", &SimResult::singles, &SimResult::pulses, p.p_single});
        out.push_back({"p_coinc", &SimResult::coincidences, &SimResult::pulses, p.p_coinc});
        out.push_back({"qber", &SimResult::errors, &SimResult::sifted, q_opt});
        const double info = eve_info_b_accounting(a, mu);
        out.push_back({"eve_known", &SimResult::eve_known, &SimResult::sifted,
                       cfg.eve == EveModel::StrategyBStorage ? 2.0 * info : info});
      }
      break;
    }

    case EveModel::Unlimited:
      break;
  }
  return out;
}

std::string result_csv(const SimResult& r) {
  CsvTable table({"quantity", "count", "trials", "estimate", "sigma"});
  auto add = [&](const char* name, std::uint64_t k, std::uint64_t n) {
    const Estimate e = SimResult::ratio(k, n);
    table.row({name, std::to_string(k), std::to_string(n), csv_number(e.value), csv_number(e.sigma)});
  };
  add("singles", r.singles, r.pulses);
  add("double_clicks", r.double_clicks, r.pulses);
  add("coincidences", r.coincidences, r.pulses);
  add("sifted", r.sifted, r.pulses);
  add("errors", r.errors, r.sifted);
  add("eve_known", r.eve_known, r.sifted);
  add("arrivals_1", r.arrivals_1, r.pulses);
  add("arrivals_2", r.arrivals_2, r.pulses);
  add("eve_detected", r.eve_detected, r.pulses);
  add("resends", r.resends, r.pulses);
  return table.str();
}

}  // namespace qkd
