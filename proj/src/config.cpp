#include "qkd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include <fmt/format.h>

namespace qkd {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: expected true or false, got '{}'", key, v));
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string_view to_string(DeficitPolicy p) {
  switch (p) {
    case DeficitPolicy::Unset: return "unset";
    case DeficitPolicy::Blind: return "blind";
    case DeficitPolicy::Short: return "short";
  }
  return "?";
}

struct Field {
  std::string_view key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define QKD_REAL(key, expr) \
  Field{key, [](RunConfig& c, std::string_view v) { c.expr = parse_double(key, v); }, \
        [](const RunConfig& c) { return fmt::format("{}", c.expr); }}
#define QKD_COUNT(key, expr) \
  Field{key, [](RunConfig& c, std::string_view v) { c.expr = parse_count(key, v); }, \
        [](const RunConfig& c) { return fmt::format("{}", c.expr); }}
#define QKD_BOOL(key, expr) \
  Field{key, [](RunConfig& c, std::string_view v) { c.expr = parse_bool(key, v); }, \
        [](const RunConfig& c) { return fmt_bool(c.expr); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      QKD_REAL("source.mu", system.source.mu),
      QKD_REAL("source.nu", system.source.nu),
      QKD_REAL("channel.alpha_ab", system.channel.alpha_ab),
      QKD_REAL("channel.length_ab", system.channel.length_ab),
      QKD_REAL("channel.alpha_e", system.channel.alpha_e),
      Field{"channel.bee_line_d",
            [](RunConfig& c, std::string_view v) {
              if (v == "none" || v.empty()) {
                c.system.channel.bee_line_d.reset();
              } else {
                c.system.channel.bee_line_d = parse_double("channel.bee_line_d", v);
              }
            },
            [](const RunConfig& c) {
              return c.system.channel.bee_line_d ? fmt::format("{}", *c.system.channel.bee_line_d) : "none";
            }},
      QKD_REAL("detector.eta_b", system.detector.eta_b),
      QKD_REAL("detector.p_dark", system.detector.p_dark),
      Field{"detector.mode",
            [](RunConfig& c, std::string_view v) {
              if (v == "active") {
                c.system.detector.mode = BasisMode::Active;
              } else if (v == "passive") {
                c.system.detector.mode = BasisMode::Passive;
              } else {
                throw ConfigError(fmt::format("detector.mode: expected active or passive, got '{}'", v));
              }
            },
            [](const RunConfig& c) {
              return std::string(c.system.detector.mode == BasisMode::Active ? "active" : "passive");
            }},
      QKD_REAL("qber.opt", system.keyrate.qber_opt),
      QKD_REAL("qber.attrib_floor", system.keyrate.attrib_floor),
      QKD_REAL("keyrate.f_ec", system.keyrate.f_ec),
      Field{"keyrate.secret_fraction",
            [](RunConfig& c, std::string_view v) {
              if (v == "multiplicative") {
                c.system.keyrate.secret_fraction = SecretFraction::Multiplicative;
              } else if (v == "subtractive") {
                c.system.keyrate.secret_fraction = SecretFraction::Subtractive;
              } else {
                throw ConfigError(fmt::format(
                    "keyrate.secret_fraction: expected multiplicative or subtractive, got '{}'", v));
              }
            },
            [](const RunConfig& c) {
              return std::string(c.system.keyrate.secret_fraction == SecretFraction::Multiplicative
                                     ? "multiplicative"
                                     : "subtractive");
            }},
      QKD_BOOL("keyrate.monitor_tof", system.keyrate.monitor_tof),
      QKD_BOOL("keyrate.unmonitored", system.keyrate.unmonitored),
      QKD_REAL("keyrate.alarm_pulses", system.keyrate.alarm_pulses),
      Field{"eve.model",
            [](RunConfig& c, std::string_view v) {
              const auto m = parse_eve_model(v);
              if (!m) {
                throw ConfigError(fmt::format(
                    "eve.model: unknown '{}' (none, strategy-a, strategy-b, strategy-b-storage, unlimited)", v));
              }
              c.eve = *m;
            },
            [](const RunConfig& c) { return std::string(to_string(c.eve)); }},
      QKD_REAL("eve.lambda", attack.lambda),
      QKD_REAL("eve.gamma", attack.gamma),
      QKD_REAL("eve.t_e", attack.t_e),
      QKD_COUNT("sim.pulses", pulses),
      QKD_COUNT("sim.seed", seed),
      QKD_COUNT("sim.batch_size", batch_size),
      Field{"sim.workers",
            [](RunConfig& c, std::string_view v) {
              const auto n = parse_count("sim.workers", v);
              if (n < 1 || n > 4096) throw ConfigError("sim.workers must lie in [1, 4096]");
              c.workers = static_cast<unsigned>(n);
            },
            [](const RunConfig& c) { return fmt::format("{}", c.workers); }},
      Field{"sim.deficit",
            [](RunConfig& c, std::string_view v) {
              if (v == "unset") {
                c.deficit = DeficitPolicy::Unset;
              } else if (v == "blind") {
                c.deficit = DeficitPolicy::Blind;
              } else if (v == "short") {
                c.deficit = DeficitPolicy::Short;
              } else {
                throw ConfigError(fmt::format("sim.deficit: expected unset, blind or short, got '{}'", v));
              }
            },
            [](const RunConfig& c) { return std::string(to_string(c.deficit)); }},
      QKD_REAL("curve.d_min", curve.d_min),
      QKD_REAL("curve.d_max", curve.d_max),
      QKD_REAL("curve.step", curve.step),
      QKD_REAL("alarm.distance_km", alarm.distance_km),
      QKD_REAL("alarm.gamma_step", alarm.gamma_step),
      Field{"rates.mu_list",
            [](RunConfig& c, std::string_view v) {
              std::vector<double> out;
              while (!v.empty()) {
                const auto comma = v.find(',');
                const auto item = trim(v.substr(0, comma));
                if (!item.empty()) out.push_back(parse_double("rates.mu_list", item));
                if (comma == std::string_view::npos) break;
                v.remove_prefix(comma + 1);
              }
              if (out.empty()) throw ConfigError("rates.mu_list must contain at least one value");
              c.mu_list = std::move(out);
            },
            [](const RunConfig& c) { return fmt::format("{}", fmt::join(c.mu_list, ",")); }},
  };
  return table;
}

#undef QKD_REAL
#undef QKD_COUNT
#undef QKD_BOOL

const Field& find_field(std::string_view key) {
  const auto& table = fields();
  for (const auto& f : table) {
    if (f.key == key) return f;
  }
  const Field* match = nullptr;
  int hits = 0;
  for (const auto& f : table) {
    const auto dot = f.key.rfind('.');
    if (f.key.substr(dot + 1) == key) {
      match = &f;
      ++hits;
    }
  }
  if (hits == 1) return *match;
  throw ConfigError(fmt::format("unknown key '{}'; valid keys: {}", key, fmt::join(config_keys(), ", ")));
}

}  // namespace

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v)) {
    throw ConfigError(fmt::format("{}: expected a number, got '{}'", key, text));
  }
  return v;
}

std::uint64_t parse_count(std::string_view key, std::string_view text) {
  text = trim(text);
  // exact for integers written out in full
  std::uint64_t n = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
  if (ec == std::errc() && ptr == text.data() + text.size()) return n;
  const double v = parse_double(key, text);
  if (v < 0.0 || v != std::floor(v) || v >= 0x1p64) {
    throw ConfigError(fmt::format("{}: expected a non-negative integer, got '{}'", key, text));
  }
  return static_cast<std::uint64_t>(v);
}

void set_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_field(trim(key)).set(cfg, trim(value));
}

void apply_text(RunConfig& cfg, std::string_view text, std::string_view origin) {
  int line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("{}:{}: expected key = value, got '{}'", origin, line_no, line));
    }
    try {
      set_value(cfg, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", origin, line_no, e.what()));
    }
  }
}

void apply_file(RunConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  apply_text(cfg, buf.str(), path);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.emplace_back(f.key);
  return keys;
}

std::vector<std::string> effective_config(const RunConfig& cfg) {
  std::vector<std::string> lines;
  for (const auto& f : fields()) lines.push_back(fmt::format("{} = {}", f.key, f.get(cfg)));
  return lines;
}

void RunConfig::validate() const {
  try {
    system.validate();
    if (!(curve.d_min >= 0.0 && curve.d_max > curve.d_min && curve.step > 0.0)) {
      throw std::invalid_argument("curve needs 0 <= d_min < d_max and step > 0");
    }
    if (!(alarm.distance_km >= 0.0 && alarm.gamma_step > 0.0 && alarm.gamma_step <= 1.0)) {
      throw std::invalid_argument("alarm settings need distance >= 0 and gamma_step in (0, 1]");
    }
    for (double mu : mu_list) {
      if (!(mu > 0.0)) throw std::invalid_argument("rates.mu_list entries must be > 0");
    }
    if (pulses < 1) throw std::invalid_argument("sim.pulses must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("sim.batch_size must be >= 1");
    if (eve == EveModel::StrategyB || eve == EveModel::StrategyBStorage) attack.validate();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

SimConfig RunConfig::sim_config() const {
  SimConfig sim;
  sim.system = system;
  sim.eve = eve;
  sim.attack = attack;
  sim.deficit = deficit;
  sim.n_pulses = pulses;
  sim.seed = seed;
  sim.batch_size = batch_size;
  sim.workers = workers;
  return sim;
}

}  // namespace qkd
