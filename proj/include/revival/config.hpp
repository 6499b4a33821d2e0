#pragma once

// Run configuration: a flat `key = value` text file. Blank lines and text
// after '#' are ignored. Every key is optional; defaults reproduce the
// nbar = 320, Delta n = 40, sigma = 2.5 wave packet. Time-valued keys take
// an optional unit suffix, `T_rev` or `T_cl`, e.g. `t_max = 1.05 T_rev`.

#include <charconv>
#include <cstdint>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "revival/spectral.hpp"
#include "revival/wavepacket.hpp"

namespace revival {

/// Invalid configuration; `line` is 1-based, 0 when not tied to a line.
struct ConfigError : std::runtime_error {
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what), line(line) {}
  std::size_t line;
};

enum class TimeUnit { Atomic, Revival, Classical };

/// A time given either in atomic units or as a multiple of T_rev / T_cl.
struct TimeValue {
  double value = 0.0;
  TimeUnit unit = TimeUnit::Atomic;

  double resolve(const TimeScales& ts) const {
    switch (unit) {
      case TimeUnit::Revival: return value * ts.revival;
      case TimeUnit::Classical: return value * ts.classical;
      case TimeUnit::Atomic: break;
    }
    return value;
  }
  bool operator==(const TimeValue&) const = default;
};

struct RunConfig {
  // model
  int n_mean = 320;
  int n_span = 40;
  double sigma = 2.5;
  SigmaConvention sigma_convention = SigmaConvention::StdDev;
  EnergyLaw energy_law = EnergyLaw::QuadraticApprox;

  // sampling; dt unset means auto, exactly one of n_samples / t_max
  TimeValue t0{};
  std::optional<TimeValue> dt;
  std::optional<std::size_t> n_samples;
  std::optional<TimeValue> t_max = TimeValue{1.05, TimeUnit::Revival};
  std::optional<TimeValue> lifetime;

  // transform
  double omega0 = 6.0;
  int p_max = 6;
  int voices_per_octave = 8;
  std::size_t tau_stride = 4;
  std::vector<int> slice_harmonics{1, 2, 3, 4};
  std::vector<double> slice_scales;

  // analysis
  double band_threshold = 0.05;
  int max_bands = 4;
  Taper taper = Taper::None;
  double detect_threshold = 0.3;
  std::optional<TimeValue> min_separation;

  // output; the CLI --out flag and the environment take precedence in that order
  std::optional<std::string> output_dir;

  bool operator==(const RunConfig&) const = default;

  WavePacketModel model() const { return {n_mean, n_span, sigma, energy_law, sigma_convention}; }
  TimeScales time_scales() const { return revival::time_scales(n_mean); }

  double resolved_dt() const { return dt ? dt->resolve(time_scales()) : auto_time_step(model(), p_max); }
  double resolved_t0() const { return t0.resolve(time_scales()); }

  std::size_t resolved_samples() const {
    if (n_samples) return *n_samples;
    const double span = t_max->resolve(time_scales()) - resolved_t0();
    return static_cast<std::size_t>(std::floor(span / resolved_dt() + 1e-9)) + 1;
  }

  /// Quarter of the closest expected patch spacing, T_rev / (2 p_max) / 4.
  double resolved_min_separation() const {
    return min_separation ? min_separation->resolve(time_scales()) : time_scales().revival / (8.0 * p_max);
  }
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError(line, "'" + std::string(key) + "': expected a number, got '" + std::string(s) + "'");
  return v;
}

inline long long parse_int(std::string_view s, std::size_t line, std::string_view key) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError(line, "'" + std::string(key) + "': expected an integer, got '" + std::string(s) + "'");
  return v;
}

inline TimeValue parse_time(std::string_view s, std::size_t line, std::string_view key) {
  TimeValue tv;
  const auto space = s.find_first_of(" \t");
  if (space == std::string_view::npos) {
    tv.value = parse_double(s, line, key);
    return tv;
  }
  tv.value = parse_double(s.substr(0, space), line, key);
  const auto unit = trim(s.substr(space));
  if (unit == "T_rev") {
    tv.unit = TimeUnit::Revival;
  } else if (unit == "T_cl") {
    tv.unit = TimeUnit::Classical;
  } else if (unit != "au") {
    throw ConfigError(line, "'" + std::string(key) + "': unknown time unit '" + std::string(unit) + "'");
  }
  return tv;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view s, F&& item) {
  std::vector<T> out;
  while (!s.empty()) {
    const auto comma = s.find(',');
    out.push_back(item(trim(s.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string format_time(const TimeValue& tv) {
  switch (tv.unit) {
    case TimeUnit::Revival: return format_double(tv.value) + " T_rev";
    case TimeUnit::Classical: return format_double(tv.value) + " T_cl";
    case TimeUnit::Atomic: break;
  }
  return format_double(tv.value);
}

}  // namespace config_detail

/// Parses configuration text. Unknown keys, malformed values and
/// inconsistent combinations raise ConfigError with the offending line.
/// Cross-field checks, also rerun after command-line overrides.
inline void validate_config(const RunConfig& cfg) {
  if (cfg.n_mean < 2) throw ConfigError(0, "n_mean must be >= 2");
  if (cfg.n_span <= 0 || cfg.n_span >= cfg.n_mean) throw ConfigError(0, "n_span must satisfy 0 < n_span < n_mean");
  if (cfg.omega0 < 5.0) throw ConfigError(0, "omega0 must be >= 5");
  if (cfg.p_max < 1) throw ConfigError(0, "p_max must be >= 1");
  if (cfg.lifetime && !(cfg.lifetime->value > 0.0)) throw ConfigError(0, "lifetime must be > 0");
  if (cfg.t_max && !(cfg.t_max->resolve(cfg.time_scales()) > cfg.resolved_t0()))
    throw ConfigError(0, "t_max must exceed t0");
  if (cfg.resolved_samples() < 2) throw ConfigError(0, "the sampling grid has fewer than 2 samples");
  for (int p : cfg.slice_harmonics)
    if (p > cfg.p_max) throw ConfigError(0, "slice harmonic " + std::to_string(p) + " exceeds p_max");
}

inline RunConfig parse_config(std::istream& in) {
  using namespace config_detail;
  RunConfig cfg;
  bool saw_n_samples = false;
  bool saw_t_max = false;
  std::size_t n_samples_line = 0;
  bool saw_slice_p = false;
  bool saw_slice_s = false;
  std::size_t slice_line = 0;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text(raw);
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key(trim(text.substr(0, eq)));
    const std::string_view value = trim(text.substr(eq + 1));
    if (value.empty()) throw ConfigError(line, "'" + key + "': missing value");

    auto positive = [&](double v) {
      if (!(v > 0.0)) throw ConfigError(line, "'" + key + "' must be > 0");
      return v;
    };
    auto positive_int = [&](long long v) {
      if (v < 1) throw ConfigError(line, "'" + key + "' must be >= 1");
      return v;
    };

    if (key == "n_mean") {
      cfg.n_mean = static_cast<int>(parse_int(value, line, key));
    } else if (key == "n_span") {
      cfg.n_span = static_cast<int>(parse_int(value, line, key));
    } else if (key == "sigma") {
      cfg.sigma = positive(parse_double(value, line, key));
    } else if (key == "sigma_convention") {
      if (value == "stddev") {
        cfg.sigma_convention = SigmaConvention::StdDev;
      } else if (value == "fwhm") {
        cfg.sigma_convention = SigmaConvention::Fwhm;
      } else {
        throw ConfigError(line, "sigma_convention must be 'stddev' or 'fwhm'");
      }
    } else if (key == "energy_law") {
      if (value == "quadratic") {
        cfg.energy_law = EnergyLaw::QuadraticApprox;
      } else if (value == "exact") {
        cfg.energy_law = EnergyLaw::ExactHydrogenic;
      } else {
        throw ConfigError(line, "energy_law must be 'quadratic' or 'exact'");
      }
    } else if (key == "t0") {
      cfg.t0 = parse_time(value, line, key);
    } else if (key == "dt") {
      if (value == "auto") {
        cfg.dt.reset();
      } else {
        cfg.dt = parse_time(value, line, key);
        positive(cfg.dt->value);
      }
    } else if (key == "n_samples") {
      const auto n = parse_int(value, line, key);
      if (n < 2) throw ConfigError(line, "n_samples must be >= 2");
      cfg.n_samples = static_cast<std::size_t>(n);
      saw_n_samples = true;
      n_samples_line = line;
    } else if (key == "t_max") {
      cfg.t_max = parse_time(value, line, key);
      saw_t_max = true;
    } else if (key == "lifetime") {
      if (value == "none") {
        cfg.lifetime.reset();
      } else {
        cfg.lifetime = parse_time(value, line, key);
        positive(cfg.lifetime->value);
      }
    } else if (key == "omega0") {
      cfg.omega0 = parse_double(value, line, key);
      if (cfg.omega0 < 5.0) throw ConfigError(line, "omega0 must be >= 5");
    } else if (key == "p_max") {
      cfg.p_max = static_cast<int>(positive_int(parse_int(value, line, key)));
    } else if (key == "voices_per_octave") {
      cfg.voices_per_octave = static_cast<int>(positive_int(parse_int(value, line, key)));
    } else if (key == "tau_stride") {
      cfg.tau_stride = static_cast<std::size_t>(positive_int(parse_int(value, line, key)));
    } else if (key == "slice_harmonics") {
      cfg.slice_harmonics = parse_list<int>(value, [&](std::string_view v) {
        return static_cast<int>(positive_int(parse_int(v, line, key)));
      });
      saw_slice_p = true;
      slice_line = line;
    } else if (key == "slice_scales") {
      cfg.slice_scales = parse_list<double>(value, [&](std::string_view v) { return positive(parse_double(v, line, key)); });
      saw_slice_s = true;
      slice_line = line;
    } else if (key == "band_threshold") {
      cfg.band_threshold = parse_double(value, line, key);
      if (!(cfg.band_threshold > 0.0 && cfg.band_threshold < 1.0)) throw ConfigError(line, "band_threshold must be in (0,1)");
    } else if (key == "max_bands") {
      cfg.max_bands = static_cast<int>(positive_int(parse_int(value, line, key)));
    } else if (key == "taper") {
      if (value == "none") {
        cfg.taper = Taper::None;
      } else if (value == "hann") {
        cfg.taper = Taper::Hann;
      } else {
        throw ConfigError(line, "taper must be 'none' or 'hann'");
      }
    } else if (key == "detect_threshold") {
      cfg.detect_threshold = parse_double(value, line, key);
      if (!(cfg.detect_threshold > 0.0 && cfg.detect_threshold < 1.0))
        throw ConfigError(line, "detect_threshold must be in (0,1)");
    } else if (key == "min_separation") {
      if (value == "auto") {
        cfg.min_separation.reset();
      } else {
        cfg.min_separation = parse_time(value, line, key);
        positive(cfg.min_separation->value);
      }
    } else if (key == "output_dir") {
      cfg.output_dir = std::string(value);
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
  }

  if (saw_n_samples && saw_t_max) throw ConfigError(n_samples_line, "give exactly one of n_samples and t_max");
  if (saw_n_samples) cfg.t_max.reset();
  if (saw_slice_p && saw_slice_s) throw ConfigError(slice_line, "give exactly one of slice_harmonics and slice_scales");
  if (saw_slice_s) cfg.slice_harmonics.clear();

  validate_config(cfg);
  return cfg;
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open config file '" + path + "'");
  return parse_config(in);
}

/// Canonical `key = value` listing; parse_config(echo(c)) == c.
inline std::string echo_config(const RunConfig& c) {
  using namespace config_detail;
  std::ostringstream o;
  o << "n_mean = " << c.n_mean << '\n'
    << "n_span = " << c.n_span << '\n'
    << "sigma = " << format_double(c.sigma) << '\n'
    << "sigma_convention = " << (c.sigma_convention == SigmaConvention::Fwhm ? "fwhm" : "stddev") << '\n'
    << "energy_law = " << (c.energy_law == EnergyLaw::ExactHydrogenic ? "exact" : "quadratic") << '\n'
    << "t0 = " << format_time(c.t0) << '\n'
    << "dt = " << (c.dt ? format_time(*c.dt) : std::string("auto")) << '\n';
  if (c.n_samples) {
    o << "n_samples = " << *c.n_samples << '\n';
  } else {
    o << "t_max = " << format_time(*c.t_max) << '\n';
  }
  o << "lifetime = " << (c.lifetime ? format_time(*c.lifetime) : std::string("none")) << '\n'
    << "omega0 = " << format_double(c.omega0) << '\n'
    << "p_max = " << c.p_max << '\n'
    << "voices_per_octave = " << c.voices_per_octave << '\n'
    << "tau_stride = " << c.tau_stride << '\n';
  if (!c.slice_scales.empty()) {
    o << "slice_scales = ";
    for (std::size_t i = 0; i < c.slice_scales.size(); ++i) o << (i ? ", " : "") << format_double(c.slice_scales[i]);
    o << '\n';
  } else {
    o << "slice_harmonics = ";
    for (std::size_t i = 0; i < c.slice_harmonics.size(); ++i) o << (i ? ", " : "") << c.slice_harmonics[i];
    o << '\n';
  }
  o << "band_threshold = " << format_double(c.band_threshold) << '\n'
    << "max_bands = " << c.max_bands << '\n'
    << "taper = " << (c.taper == Taper::Hann ? "hann" : "none") << '\n'
    << "detect_threshold = " << format_double(c.detect_threshold) << '\n'
    << "min_separation = " << (c.min_separation ? format_time(*c.min_separation) : std::string("auto")) << '\n';
  if (c.output_dir) o << "output_dir = " << *c.output_dir << '\n';
  return o.str();
}

/// 64-bit FNV-1a of the canonical echo, as 16 hex digits.
inline std::string config_hash(const RunConfig& c) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : echo_config(c)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xf];
  return out;
}

}  // namespace revival
