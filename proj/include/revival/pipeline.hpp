#pragma once

// Lazy stage graph from synthesis to estimation, and the artifact writers.
// Numbers go out in shortest round-trip form.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "revival/config.hpp"
#include "revival/cwt.hpp"
#include "revival/revival.hpp"
#include "revival/spectral.hpp"
#include "revival/wavepacket.hpp"

namespace revival {

class Pipeline {
 public:
  explicit Pipeline(RunConfig config, unsigned threads = 1)
      : config_(std::move(config)), threads_(threads), params_(config_.omega0), model_(config_.model()) {}

  const RunConfig& config() const { return config_; }
  const MorletParams& params() const { return params_; }
  const WavePacketModel& model() const { return model_; }
  TimeScales time_scales() const { return model_.scales(); }

  const TimeSeries& series() {
    if (!series_) {
      TimeSeries s = autocorrelation_power(model_, config_.resolved_t0(), config_.resolved_dt(),
                                           config_.resolved_samples(), threads_);
      if (config_.lifetime) s = apply_decay(s, config_.lifetime->resolve(time_scales()));
      series_ = std::move(s);
    }
    return *series_;
  }

  const SpectralDensity& spectrum() {
    if (!spectrum_) spectrum_ = power_spectrum(series(), config_.taper);
    return *spectrum_;
  }

  std::vector<BandPeak> bands() {
    return band_centers(spectrum(), static_cast<std::size_t>(config_.max_bands), config_.band_threshold);
  }

  /// Least-squares fundamental through the origin, f_b ~ p_b f0, or nullopt without bands.
  std::optional<double> spectral_fundamental() {
    double num = 0.0;
    double den = 0.0;
    for (const BandPeak& b : bands()) {
      const double p = *b.harmonic_index;
      num += p * b.frequency;
      den += p * p;
    }
    if (den == 0.0) return std::nullopt;
    return num / den;
  }

  const ScalogramGrid& scalogram() {
    if (!grid_) {
      const TimeSeries& s = series();
      std::vector<double> taus;
      for (std::size_t i = 0; i < s.size(); i += config_.tau_stride) taus.push_back(s.time(i));
      const auto scales =
          harmonic_scale_grid(time_scales().classical, config_.p_max, params_, config_.voices_per_octave);
      grid_ = cwt_fast(s, scales, taus, params_, threads_);
    }
    return *grid_;
  }

  /// Requested slice scales: explicit values, or s_p for each listed harmonic.
  std::vector<double> slice_scales() const {
    if (!config_.slice_scales.empty()) return config_.slice_scales;
    std::vector<double> out;
    for (int p : config_.slice_harmonics)
      out.push_back(scale_for_frequency(p / time_scales().classical, params_));
    return out;
  }

  std::vector<ScaleSlice> slices() {
    std::vector<ScaleSlice> out;
    for (double s : slice_scales()) out.push_back(scale_slice(scalogram(), s));
    return out;
  }

  PatchSet predicted() {
    const TimeScales ts = time_scales();
    return predicted_patch_grid(ts.classical, ts.revival, config_.p_max, series().t_end(), params_);
  }

  const PatchSet& detections() {
    if (!detections_)
      detections_ = detect_patches(scalogram(), config_.detect_threshold, config_.resolved_min_separation());
    return *detections_;
  }

  RevivalEstimate estimate() {
    EstimatorOptions opt;
    opt.fundamental = spectral_fundamental();
    opt.tau_resolution = series().dt() * static_cast<double>(config_.tau_stride);
    return estimate_revival_time(detections(), params_, opt);
  }

 private:
  RunConfig config_;
  unsigned threads_;
  MorletParams params_;
  WavePacketModel model_;
  std::optional<TimeSeries> series_;
  std::optional<SpectralDensity> spectrum_;
  std::optional<ScalogramGrid> grid_;
  std::optional<PatchSet> detections_;
};

namespace io {

using config_detail::format_double;

/// Display scalings for plotting (time in 1e10 a.u., frequency
/// in 1e-8 a.u., scale in 1e8, slice energy in 1e6).
inline void write_header(std::ostream& o, const std::string& artifact, const RunConfig& cfg) {
  const TimeScales ts = cfg.time_scales();
  o << "# revival-cwt " << artifact << '\n'
    << "# config_hash = " << config_hash(cfg) << '\n';
  std::istringstream echo(echo_config(cfg));
  for (std::string line; std::getline(echo, line);) o << "# config: " << line << '\n';
  o << "# T_cl = " << format_double(ts.classical) << '\n'
    << "# T_rev = " << format_double(ts.revival) << '\n'
    << "# display_time_unit = 1e10\n"
    << "# display_frequency_unit = 1e-8\n"
    << "# display_scale_unit = 1e8\n"
    << "# display_energy_unit = 1e6\n";
}

/// Recovers the configuration from the `# config:` lines of an artifact header.
inline RunConfig parse_header_config(std::istream& in) {
  std::string body;
  for (std::string line; std::getline(in, line);) {
    static const std::string tag = "# config: ";
    if (line.rfind(tag, 0) == 0) body += line.substr(tag.size()) + '\n';
  }
  return parse_config_string(body);
}

inline void write_series(std::ostream& o, const TimeSeries& s) {
  o << "t,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) o << format_double(s.time(i)) << ',' << format_double(s[i]) << '\n';
}

inline void write_spectrum(std::ostream& o, const SpectralDensity& sd) {
  o << "# df = " << format_double(sd.df) << '\n'
    << "# n_samples = " << sd.n_samples << '\n'
    << "# n_fft = " << sd.n_fft << '\n'
    << "frequency,power\n";
  for (std::size_t k = 0; k < sd.power.size(); ++k)
    o << format_double(sd.frequency(k)) << ',' << format_double(sd.power[k]) << '\n';
}

inline void write_bands(std::ostream& o, const std::vector<BandPeak>& bands) {
  o << "harmonic,frequency,power\n";
  for (const BandPeak& b : bands)
    o << *b.harmonic_index << ',' << format_double(b.frequency) << ',' << format_double(b.power) << '\n';
}

inline void write_scalogram(std::ostream& o, const ScalogramGrid& g) {
  o << "tau,scale,energy\n";
  for (std::size_t i = 0; i < g.n_scales(); ++i)
    for (std::size_t j = 0; j < g.n_taus(); ++j)
      o << format_double(g.taus[j]) << ',' << format_double(g.scales[i]) << ',' << format_double(g.energy(i, j)) << '\n';
}

inline void write_scalogram_meta(std::ostream& o, const ScalogramGrid& g) {
  o << "n_scales = " << g.n_scales() << '\n'
    << "n_taus = " << g.n_taus() << '\n'
    << "omega0 = " << format_double(g.omega0) << '\n'
    << "tau_first = " << format_double(g.taus.front()) << '\n'
    << "tau_last = " << format_double(g.taus.back()) << '\n'
    << "signal_begin = " << format_double(g.signal_begin) << '\n'
    << "signal_end = " << format_double(g.signal_end) << '\n'
    << "cone_widths = " << format_double(ScalogramGrid::kConeWidths) << '\n'
    << "# scale,frequency,cone_tau_lo,cone_tau_hi (cells outside [lo, hi] are edge-contaminated)\n";
  const MorletParams params(g.omega0);
  for (double s : g.scales) {
    const double reach = ScalogramGrid::kConeWidths * s;
    o << format_double(s) << ',' << format_double(frequency_for_scale(s, params)) << ','
      << format_double(g.signal_begin + reach) << ',' << format_double(g.signal_end - reach) << '\n';
  }
}

inline void write_patches(std::ostream& o, const PatchSet& predicted, const PatchSet& detected) {
  auto opt = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string("-"); };
  o << "p,k,tau,frequency,scale,energy,source\n";
  for (const PatchSet* set : {&predicted, &detected})
    for (const Patch& p : *set)
      o << opt(p.p) << ',' << opt(p.k) << ',' << format_double(p.tau) << ',' << format_double(p.frequency) << ','
        << format_double(p.scale) << ',' << format_double(p.energy) << ','
        << (p.source == PatchSource::Predicted ? "predicted" : "detected") << '\n';
}

inline void write_estimate(std::ostream& o, const RevivalEstimate& est, double model_revival) {
  o << "T_rev_hat = " << format_double(est.revival_time) << '\n'
    << "T_rev_model = " << format_double(model_revival) << '\n'
    << "relative_error = " << format_double((est.revival_time - model_revival) / model_revival) << '\n'
    << "n_patches_used = " << est.n_patches_used << '\n'
    << "residual_rms = " << format_double(est.residual_rms) << '\n'
    << "# p,scale,frequency,n_detections,lattice_steps,estimate,variance,weight,residual_rms\n";
  for (const RowEstimate& r : est.rows)
    o << "row = " << r.p << ',' << format_double(r.scale) << ',' << format_double(r.frequency) << ','
      << r.n_detections << ',' << r.lattice_steps << ',' << format_double(r.estimate) << ','
      << format_double(r.variance) << ',' << format_double(r.weight) << ',' << format_double(r.residual_rms) << '\n';
}

}  // namespace io

/// Subcommand names understood by run_stage.
inline const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names{"simulate", "spectrum", "scalogram", "slices", "detect", "estimate", "all"};
  return names;
}

/// Runs one subcommand and writes its artifacts into `out_dir`; returns the written paths.
inline std::vector<std::filesystem::path> run_stage(const std::string& stage, Pipeline& pipe,
                                                    const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  auto open = [&](const std::string& name, const std::string& artifact, bool header = true) {
    const fs::path path = out_dir / name;
    auto f = std::make_unique<std::ofstream>(path, std::ios::binary);
    if (!*f) throw std::runtime_error("cannot write " + path.string());
    if (header) io::write_header(*f, artifact, pipe.config());
    written.push_back(path);
    return f;
  };
  const bool all = stage == "all";

  if (all || stage == "simulate") io::write_series(*open("series.csv", "series"), pipe.series());
  if (all || stage == "spectrum") {
    io::write_spectrum(*open("spectrum.csv", "spectrum"), pipe.spectrum());
    io::write_bands(*open("bands.csv", "bands"), pipe.bands());
  }
  if (all || stage == "scalogram") {
    io::write_scalogram(*open("scalogram.csv", "scalogram"), pipe.scalogram());
    io::write_scalogram_meta(*open("scalogram.meta", "scalogram-meta"), pipe.scalogram());
  }
  if (all || stage == "slices") {
    const auto slices = pipe.slices();
    const bool by_harmonic = pipe.config().slice_scales.empty();
    for (std::size_t i = 0; i < slices.size(); ++i) {
      const std::string name = by_harmonic ? "slice_p" + std::to_string(pipe.config().slice_harmonics[i]) + ".csv"
                                           : "slice_" + std::to_string(i) + ".csv";
      auto f = open(name, "slice");
      *f << "# requested_scale = " << io::format_double(pipe.slice_scales()[i]) << '\n'
         << "# scale = " << io::format_double(slices[i].scale) << '\n';
      io::write_series(*f, slices[i].series);
    }
  }
  if (all || stage == "detect") io::write_patches(*open("patches.csv", "patches"), pipe.predicted(), pipe.detections());
  if (all || stage == "estimate") {
    const RevivalEstimate est = pipe.estimate();
    io::write_estimate(*open("estimate.txt", "estimate"), est, pipe.time_scales().revival);
  }
  if (written.empty()) throw ConfigError(0, "unknown subcommand '" + stage + "'");
  return written;
}

}  // namespace revival
