#pragma once

// One-sided power spectrum of a real time series and extraction of the
// harmonic band centres f_p.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include "revival/errors.hpp"
#include "revival/fft.hpp"
#include "revival/wavepacket.hpp"

namespace revival {

enum class Taper { None, Hann };

/// Power on the grid f_k = k * df, k = 0 .. n_fft/2.
///
/// Normalization: power[k] = c_k |X_k|^2 / (n_fft * n_samples), with
/// c_k = 1 at DC and Nyquist and 2 elsewhere, where X is the DFT of the
/// (mean-subtracted, optionally tapered) signal zero-padded to n_fft.
/// By Parseval, sum(power) equals the mean square of that signal over
/// its n_samples original samples.
struct SpectralDensity {
  double df = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_fft = 0;
  std::vector<double> power;

  double frequency(std::size_t k) const { return static_cast<double>(k) * df; }
};

inline SpectralDensity power_spectrum(const TimeSeries& series, Taper taper = Taper::None) {
  const std::size_t n = series.size();
  detail::require(n >= 16, "power_spectrum: need at least 16 samples");

  double mean = 0.0;
  for (double v : series.samples()) mean += v;
  mean /= static_cast<double>(n);

  const std::size_t n_fft = fft::next_pow2(n);
  fft::Buffer in(n_fft), out(n_fft);
  for (std::size_t i = 0; i < n; ++i) {
    double v = series[i] - mean;
    if (taper == Taper::Hann)
      v *= 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    in[i] = v;
  }
  fft::Plan(n_fft, fft::Direction::Forward).execute(in, out);

  SpectralDensity sd;
  sd.n_samples = n;
  sd.n_fft = n_fft;
  sd.df = 1.0 / (static_cast<double>(n_fft) * series.dt());
  sd.power.resize(n_fft / 2 + 1);
  const double norm = 1.0 / (static_cast<double>(n_fft) * static_cast<double>(n));
  for (std::size_t k = 0; k <= n_fft / 2; ++k) {
    const double edge = (k == 0 || k == n_fft / 2) ? 1.0 : 2.0;
    sd.power[k] = edge * std::norm(out[k]) * norm;
  }
  return sd;
}

struct BandPeak {
  double frequency = 0.0;  ///< power-weighted centroid
  double power = 0.0;      ///< summed power of the band's above-threshold bins
  std::optional<int> harmonic_index;
};

struct BandOptions {
  /// Adjacent above-threshold clusters belong to one band when the gap
  /// between them is below this fraction of the lowest cluster's frequency.
  double merge_fraction = 0.25;
};

/// Band centres of a harmonic spectrum, ascending in frequency.
///
/// Bins (excluding DC) with power >= rel_threshold * max form contiguous
/// clusters. A cluster touching DC is dropped. Clusters closer than
/// merge_fraction of the lowest cluster frequency are merged, because the
/// level-pair lines inside one band are resolved separately. The max_bands
/// strongest bands are kept and indexed by the nearest integer ratio to the
/// lowest of them.
inline std::vector<BandPeak> band_centers(const SpectralDensity& spectrum, std::size_t max_bands,
                                          double rel_threshold, BandOptions options = {}) {
  detail::require(rel_threshold > 0.0 && rel_threshold < 1.0, "band_centers: rel_threshold must be in (0,1)");
  const auto& p = spectrum.power;
  if (p.size() < 2 || max_bands == 0) return {};

  const double peak = *std::max_element(p.begin() + 1, p.end());
  if (!(peak > 0.0)) return {};
  const double cut = rel_threshold * peak;

  struct Cluster {
    std::size_t first, last;
  };
  std::vector<Cluster> clusters;
  for (std::size_t k = 1; k < p.size(); ++k) {
    if (p[k] < cut) continue;
    if (!clusters.empty() && clusters.back().last + 1 == k) {
      clusters.back().last = k;
    } else {
      clusters.push_back({k, k});
    }
  }

  // A cluster running into DC is leakage of the pedestal or of a decay envelope.
  if (!clusters.empty() && clusters.front().first == 1) clusters.erase(clusters.begin());
  if (clusters.empty()) return {};

  const double merge_gap = options.merge_fraction * spectrum.frequency(clusters.front().first);
  std::vector<Cluster> bands;
  for (const Cluster& c : clusters) {
    if (!bands.empty()) {
      const double gap = spectrum.frequency(c.first) - spectrum.frequency(bands.back().last);
      if (gap < merge_gap) {
        bands.back().last = c.last;
        continue;
      }
    }
    bands.push_back(c);
  }

  std::vector<BandPeak> peaks;
  for (const Cluster& b : bands) {
    double total = 0.0;
    double moment = 0.0;
    for (std::size_t k = b.first; k <= b.last; ++k) {
      if (p[k] < cut) continue;
      total += p[k];
      moment += p[k] * spectrum.frequency(k);
    }
    peaks.push_back({moment / total, total, std::nullopt});
  }

  std::stable_sort(peaks.begin(), peaks.end(), [](const BandPeak& a, const BandPeak& b) { return a.power > b.power; });
  if (peaks.size() > max_bands) peaks.resize(max_bands);
  std::sort(peaks.begin(), peaks.end(), [](const BandPeak& a, const BandPeak& b) { return a.frequency < b.frequency; });

  const double lowest = peaks.front().frequency;
  for (BandPeak& b : peaks) b.harmonic_index = std::max(1, static_cast<int>(std::lround(b.frequency / lowest)));
  return peaks;
}

}  // namespace revival
