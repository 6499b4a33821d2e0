#pragma once

// Fractional-revival patches in the time-frequency plane: the closed-form
// transform of the model signal, the predicted patch lattice
//   f_p = p / T_cl,  s_p = omega0 / (2 pi f_p),  tau = k T_rev / (2p),
// detection of patches in a numerical scalogram and the revival-time
// estimate built from their spacing.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "revival/cwt.hpp"
#include "revival/errors.hpp"
#include "revival/wavepacket.hpp"

namespace revival {

enum class PatchSource { Predicted, Detected };

struct Patch {
  std::optional<int> p;  ///< harmonic index, >= 1 when assigned
  std::optional<int> k;  ///< revival index, >= 1 when assigned
  double tau = 0.0;
  double frequency = 0.0;
  double scale = 0.0;
  double energy = 0.0;
  PatchSource source = PatchSource::Detected;
};

using PatchSet = std::vector<Patch>;

/// T(tau, s) = sqrt(2 pi s) pi^{-1/4} sum_{n,m} w_n w_m e^{-i E_nm tau} e^{-(omega0 + s E_nm)^2 / 2}.
/// `energies[i]` is the level energy of n = weights.n_min() + i. The n = m
/// terms are kept.
inline Complex analytic_cwt(double tau, double scale, const WeightDistribution& weights,
                            std::span<const double> energies, const MorletParams& params) {
  detail::require(scale > 0.0, "analytic_cwt: scale must be > 0");
  detail::require(energies.size() == weights.size(), "analytic_cwt: one energy per level required");
  const double w0 = params.omega0();
  Complex acc{};
  for (std::size_t n = 0; n < weights.size(); ++n) {
    for (std::size_t m = 0; m < weights.size(); ++m) {
      const double gap = energies[n] - energies[m];
      const double d = w0 + scale * gap;
      const double amp = weights[n] * weights[m] * std::exp(-0.5 * d * d);
      if (amp == 0.0) continue;
      acc += amp * std::polar(1.0, -gap * tau);
    }
  }
  return std::sqrt(2.0 * std::numbers::pi * scale) * kMorletNorm * acc;
}

inline Complex analytic_cwt(double tau, double scale, const WavePacketModel& model, const MorletParams& params) {
  const WeightDistribution w = gaussian_weights(model);
  std::vector<double> e(w.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = level_energy(w.n_min() + static_cast<int>(i), model);
  return analytic_cwt(tau, scale, w, e, params);
}

/// Scale at which the pair gap E_nm < 0 dominates: omega0 = -s E_nm.
inline double patch_constraint_scale(double energy_gap, const MorletParams& params) {
  detail::require(energy_gap < 0.0, "patch_constraint_scale: E_nm must be negative");
  return -params.omega0() / energy_gap;
}

/// Every (p, k) with 1 <= p <= p_max, k >= 1, k T_rev / (2p) <= tau_max, sorted by (p, tau).
inline PatchSet predicted_patch_grid(double classical_period, double revival_period, int p_max, double tau_max,
                                     const MorletParams& params) {
  detail::require(p_max >= 1, "predicted_patch_grid: p_max must be >= 1");
  detail::require(tau_max > 0.0, "predicted_patch_grid: tau_max must be > 0");
  detail::require(classical_period > 0.0 && revival_period > 0.0, "predicted_patch_grid: periods must be > 0");
  PatchSet out;
  for (int p = 1; p <= p_max; ++p) {
    const double f = p / classical_period;
    const double s = scale_for_frequency(f, params);
    for (int k = 1;; ++k) {
      const double tau = k * revival_period / (2.0 * p);
      if (tau > tau_max) break;
      out.push_back({p, k, tau, f, s, 0.0, PatchSource::Predicted});
    }
  }
  return out;
}

/// Largest distance to an integer of tau (E_{n,n+p} - E_{n',n'+p}) / (2 pi)
/// over all n, n' with n, n + p in the support. Zero means the phases
/// e^{-i tau E_{n,n+p}} agree for every n. Quadratic law only.
inline double coherence_residual(double tau, int p, const WavePacketModel& model) {
  detail::require(model.energy_law() == EnergyLaw::QuadraticApprox,
                  "coherence_residual: defined for the quadratic energy law");
  detail::require(p >= 1, "coherence_residual: p must be >= 1");
  std::vector<double> gaps;
  for (int n = model.n_min(); n + p <= model.n_max(); ++n)
    gaps.push_back(quadratic_energy(n, model) - quadratic_energy(n + p, model));
  double worst = 0.0;
  for (std::size_t a = 0; a < gaps.size(); ++a)
    for (std::size_t b = a + 1; b < gaps.size(); ++b) {
      const double cycles = tau * (gaps[a] - gaps[b]) / (2.0 * std::numbers::pi);
      worst = std::max(worst, std::abs(cycles - std::round(cycles)));
    }
  return worst;
}

/// Patch candidates in a scalogram. A cell is reported when it
///  - is the first maximum of its row over tau +- min_separation, with that
///    whole window outside the cone of influence,
///  - is not exceeded by the adjacent scale rows at the same tau, and
///  - reaches rel_threshold times the largest such candidate of its row.
/// Detections carry tau, scale, frequency and energy; p and k stay unset.
inline PatchSet detect_patches(const ScalogramGrid& grid, double rel_threshold, double min_separation) {
  detail::require(rel_threshold > 0.0 && rel_threshold < 1.0, "detect_patches: rel_threshold must be in (0,1)");
  detail::require(min_separation >= 0.0, "detect_patches: min_separation must be >= 0");
  PatchSet out;
  if (grid.n_scales() == 0 || grid.n_taus() < 3) return out;

  const double step = grid.taus[1] - grid.taus[0];
  const auto half = static_cast<std::size_t>(std::max(1.0, std::round(min_separation / step)));
  const auto& e = grid.energy;
  const std::size_t cols = grid.n_taus();
  const MorletParams params(grid.omega0);

  for (std::size_t i = 0; i < grid.n_scales(); ++i) {
    std::vector<std::size_t> candidates;
    for (std::size_t j = half; j + half < cols; ++j) {
      if (grid.in_cone(i, j - half) || grid.in_cone(i, j + half)) continue;
      const double v = e(i, j);
      if (!(v > 0.0)) continue;
      bool is_max = true;
      for (std::size_t q = j - half; q <= j + half && is_max; ++q) {
        if (q < j ? e(i, q) >= v : e(i, q) > v) is_max = false;
      }
      if (!is_max) continue;
      if (i > 0 && e(i - 1, j) > v) continue;
      if (i + 1 < grid.n_scales() && e(i + 1, j) > v) continue;
      candidates.push_back(j);
    }
    if (candidates.empty()) continue;
    double row_max = 0.0;
    for (std::size_t j : candidates) row_max = std::max(row_max, e(i, j));
    for (std::size_t j : candidates) {
      if (e(i, j) < rel_threshold * row_max) continue;
      out.push_back({std::nullopt, std::nullopt, grid.taus[j], frequency_for_scale(grid.scales[i], params),
                     grid.scales[i], e(i, j), PatchSource::Detected});
    }
  }
  return out;
}

struct RowEstimate {
  int p = 0;
  double scale = 0.0;
  double frequency = 0.0;
  std::size_t n_detections = 0;
  int lattice_steps = 0;    ///< number of T_rev/(2p) steps spanned
  double estimate = 0.0;    ///< 2p * mean spacing
  double variance = 0.0;
  double weight = 0.0;      ///< normalized inverse-variance weight
  double residual_rms = 0.0;  ///< rms of tau - k T_rev_hat / (2p) over the row
};

struct RevivalEstimate {
  double revival_time = 0.0;
  std::vector<RowEstimate> rows;
  std::size_t n_patches_used = 0;
  double residual_rms = 0.0;  ///< rms over used detections of tau - k T_rev_hat / (2p)
};

struct EstimatorOptions {
  /// Known fundamental frequency (e.g. 1/T_cl from the spectrum). When
  /// unset, harmonics are inferred from the row frequencies alone.
  std::optional<double> fundamental;
  /// Relative tolerance for a row frequency to count as p times the fundamental.
  double harmonic_tolerance = 0.03;
  int max_subharmonic = 12;
  /// Translation resolution of the detections; floors each row's variance.
  double tau_resolution = 0.0;
};

namespace detail {

struct DetectedRow {
  double scale;
  double frequency;
  std::vector<double> taus;
};

inline std::optional<double> infer_fundamental(const std::vector<DetectedRow>& rows, const EstimatorOptions& opt) {
  double slowest = rows.front().frequency;
  for (const auto& r : rows) slowest = std::min(slowest, r.frequency);
  for (int q = 1; q <= opt.max_subharmonic; ++q) {
    const double f0 = slowest / q;
    bool ok = true;
    for (const auto& r : rows) {
      const double p = std::max(1.0, std::round(r.frequency / f0));
      if (std::abs(r.frequency / (p * f0) - 1.0) > opt.harmonic_tolerance) {
        ok = false;
        break;
      }
    }
    if (ok) return f0;
  }
  return std::nullopt;
}

}  // namespace detail

/// Revival time from the tau spacing of detected patches.
///
/// Rows (distinct scales) with at least two detections are given a harmonic
/// index p from their frequency ratio to the fundamental. In a row the
/// spacing of consecutive patches is T_rev / (2p); a gap that is a multiple
/// m of the row's smallest gap counts as m steps. Row estimates that come
/// out an integer multiple of the cross-row median (every other patch
/// missed) are divided back, then combined with inverse-variance weights.
inline RevivalEstimate estimate_revival_time(const PatchSet& detections, const MorletParams& params,
                                             const EstimatorOptions& options = {}) {
  std::map<double, detail::DetectedRow> by_scale;
  for (const Patch& d : detections) {
    auto& row = by_scale[d.scale];
    row.scale = d.scale;
    row.frequency = frequency_for_scale(d.scale, params);
    row.taus.push_back(d.tau);
  }
  std::vector<detail::DetectedRow> rows;
  for (auto& [s, r] : by_scale)
    if (r.taus.size() >= 2) rows.push_back(std::move(r));
  if (rows.empty()) throw EstimationError("estimate_revival_time: no scale row has two or more detections");

  double f0 = 0.0;
  if (options.fundamental) {
    detail::require(*options.fundamental > 0.0, "estimate_revival_time: fundamental must be > 0");
    f0 = *options.fundamental;
  } else {
    const auto inferred = detail::infer_fundamental(rows, options);
    if (!inferred) throw EstimationError("estimate_revival_time: row frequencies are not harmonically related");
    f0 = *inferred;
  }

  RevivalEstimate out;
  for (auto& r : rows) {
    std::sort(r.taus.begin(), r.taus.end());
    RowEstimate re;
    re.p = std::max(1, static_cast<int>(std::lround(r.frequency / f0)));
    re.scale = r.scale;
    re.frequency = r.frequency;
    re.n_detections = r.taus.size();

    std::vector<double> gaps;
    for (std::size_t i = 1; i < r.taus.size(); ++i) gaps.push_back(r.taus[i] - r.taus[i - 1]);
    const double unit = *std::min_element(gaps.begin(), gaps.end());
    if (!(unit > 0.0)) throw EstimationError("estimate_revival_time: duplicate detections in one row");
    int steps = 0;
    std::vector<double> per_gap;
    for (double g : gaps) {
      const int m = std::max(1, static_cast<int>(std::lround(g / unit)));
      steps += m;
      per_gap.push_back(2.0 * re.p * g / m);
    }
    re.lattice_steps = steps;
    re.estimate = 2.0 * re.p * (r.taus.back() - r.taus.front()) / steps;

    double scatter = 0.0;
    if (per_gap.size() >= 2) {
      double mean = 0.0;
      for (double v : per_gap) mean += v;
      mean /= static_cast<double>(per_gap.size());
      for (double v : per_gap) scatter += (v - mean) * (v - mean);
      scatter /= static_cast<double>(per_gap.size() - 1) * static_cast<double>(per_gap.size());
    }
    const double resolution = options.tau_resolution > 0.0 ? options.tau_resolution : 1e-9 * re.estimate / (2.0 * re.p);
    const double floor = std::pow(2.0 * re.p * resolution / steps, 2);
    re.variance = std::max(scatter, floor);
    out.rows.push_back(re);
  }

  std::vector<double> sorted;
  for (const auto& r : out.rows) sorted.push_back(r.estimate);
  std::sort(sorted.begin(), sorted.end());
  const std::size_t mid = sorted.size() / 2;
  const double median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  for (auto& r : out.rows) {
    const double ratio = r.estimate / median;
    if (ratio >= 1.5) {
      const double m = std::round(ratio);
      r.estimate /= m;
      r.lattice_steps *= static_cast<int>(m);
      r.variance /= m * m;
    }
  }

  double wsum = 0.0;
  double acc = 0.0;
  for (auto& r : out.rows) {
    r.weight = 1.0 / r.variance;
    wsum += r.weight;
    acc += r.weight * r.estimate;
  }
  out.revival_time = acc / wsum;
  for (auto& r : out.rows) r.weight /= wsum;

  double sq = 0.0;
  std::size_t count = 0;
  for (std::size_t ri = 0; ri < rows.size(); ++ri) {
    auto& re = out.rows[ri];
    const double spacing = out.revival_time / (2.0 * re.p);
    double row_sq = 0.0;
    for (double tau : rows[ri].taus) {
      const double dev = tau - std::round(tau / spacing) * spacing;
      row_sq += dev * dev;
    }
    re.residual_rms = std::sqrt(row_sq / static_cast<double>(rows[ri].taus.size()));
    sq += row_sq;
    count += rows[ri].taus.size();
  }
  out.n_patches_used = count;
  out.residual_rms = std::sqrt(sq / static_cast<double>(count));
  return out;
}

}  // namespace revival
