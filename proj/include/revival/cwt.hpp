#pragma once

// Morlet continuous wavelet transform
//
//   T(s, tau) = s^{-1/2} \int f(t) phi*((t - tau) / s) dt,
//   phi(t)    = pi^{-1/4} exp(i omega0 t) exp(-t^2 / 2),
//
// with the 1/sqrt(s) prefactor exactly as written (no analytic-spectrum
// rescaling). Two evaluation routes: trapezoidal quadrature (cwt_direct)
// and per-scale frequency-domain multiplication by the closed-form Morlet
// spectrum (cwt_fast). Both apply the same trapezoid end weights, so they
// agree to the wavelet truncation level away from the signal edges.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "revival/errors.hpp"
#include "revival/fft.hpp"
#include "revival/matrix.hpp"
#include "revival/parallel.hpp"
#include "revival/wavepacket.hpp"

namespace revival {

using Complex = std::complex<double>;

class MorletParams {
 public:
  /// omega0 >= 5 keeps the admissibility correction below 1e-5, so it is omitted.
  explicit MorletParams(double omega0 = 6.0) : omega0_(omega0) {
    detail::require(omega0 >= 5.0 && std::isfinite(omega0), "MorletParams: omega0 must be >= 5");
  }
  double omega0() const { return omega0_; }

 private:
  double omega0_;
};

inline const double kMorletNorm = std::pow(std::numbers::pi, -0.25);

inline Complex morlet(double t, const MorletParams& params) {
  return kMorletNorm * std::exp(-0.5 * t * t) * std::polar(1.0, params.omega0() * t);
}

/// Fourier transform of phi(t / s): s sqrt(2 pi) pi^{-1/4} exp(-(s w - omega0)^2 / 2). Real.
inline double morlet_scaled_spectrum(double omega, double scale, const MorletParams& params) {
  const double d = scale * omega - params.omega0();
  return scale * std::sqrt(2.0 * std::numbers::pi) * kMorletNorm * std::exp(-0.5 * d * d);
}

inline double scale_for_frequency(double frequency, const MorletParams& params) {
  detail::require(frequency > 0.0, "scale_for_frequency: frequency must be > 0");
  return params.omega0() / (2.0 * std::numbers::pi * frequency);
}

inline double frequency_for_scale(double scale, const MorletParams& params) {
  detail::require(scale > 0.0, "frequency_for_scale: scale must be > 0");
  return params.omega0() / (2.0 * std::numbers::pi * scale);
}

namespace detail {

// Trapezoid on a symmetric uniform grid; the integrands here are Gaussian,
// for which the rule converges spectrally.
template <typename F>
double trapezoid(F&& f, double lo, double hi, std::size_t intervals) {
  const double h = (hi - lo) / static_cast<double>(intervals);
  double sum = 0.5 * (f(lo) + f(hi));
  for (std::size_t i = 1; i < intervals; ++i) sum += f(lo + h * static_cast<double>(i));
  return sum * h;
}

}  // namespace detail

/// RMS duration of phi(t / s) about t0 = 0, by quadrature of its second moment.
inline double rms_duration(const MorletParams& params, double scale) {
  detail::require(scale > 0.0, "rms_duration: scale must be > 0");
  auto density = [&](double t) { return std::norm(morlet(t / scale, params)); };
  const double half = 12.0 * scale;
  const double mass = detail::trapezoid(density, -half, half, 4000);
  const double second = detail::trapezoid([&](double t) { return t * t * density(t); }, -half, half, 4000);
  return std::sqrt(second / mass);
}

/// RMS bandwidth of phi(t / s) about its centre omega0 / s.
inline double rms_bandwidth(const MorletParams& params, double scale) {
  detail::require(scale > 0.0, "rms_bandwidth: scale must be > 0");
  const double centre = params.omega0() / scale;
  auto density = [&](double w) {
    const double a = morlet_scaled_spectrum(w, scale, params);
    return a * a;
  };
  const double half = 12.0 / scale;
  const double mass = detail::trapezoid(density, centre - half, centre + half, 4000);
  const double second = detail::trapezoid(
      [&](double w) { return (w - centre) * (w - centre) * density(w); }, centre - half, centre + half, 4000);
  return std::sqrt(second / mass);
}

/// Wavelet values and energy over a scale x translation lattice.
struct ScalogramGrid {
  std::vector<double> scales;  ///< ascending, > 0
  std::vector<double> taus;
  Matrix<Complex> values;      ///< values(i, j) = T(taus[j], scales[i])
  Matrix<double> energy;       ///< |values|^2
  double omega0 = 6.0;
  double signal_begin = 0.0;
  double signal_end = 0.0;

  std::size_t n_scales() const { return scales.size(); }
  std::size_t n_taus() const { return taus.size(); }

  /// Edge-contaminated cell: tau within 4 s of either end of the signal.
  bool in_cone(std::size_t i, std::size_t j) const {
    const double reach = kConeWidths * scales[i];
    return taus[j] < signal_begin + reach || taus[j] > signal_end - reach;
  }

  static constexpr double kConeWidths = 4.0;
};

/// Modulus squared, elementwise.
inline Matrix<double> scalogram(const Matrix<Complex>& values) {
  Matrix<double> e(values.rows(), values.cols());
  for (std::size_t i = 0; i < values.rows(); ++i)
    for (std::size_t j = 0; j < values.cols(); ++j) e(i, j) = std::norm(values(i, j));
  return e;
}

inline Matrix<double> scalogram(const ScalogramGrid& grid) { return scalogram(grid.values); }

namespace detail {

inline void check_scales(std::span<const double> scales) {
  require(!scales.empty(), "cwt: empty scale list");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    require(scales[i] > 0.0 && std::isfinite(scales[i]), "cwt: scales must be > 0");
    if (i > 0) require(scales[i] > scales[i - 1], "cwt: scales must be strictly increasing");
  }
}

inline ScalogramGrid empty_grid(const TimeSeries& signal, std::span<const double> scales,
                                std::span<const double> taus, const MorletParams& params) {
  ScalogramGrid g;
  g.scales.assign(scales.begin(), scales.end());
  g.taus.assign(taus.begin(), taus.end());
  g.values = Matrix<Complex>(scales.size(), taus.size());
  g.omega0 = params.omega0();
  g.signal_begin = signal.t0();
  g.signal_end = signal.t_end();
  return g;
}

}  // namespace detail

/// Integrand beyond this many scaled widths is dropped (envelope e^-18 ~ 1.5e-8).
inline constexpr double kQuadratureWidths = 6.0;

/// Trapezoidal quadrature of the transform at arbitrary (scale, tau).
inline ScalogramGrid cwt_direct(const TimeSeries& signal, std::span<const double> scales,
                                std::span<const double> taus, const MorletParams& params,
                                unsigned threads = 1) {
  detail::check_scales(scales);
  ScalogramGrid grid = detail::empty_grid(signal, scales, taus, params);
  const std::size_t n = signal.size();
  const double dt = signal.dt();

  detail::parallel_for(scales.size(), threads, [&](std::size_t i) {
    const double s = scales[i];
    const double inv_s = 1.0 / s;
    const double prefactor = dt / std::sqrt(s);
    const double reach = kQuadratureWidths * s;
    for (std::size_t j = 0; j < taus.size(); ++j) {
      const double tau = taus[j];
      const double lo_t = std::max(signal.t0(), tau - reach);
      const double hi_t = std::min(signal.t_end(), tau + reach);
      Complex acc{};
      if (lo_t <= hi_t) {
        // The tolerance keeps the end samples when the window is clipped to the record.
        const auto lo = static_cast<std::size_t>(std::max(0.0, std::ceil((lo_t - signal.t0()) / dt - 1e-9)));
        const auto hi = std::min(n - 1, static_cast<std::size_t>(std::floor((hi_t - signal.t0()) / dt + 1e-9)));
        for (std::size_t k = lo; k <= hi; ++k) {
          const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
          acc += w * signal[k] * std::conj(morlet((signal.time(k) - tau) * inv_s, params));
        }
      }
      grid.values(i, j) = prefactor * acc;
    }
  });
  grid.energy = scalogram(grid.values);
  return grid;
}

/// Indices of `taus` on the signal's sample grid; throws if any tau is off-grid.
inline std::vector<std::size_t> tau_indices(const TimeSeries& signal, std::span<const double> taus) {
  std::vector<std::size_t> idx;
  idx.reserve(taus.size());
  for (double tau : taus) {
    const double pos = (tau - signal.t0()) / signal.dt();
    const double r = std::round(pos);
    detail::require(std::abs(pos - r) <= 1e-6 && r >= 0.0 && r <= static_cast<double>(signal.size() - 1),
                    "cwt_fast: translations must lie on the signal's sample grid");
    idx.push_back(static_cast<std::size_t>(r));
  }
  return idx;
}

/// Frequency-domain evaluation; `taus` must be a subset of the sample times.
inline ScalogramGrid cwt_fast(const TimeSeries& signal, std::span<const double> scales,
                              std::span<const double> taus, const MorletParams& params,
                              unsigned threads = 1) {
  detail::check_scales(scales);
  const std::vector<std::size_t> where = tau_indices(signal, taus);
  ScalogramGrid grid = detail::empty_grid(signal, scales, taus, params);

  const std::size_t n = signal.size();
  const double dt = signal.dt();
  // Room for the wavelet tail so the circular correlation does not wrap
  // into the data; capped once the wavelet dwarfs the record (those cells
  // are entirely inside the cone of influence anyway).
  const double tail = std::min(8.0 * scales.back() / dt, 4.0 * static_cast<double>(n));
  const std::size_t n_fft = fft::next_pow2(n + static_cast<std::size_t>(std::ceil(tail)) + 1);

  fft::Buffer padded(n_fft), spectrum(n_fft);
  for (std::size_t k = 0; k < n; ++k) padded[k] = ((k == 0 || k == n - 1) ? 0.5 : 1.0) * signal[k];
  fft::Plan(n_fft, fft::Direction::Forward).execute(padded, spectrum);
  const fft::Plan inverse(n_fft, fft::Direction::Backward);

  std::vector<double> omega(n_fft);
  for (std::size_t k = 0; k < n_fft; ++k) {
    const auto signed_k = k <= n_fft / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n_fft);
    omega[k] = 2.0 * std::numbers::pi * signed_k / (static_cast<double>(n_fft) * dt);
  }

  detail::parallel_for(scales.size(), threads, [&](std::size_t i) {
    const double s = scales[i];
    fft::Buffer product(n_fft), row(n_fft);
    for (std::size_t k = 0; k < n_fft; ++k) product[k] = spectrum[k] * morlet_scaled_spectrum(omega[k], s, params);
    inverse.execute(product, row);
    const double norm = 1.0 / (static_cast<double>(n_fft) * std::sqrt(s));
    for (std::size_t j = 0; j < where.size(); ++j) grid.values(i, j) = row[where[j]] * norm;
  });
  grid.energy = scalogram(grid.values);
  return grid;
}

/// Log-spaced grid (voices per octave) on [lo, hi], with `anchors` inside
/// the range merged in. Anchors closer than 1e-9 relative to an existing
/// scale replace it.
inline std::vector<double> log_scale_grid(double lo, double hi, int voices_per_octave,
                                          std::span<const double> anchors = {}) {
  detail::require(lo > 0.0 && hi > lo, "log_scale_grid: need 0 < lo < hi");
  detail::require(voices_per_octave >= 1, "log_scale_grid: voices_per_octave must be >= 1");
  std::vector<double> s;
  const int steps = static_cast<int>(std::floor(std::log2(hi / lo) * voices_per_octave + 1e-9));
  for (int i = 0; i <= steps; ++i) s.push_back(lo * std::exp2(static_cast<double>(i) / voices_per_octave));
  for (double a : anchors) {
    if (a < lo || a > hi) continue;
    auto it = std::find_if(s.begin(), s.end(), [&](double v) { return std::abs(v - a) <= 1e-9 * a; });
    if (it != s.end()) {
      *it = a;
    } else {
      s.push_back(a);
    }
  }
  std::sort(s.begin(), s.end());
  return s;
}

/// Default grid for harmonics 1..p_max of a fundamental 1/T_cl:
/// [0.7 s(p_max), 1.4 s(1)], 8 voices per octave, plus every s(p).
inline std::vector<double> harmonic_scale_grid(double classical_period, int p_max, const MorletParams& params,
                                               int voices_per_octave = 8) {
  detail::require(p_max >= 1, "harmonic_scale_grid: p_max must be >= 1");
  std::vector<double> anchors;
  for (int p = 1; p <= p_max; ++p) anchors.push_back(scale_for_frequency(p / classical_period, params));
  return log_scale_grid(0.7 * anchors.back(), 1.4 * anchors.front(), voices_per_octave, anchors);
}

struct ScaleSlice {
  TimeSeries series;  ///< |T(tau, s)|^2 along tau
  double scale;       ///< grid scale actually used
  std::size_t row;
};

/// Energy along tau at the grid scale nearest (in log) to `scale`.
inline ScaleSlice scale_slice(const ScalogramGrid& grid, double scale) {
  detail::require(!grid.scales.empty() && grid.taus.size() >= 2, "scale_slice: empty grid");
  detail::require(scale >= grid.scales.front() * (1.0 - 1e-12) && scale <= grid.scales.back() * (1.0 + 1e-12),
                  "scale_slice: scale outside the grid range");
  const double step = grid.taus[1] - grid.taus[0];
  for (std::size_t j = 1; j < grid.taus.size(); ++j)
    detail::require(std::abs(grid.taus[j] - grid.taus[j - 1] - step) <= 1e-9 * std::abs(step),
                    "scale_slice: translations are not uniformly spaced");

  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.scales.size(); ++i)
    if (std::abs(std::log(grid.scales[i] / scale)) < std::abs(std::log(grid.scales[best] / scale))) best = i;

  const auto row = grid.energy.row(best);
  return {TimeSeries(grid.taus.front(), step, std::vector<double>(row.begin(), row.end())), grid.scales[best], best};
}

}  // namespace revival
