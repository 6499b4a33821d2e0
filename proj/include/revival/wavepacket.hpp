#pragma once

// Wave-packet model for circular Rydberg states: level energies, Gaussian
// occupation weights, the classical/revival time scales and the
// autocorrelation power f(t) = |A(t)|^2. Atomic units, hbar = 1.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "revival/errors.hpp"
#include "revival/parallel.hpp"

namespace revival {

enum class EnergyLaw { ExactHydrogenic, QuadraticApprox };

/// How the width parameter of the occupation Gaussian is read.
enum class SigmaConvention {
  StdDev,  ///< |c_n|^2 ~ exp(-(n - nbar)^2 / (2 sigma^2))
  Fwhm,    ///< |c_n|^2 ~ exp(-4 ln2 (n - nbar)^2 / sigma^2)
};

struct TimeScales {
  double classical;  ///< T_cl
  double revival;    ///< T_rev
};

/// E_n = -1 / (2 n^2).
inline double hydrogenic_energy(int n) {
  detail::require(n >= 1, "hydrogenic_energy: n must be >= 1, got " + std::to_string(n));
  const double nn = static_cast<double>(n);
  return -1.0 / (2.0 * nn * nn);
}

/// T_cl = 2 pi nbar^3, T_rev = (2/3) nbar T_cl.
inline TimeScales time_scales(int n_mean) {
  detail::require(n_mean >= 2, "time_scales: n_mean must be >= 2, got " + std::to_string(n_mean));
  const double n = static_cast<double>(n_mean);
  const double t_cl = 2.0 * std::numbers::pi * n * n * n;
  return {t_cl, 2.0 * t_cl * n / 3.0};
}

class WavePacketModel {
 public:
  WavePacketModel(int n_mean, int n_span, double sigma,
                  EnergyLaw law = EnergyLaw::QuadraticApprox,
                  SigmaConvention convention = SigmaConvention::StdDev)
      : n_mean_(n_mean), n_span_(n_span), sigma_(sigma), law_(law), convention_(convention) {
    detail::require(n_mean >= 2, "WavePacketModel: n_mean must be >= 2");
    detail::require(n_span > 0 && n_span < n_mean,
                    "WavePacketModel: n_span must satisfy 0 < n_span < n_mean");
    detail::require(sigma > 0.0 && std::isfinite(sigma), "WavePacketModel: sigma must be > 0");
  }

  /// nbar = 320, Delta n = 40, sigma = 2.5.
  static WavePacketModel reference(EnergyLaw law = EnergyLaw::QuadraticApprox) {
    return {320, 40, 2.5, law, SigmaConvention::StdDev};
  }

  int n_mean() const { return n_mean_; }
  int n_span() const { return n_span_; }
  double sigma() const { return sigma_; }
  EnergyLaw energy_law() const { return law_; }
  SigmaConvention sigma_convention() const { return convention_; }
  TimeScales scales() const { return time_scales(n_mean_); }

  int n_min() const { return n_mean_ - n_span_ / 2; }
  int n_max() const { return n_min() + n_span_; }

  WavePacketModel with_law(EnergyLaw law) const {
    return {n_mean_, n_span_, sigma_, law, convention_};
  }

 private:
  int n_mean_;
  int n_span_;
  double sigma_;
  EnergyLaw law_;
  SigmaConvention convention_;
};

/// E_n = 2 pi [ (n - nbar) / T_cl + (n - nbar)^2 / T_rev ].
inline double quadratic_energy(int n, const WavePacketModel& model) {
  const auto [t_cl, t_rev] = model.scales();
  const double x = static_cast<double>(n - model.n_mean());
  return 2.0 * std::numbers::pi * (x / t_cl + x * x / t_rev);
}

/// Level energy under the model's law, with the overall phase E_nbar removed.
inline double level_energy(int n, const WavePacketModel& model) {
  if (model.energy_law() == EnergyLaw::QuadraticApprox) return quadratic_energy(n, model);
  detail::require(n >= 1, "level_energy: n must be >= 1");
  // -1/(2n^2) + 1/(2 nbar^2) written without cancellation.
  const double a = static_cast<double>(n);
  const double b = static_cast<double>(model.n_mean());
  return (a - b) * (a + b) / (2.0 * a * a * b * b);
}

/// Occupation probabilities |c_n|^2 on the closed support [n_min, n_max].
class WeightDistribution {
 public:
  /// Normalizes `raw` to unit sum. raw[i] belongs to n = n_min + i.
  WeightDistribution(int n_min, std::vector<double> raw) : n_min_(n_min), weights_(std::move(raw)) {
    detail::require(!weights_.empty(), "WeightDistribution: empty support");
    detail::require(n_min >= 1, "WeightDistribution: n_min must be >= 1");
    double total = 0.0;
    double carry = 0.0;
    for (double w : weights_) {
      detail::require(w >= 0.0 && std::isfinite(w), "WeightDistribution: weights must be finite and >= 0");
      const double y = w - carry;
      const double t = total + y;
      carry = (t - total) - y;
      total = t;
    }
    detail::require(total > 0.0, "WeightDistribution: all weights are zero");
    for (double& w : weights_) w /= total;
  }

  int n_min() const { return n_min_; }
  int n_max() const { return n_min_ + static_cast<int>(weights_.size()) - 1; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  const std::vector<double>& values() const { return weights_; }

  double weight(int n) const {
    if (n < n_min() || n > n_max()) return 0.0;
    return weights_[static_cast<std::size_t>(n - n_min_)];
  }

 private:
  int n_min_;
  std::vector<double> weights_;
};

inline WeightDistribution gaussian_weights(const WavePacketModel& model) {
  const double sigma = model.sigma();
  const double coeff = model.sigma_convention() == SigmaConvention::Fwhm
                           ? 4.0 * std::numbers::ln2 / (sigma * sigma)
                           : 1.0 / (2.0 * sigma * sigma);
  std::vector<double> raw;
  raw.reserve(static_cast<std::size_t>(model.n_span()) + 1);
  for (int n = model.n_min(); n <= model.n_max(); ++n) {
    const double x = static_cast<double>(n - model.n_mean());
    raw.push_back(std::exp(-coeff * x * x));
  }
  return {model.n_min(), std::move(raw)};
}

/// Uniformly sampled real signal; sample i sits at t0 + i * dt.
class TimeSeries {
 public:
  TimeSeries(double t0, double dt, std::vector<double> samples) : t0_(t0), dt_(dt), samples_(std::move(samples)) {
    detail::require(dt > 0.0 && std::isfinite(dt), "TimeSeries: dt must be > 0");
    detail::require(std::isfinite(t0), "TimeSeries: t0 must be finite");
    detail::require(samples_.size() >= 2, "TimeSeries: need at least 2 samples");
    for (double v : samples_) detail::require(std::isfinite(v), "TimeSeries: non-finite sample");
  }

  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t size() const { return samples_.size(); }
  double time(std::size_t i) const { return t0_ + static_cast<double>(i) * dt_; }
  double t_end() const { return time(samples_.size() - 1); }
  double operator[](std::size_t i) const { return samples_[i]; }
  const std::vector<double>& samples() const { return samples_; }

 private:
  double t0_;
  double dt_;
  std::vector<double> samples_;
};

/// Largest sample spacing that oversamples the p_max-th beat 8x: T_cl / (8 p_max).
inline double auto_time_step(const WavePacketModel& model, int p_max) {
  detail::require(p_max >= 1, "auto_time_step: p_max must be >= 1");
  return model.scales().classical / (8.0 * p_max);
}

inline constexpr double kImaginaryResidualLimit = 1e-10;

/// f(t) = sum_{n,m} |c_n|^2 |c_m|^2 exp(-i E_nm t), evaluated literally.
/// The imaginary part cancels pairwise; a residual above 1e-10 throws
/// ConsistencyError.
inline TimeSeries autocorrelation_power(const WavePacketModel& model, double t0, double dt,
                                        std::size_t n_samples, unsigned threads = 1) {
  detail::require(dt > 0.0, "autocorrelation_power: dt must be > 0");
  detail::require(n_samples >= 2, "autocorrelation_power: need at least 2 samples");

  const WeightDistribution weights = gaussian_weights(model);
  const std::size_t levels = weights.size();
  std::vector<double> energy(levels);
  for (std::size_t i = 0; i < levels; ++i) energy[i] = level_energy(weights.n_min() + static_cast<int>(i), model);

  // Pairs whose joint weight underflows contribute exactly nothing.
  struct Pair {
    double weight;
    double gap;  // E_n - E_m
  };
  std::vector<Pair> pairs;
  pairs.reserve(levels * levels);
  for (std::size_t n = 0; n < levels; ++n)
    for (std::size_t m = 0; m < levels; ++m) {
      const double w = weights[n] * weights[m];
      if (w > 0.0) pairs.push_back({w, energy[n] - energy[m]});
    }

  std::vector<double> samples(n_samples);
  std::vector<double> residual(n_samples);
  detail::parallel_for(n_samples, threads, [&](std::size_t j) {
    const double t = t0 + static_cast<double>(j) * dt;
    double re = 0.0;
    double im = 0.0;
    for (const Pair& pr : pairs) {
      const double phase = pr.gap * t;
      re += pr.weight * std::cos(phase);
      im -= pr.weight * std::sin(phase);
    }
    samples[j] = re;
    residual[j] = std::abs(im);
  });

  for (std::size_t j = 0; j < n_samples; ++j) {
    if (residual[j] >= kImaginaryResidualLimit) {
      throw ConsistencyError("autocorrelation_power: imaginary residual " + std::to_string(residual[j]) +
                             " at sample " + std::to_string(j));
    }
  }
  return {t0, dt, std::move(samples)};
}

/// Multiplies f(t) by exp(-t / lifetime). An infinite lifetime is the identity.
inline TimeSeries apply_decay(const TimeSeries& series, double lifetime) {
  detail::require(lifetime > 0.0, "apply_decay: lifetime must be > 0");
  if (std::isinf(lifetime)) return series;
  std::vector<double> out(series.samples());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= std::exp(-series.time(i) / lifetime);
  return {series.t0(), series.dt(), std::move(out)};
}

}  // namespace revival
