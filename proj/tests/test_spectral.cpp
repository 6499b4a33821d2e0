#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "revival/errors.hpp"
#include "revival/spectral.hpp"
#include "revival/wavepacket.hpp"

using namespace revival;

namespace {

TimeSeries tones(std::size_t n, double dt, std::initializer_list<std::pair<double, double>> parts, double offset = 0.0) {
  std::vector<double> v(n, offset);
  for (std::size_t i = 0; i < n; ++i)
    for (auto [amp, f] : parts) v[i] += amp * std::cos(2.0 * std::numbers::pi * f * static_cast<double>(i) * dt);
  return {0.0, dt, std::move(v)};
}

std::size_t argmax_nonzero(const SpectralDensity& sd) {
  std::size_t best = 1;
  for (std::size_t k = 1; k < sd.power.size(); ++k)
    if (sd.power[k] > sd.power[best]) best = k;
  return best;
}

}  // namespace

TEST(PowerSpectrum, CosineOnExactBin) {
  const std::size_t n = 1024;
  const double dt = 0.5;
  const double df = 1.0 / (n * dt);
  const auto sd = power_spectrum(tones(n, dt, {{1.0, 37 * df}}, 4.0));
  EXPECT_EQ(sd.n_fft, n);
  EXPECT_DOUBLE_EQ(sd.df, df);
  EXPECT_EQ(argmax_nonzero(sd), 37u);
  EXPECT_NEAR(sd.power[37], 0.5, 1e-12);
  EXPECT_NEAR(sd.power[0], 0.0, 1e-20);
  for (std::size_t k = 1; k < sd.power.size(); ++k)
    if (k != 37) {
      EXPECT_LT(sd.power[k], 1e-20);
    }
}

TEST(PowerSpectrum, ConstantHasNoPower) {
  const auto sd = power_spectrum(TimeSeries(0.0, 1.0, std::vector<double>(100, 3.25)));
  for (double p : sd.power) EXPECT_EQ(p, 0.0);
}

TEST(PowerSpectrum, ZeroPadsToPowerOfTwo) {
  const auto sd = power_spectrum(TimeSeries(0.0, 2.0, std::vector<double>(1000, 1.0)));
  EXPECT_EQ(sd.n_fft, 1024u);
  EXPECT_EQ(sd.n_samples, 1000u);
  EXPECT_DOUBLE_EQ(sd.df, 1.0 / (1024.0 * 2.0));
  EXPECT_EQ(sd.power.size(), 513u);
}

TEST(PowerSpectrum, Parseval) {
  std::mt19937 rng(21);
  std::normal_distribution<double> g(0.3, 1.7);
  for (std::size_t n : {16u, 100u, 777u, 2048u}) {
    std::vector<double> v(n);
    for (double& x : v) x = g(rng);
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(n);
    double ms = 0.0;
    for (double x : v) ms += (x - mean) * (x - mean);
    ms /= static_cast<double>(n);

    const auto sd = power_spectrum(TimeSeries(0.0, 1.0, v));
    double total = 0.0;
    for (double p : sd.power) total += p;
    EXPECT_NEAR(total / ms, 1.0, 1e-9) << n;
  }
}

TEST(PowerSpectrum, RejectsShortInput) {
  EXPECT_THROW(power_spectrum(TimeSeries(0.0, 1.0, std::vector<double>(15, 1.0))), DomainError);
}

TEST(PowerSpectrum, HannTaperKeepsPeak) {
  const std::size_t n = 1000;
  const auto sd = power_spectrum(tones(n, 1.0, {{1.0, 0.1234}}), Taper::Hann);
  EXPECT_NEAR(sd.frequency(argmax_nonzero(sd)), 0.1234, sd.df);
}

TEST(BandCenters, SingleSinusoid) {
  const auto sd = power_spectrum(tones(4096, 1.0, {{1.0, 0.05}}));
  const auto bands = band_centers(sd, 4, 0.05);
  ASSERT_EQ(bands.size(), 1u);
  EXPECT_NEAR(bands[0].frequency, 0.05, sd.df);
  EXPECT_EQ(bands[0].harmonic_index, 1);
}

TEST(BandCenters, HarmonicPair) {
  const auto sd = power_spectrum(tones(4096, 1.0, {{1.0, 0.03}, {0.6, 0.06}}));
  const auto bands = band_centers(sd, 4, 0.05);
  ASSERT_EQ(bands.size(), 2u);
  EXPECT_NEAR(bands[0].frequency, 0.03, sd.df);
  EXPECT_NEAR(bands[1].frequency, 0.06, sd.df);
  EXPECT_EQ(bands[0].harmonic_index, 1);
  EXPECT_EQ(bands[1].harmonic_index, 2);
}

TEST(BandCenters, KeepsStrongestBands) {
  const auto sd = power_spectrum(tones(4096, 1.0, {{1.0, 0.03}, {0.8, 0.09}, {0.5, 0.15}}));
  const auto bands = band_centers(sd, 2, 0.05);
  ASSERT_EQ(bands.size(), 2u);
  EXPECT_NEAR(bands[0].frequency, 0.03, sd.df);
  EXPECT_NEAR(bands[1].frequency, 0.09, sd.df);
  EXPECT_EQ(bands[1].harmonic_index, 3);
}

TEST(BandCenters, ScaleEquivariant) {
  const auto base = tones(2048, 1.0, {{1.0, 0.021}, {0.4, 0.063}});
  std::vector<double> scaled(base.samples());
  for (double& v : scaled) v *= 7.5;
  const auto sa = power_spectrum(base);
  const auto sb = power_spectrum(TimeSeries(0.0, 1.0, scaled));
  const auto a = band_centers(sa, 4, 0.05);
  const auto b = band_centers(sb, 4, 0.05);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NEAR(a[i].frequency, b[i].frequency, 1e-12 * a[i].frequency);
    EXPECT_NEAR(b[i].power / a[i].power, 7.5 * 7.5, 1e-9);
    EXPECT_EQ(a[i].harmonic_index, b[i].harmonic_index);
  }
}

TEST(BandCenters, FlatSpectrumGivesNothing) {
  const auto sd = power_spectrum(TimeSeries(0.0, 1.0, std::vector<double>(64, 1.0)));
  EXPECT_TRUE(band_centers(sd, 4, 0.05).empty());
}

TEST(BandCenters, IgnoresSlowDrift) {
  // A decaying envelope leaks into the lowest bins; it is not a band.
  std::vector<double> v(4096);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double t = static_cast<double>(i);
    v[i] = std::exp(-t / 600.0) * (1.0 + 0.5 * std::cos(2.0 * std::numbers::pi * 0.04 * t));
  }
  const auto sd = power_spectrum(TimeSeries(0.0, 1.0, v));
  const auto bands = band_centers(sd, 4, 0.05);
  ASSERT_FALSE(bands.empty());
  EXPECT_NEAR(bands.front().frequency, 0.04, 0.002);
}

TEST(BandCenters, RejectsBadThreshold) {
  const auto sd = power_spectrum(tones(64, 1.0, {{1.0, 0.1}}));
  EXPECT_THROW(band_centers(sd, 4, 0.0), DomainError);
  EXPECT_THROW(band_centers(sd, 4, 1.0), DomainError);
}

TEST(BandCenters, ReferenceSignalHarmonics) {
  const auto m = WavePacketModel::reference();
  const auto ts = m.scales();
  const double dt = auto_time_step(m, 6);
  const auto n = static_cast<std::size_t>(1.05 * ts.revival / dt) + 1;
  const auto sd = power_spectrum(autocorrelation_power(m, 0.0, dt, n, 4));
  const auto bands = band_centers(sd, 4, 0.05);
  ASSERT_EQ(bands.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const double fp = static_cast<double>(i + 1) / ts.classical;
    EXPECT_NEAR(bands[i].frequency / fp, 1.0, 0.02) << i + 1;
    EXPECT_EQ(bands[i].harmonic_index, static_cast<int>(i + 1));
  }
  EXPECT_NEAR(bands[2].frequency / 1.457e-8, 1.0, 0.02);
}
