#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "revival/cwt.hpp"
#include "revival/errors.hpp"
#include "revival/revival.hpp"
#include "revival/wavepacket.hpp"

using namespace revival;

namespace {

const MorletParams kParams{};
const TimeScales kTs = time_scales(320);

Patch detection(double tau, int p) {
  const double f = p / kTs.classical;
  return {std::nullopt, std::nullopt, tau, f, scale_for_frequency(f, kParams), 1.0, PatchSource::Detected};
}

PatchSet lattice(std::initializer_list<std::pair<int, std::vector<int>>> rows) {
  PatchSet out;
  for (const auto& [p, ks] : rows)
    for (int k : ks) out.push_back(detection(k * kTs.revival / (2.0 * p), p));
  return out;
}

struct ReferenceRun {
  TimeSeries signal;
  ScalogramGrid grid;
};

const ReferenceRun& reference_run() {
  static const ReferenceRun run = [] {
    const auto m = WavePacketModel::reference();
    const double dt = auto_time_step(m, 6);
    const auto n = static_cast<std::size_t>(1.05 * kTs.revival / dt) + 1;
    auto sig = autocorrelation_power(m, 0.0, dt, n, 4);
    std::vector<double> taus;
    for (std::size_t i = 0; i < n; i += 4) taus.push_back(sig.time(i));
    auto grid = cwt_fast(sig, harmonic_scale_grid(kTs.classical, 6, kParams), taus, kParams, 4);
    return ReferenceRun{std::move(sig), std::move(grid)};
  }();
  return run;
}

}  // namespace

TEST(AnalyticCwt, SingleLevelIsConstantTerm) {
  const WeightDistribution w(320, {1.0});
  const std::vector<double> e{0.0};
  for (double s : {0.5, 3.0, 1e8}) {
    const Complex t = analytic_cwt(123.0, s, w, e, kParams);
    EXPECT_NEAR(std::abs(t), std::sqrt(2.0 * std::numbers::pi * s) * kMorletNorm * std::exp(-18.0), 1e-20 * std::sqrt(s));
  }
}

TEST(AnalyticCwt, PatchIsLocalMaximum) {
  const auto m = WavePacketModel::reference();
  const double s3 = scale_for_frequency(3.0 / kTs.classical, kParams);
  const double tau = 2.0 * kTs.revival / 3.0;
  const double centre = std::abs(analytic_cwt(tau, s3, m, kParams));
  for (double d : {-0.03, -0.02, -0.01, 0.01, 0.02, 0.03})
    EXPECT_GT(centre, std::abs(analytic_cwt(tau + d * kTs.revival, s3, m, kParams))) << d;
}

TEST(AnalyticCwt, MatchesNumericalTransform) {
  const auto& run = reference_run();
  const auto m = WavePacketModel::reference();
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> prow(1, 4);
  int checked = 0;
  while (checked < 20) {
    const int p = prow(rng);
    const double sp = scale_for_frequency(p / kTs.classical, kParams);
    const auto row = static_cast<std::size_t>(std::find(run.grid.scales.begin(), run.grid.scales.end(), sp) -
                                              run.grid.scales.begin());
    const int kmax = static_cast<int>(2.0 * p * (run.signal.t_end() - 4.0 * sp) / kTs.revival);
    const int k = std::uniform_int_distribution<int>(1, kmax)(rng);
    const double target = k * kTs.revival / (2.0 * p);
    std::size_t j = 0;
    for (std::size_t q = 0; q < run.grid.n_taus(); ++q)
      if (std::abs(run.grid.taus[q] - target) < std::abs(run.grid.taus[j] - target)) j = q;
    ASSERT_FALSE(run.grid.in_cone(row, j));
    const Complex numeric = run.grid.values(row, j);
    const Complex analytic = analytic_cwt(run.grid.taus[j], sp, m, kParams);
    EXPECT_LT(std::abs(numeric - analytic), 0.05 * std::abs(analytic)) << p << ' ' << k;
    ++checked;
  }
}

TEST(PatchConstraint, Scale) {
  EXPECT_DOUBLE_EQ(patch_constraint_scale(-6.0, kParams), 1.0);
  EXPECT_DOUBLE_EQ(patch_constraint_scale(-2.0, kParams), 2.0 * patch_constraint_scale(-4.0, kParams));
  EXPECT_THROW(patch_constraint_scale(0.0, kParams), DomainError);
  EXPECT_THROW(patch_constraint_scale(1e-9, kParams), DomainError);
  const auto m = WavePacketModel::reference();
  const double gap = quadratic_energy(320, m) - quadratic_energy(321, m);
  EXPECT_NEAR(patch_constraint_scale(gap, kParams) / scale_for_frequency(1.0 / kTs.classical, kParams), 1.0, 0.01);
}

TEST(PredictedGrid, ReferencePatch) {
  const auto grid = predicted_patch_grid(kTs.classical, kTs.revival, 4, 1.05 * kTs.revival, kParams);
  const auto it = std::find_if(grid.begin(), grid.end(), [](const Patch& p) { return p.p == 3 && p.k == 4; });
  ASSERT_NE(it, grid.end());
  EXPECT_NEAR(it->tau, 2.0 * kTs.revival / 3.0, 1e-3);
  EXPECT_NEAR(it->tau / 2.928e10, 1.0, 1e-3);
  EXPECT_NEAR(it->frequency / 1.457e-8, 1.0, 1e-3);
  EXPECT_EQ(it->source, PatchSource::Predicted);
}

TEST(PredictedGrid, FirstRowAndOrdering) {
  const auto g = predicted_patch_grid(kTs.classical, kTs.revival, 1, 2.0 * kTs.revival, kParams);
  ASSERT_EQ(g.size(), 4u);
  for (int k = 1; k <= 4; ++k) EXPECT_DOUBLE_EQ(g[k - 1].tau, k * kTs.revival / 2.0);
  EXPECT_TRUE(predicted_patch_grid(kTs.classical, kTs.revival, 1, 0.49 * kTs.revival, kParams).empty());

  const auto all = predicted_patch_grid(kTs.classical, kTs.revival, 6, 1.05 * kTs.revival, kParams);
  for (std::size_t i = 1; i < all.size(); ++i) {
    const auto& a = all[i - 1];
    const auto& b = all[i];
    EXPECT_TRUE(*a.p < *b.p || (*a.p == *b.p && a.tau < b.tau));
    if (*a.p == *b.p) {
      EXPECT_NEAR(b.tau - a.tau, kTs.revival / (2.0 * *a.p), 1e-4);
    }
  }
  for (const auto& q : all) {
    EXPECT_DOUBLE_EQ(q.frequency, *q.p / kTs.classical);
    EXPECT_DOUBLE_EQ(q.tau, *q.k * kTs.revival / (2.0 * *q.p));
  }
}

TEST(CoherenceResidual, OnAndOffLattice) {
  const auto m = WavePacketModel::reference();
  EXPECT_EQ(coherence_residual(0.0, 3, m), 0.0);
  for (int p = 1; p <= 6; ++p)
    for (int k = 1; k <= 2 * p; ++k) EXPECT_LT(coherence_residual(k * kTs.revival / (2.0 * p), p, m), 1e-9) << p << k;
  for (int p = 1; p <= 4; ++p)
    EXPECT_GT(coherence_residual(kTs.revival / (2.0 * p) + kTs.classical / 7.0, p, m), 0.01) << p;
  EXPECT_THROW(coherence_residual(1.0, 1, m.with_law(EnergyLaw::ExactHydrogenic)), DomainError);
}

TEST(DetectPatches, ZeroGridIsEmpty) {
  const TimeSeries z(0.0, 1.0, std::vector<double>(300, 0.0));
  std::vector<double> taus;
  for (std::size_t i = 0; i < z.size(); ++i) taus.push_back(z.time(i));
  const auto g = cwt_fast(z, std::vector<double>{2.0, 4.0}, taus, kParams);
  EXPECT_TRUE(detect_patches(g, 0.3, 10.0).empty());
}

TEST(DetectPatches, RecoversPlantedCentres) {
  ScalogramGrid g;
  g.scales = log_scale_grid(1.0, 8.0, 8, std::vector<double>{1.5, 3.0, 6.0});
  for (int j = 0; j <= 1000; ++j) g.taus.push_back(j);
  g.signal_begin = 0.0;
  g.signal_end = 1000.0;
  g.values = Matrix<Complex>(g.scales.size(), g.taus.size());
  struct Plant {
    double scale, tau;
  };
  const std::vector<Plant> planted{{1.5, 100}, {1.5, 400}, {1.5, 700}, {3.0, 250}, {3.0, 550}, {6.0, 300}, {6.0, 800}};
  for (std::size_t i = 0; i < g.scales.size(); ++i)
    for (std::size_t j = 0; j < g.taus.size(); ++j) {
      double v = 0.0;
      for (const auto& p : planted) {
        const double ds = std::log2(g.scales[i] / p.scale) * 8.0;
        const double dtau = (g.taus[j] - p.tau) / 20.0;
        v += std::exp(-0.5 * (ds * ds + dtau * dtau));
      }
      g.values(i, j) = v;
    }
  g.energy = scalogram(g.values);
  const auto found = detect_patches(g, 0.3, 50.0);
  ASSERT_EQ(found.size(), planted.size());
  for (const auto& p : planted) {
    const auto it = std::find_if(found.begin(), found.end(), [&](const Patch& d) {
      return d.scale == p.scale && std::abs(d.tau - p.tau) <= 1.0;
    });
    EXPECT_NE(it, found.end()) << p.scale << ' ' << p.tau;
  }
  for (const auto& d : found) {
    EXPECT_FALSE(d.p.has_value());
    EXPECT_FALSE(d.k.has_value());
    EXPECT_EQ(d.source, PatchSource::Detected);
  }
}

TEST(DetectPatches, SuppressesCloseNeighbours) {
  ScalogramGrid g;
  g.scales = {1.0};
  for (int j = 0; j <= 200; ++j) g.taus.push_back(j);
  g.signal_end = 200.0;
  g.values = Matrix<Complex>(1, g.taus.size());
  for (std::size_t j = 0; j < g.taus.size(); ++j)
    g.values(0, j) = std::exp(-0.5 * std::pow((g.taus[j] - 90.0) / 3.0, 2)) +
                     0.9 * std::exp(-0.5 * std::pow((g.taus[j] - 105.0) / 3.0, 2));
  g.energy = scalogram(g.values);
  EXPECT_EQ(detect_patches(g, 0.3, 20.0).size(), 1u);
  EXPECT_EQ(detect_patches(g, 0.3, 5.0).size(), 2u);
  EXPECT_THROW(detect_patches(g, 0.0, 5.0), DomainError);
  EXPECT_THROW(detect_patches(g, 0.3, -1.0), DomainError);
}

TEST(DetectPatches, ReferenceScalogramLattice) {
  const auto& run = reference_run();
  const auto found = detect_patches(run.grid, 0.3, kTs.revival / 48.0);
  auto in_row = [](const Patch& d, int p) { return std::abs(d.frequency * kTs.classical / p - 1.0) < 0.03; };
  for (int p = 1; p <= 4; ++p) {
    int on_lattice = 0;
    for (const auto& d : found) {
      if (!in_row(d, p)) continue;
      const double k = std::round(2.0 * p * d.tau / kTs.revival);
      EXPECT_LT(std::abs(d.tau - k * kTs.revival / (2.0 * p)), 0.02 * kTs.revival) << p;
      ++on_lattice;
    }
    EXPECT_GE(on_lattice, 2) << p;
  }
  EXPECT_TRUE(std::any_of(found.begin(), found.end(), [&](const Patch& d) {
    return in_row(d, 3) && std::abs(d.tau - 2.0 * kTs.revival / 3.0) < 0.02 * kTs.revival;
  }));
}

TEST(EstimateRevivalTime, ExactLatticeIsExact) {
  const auto est = estimate_revival_time(lattice({{1, {1, 2}}, {2, {1, 2, 3, 4}}}), kParams);
  EXPECT_NEAR(est.revival_time / kTs.revival, 1.0, 1e-14);
  EXPECT_EQ(est.n_patches_used, 6u);
  ASSERT_EQ(est.rows.size(), 2u);
  EXPECT_LT(est.residual_rms, 1e-12 * kTs.revival);
  std::vector<int> ps;
  for (const auto& r : est.rows) ps.push_back(r.p);
  std::sort(ps.begin(), ps.end());
  EXPECT_EQ(ps, (std::vector<int>{1, 2}));
}

TEST(EstimateRevivalTime, SingleRowWithKnownFundamental) {
  EstimatorOptions opt;
  opt.fundamental = 1.0 / kTs.classical;
  const auto est = estimate_revival_time(lattice({{2, {1, 2, 3}}}), kParams, opt);
  EXPECT_NEAR(est.revival_time / kTs.revival, 1.0, 1e-14);
  EXPECT_EQ(est.rows.at(0).p, 2);
}

TEST(EstimateRevivalTime, MissingLowRows) {
  const auto est = estimate_revival_time(lattice({{3, {1, 2}}, {4, {1, 2, 3}}, {6, {2, 3, 4}}}), kParams);
  EXPECT_NEAR(est.revival_time / kTs.revival, 1.0, 1e-12);
}

TEST(EstimateRevivalTime, SkippedPatchesCountAsSteps) {
  const auto est = estimate_revival_time(lattice({{1, {1, 2}}, {4, {1, 3, 4, 7}}}), kParams);
  EXPECT_NEAR(est.revival_time / kTs.revival, 1.0, 1e-12);
  for (const auto& r : est.rows)
    if (r.p == 4) {
      EXPECT_EQ(r.lattice_steps, 6);
    }
}

TEST(EstimateRevivalTime, JitterBound) {
  std::mt19937 rng(23);
  for (double eps : {1e-4, 1e-3, 5e-3}) {
    std::uniform_real_distribution<double> u(-eps * kTs.revival, eps * kTs.revival);
    for (int trial = 0; trial < 50; ++trial) {
      PatchSet set = lattice({{1, {1, 2, 3, 4, 5, 6}}, {2, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12}}});
      for (auto& d : set) d.tau += u(rng);
      const auto est = estimate_revival_time(set, kParams);
      ASSERT_LE(std::abs(est.revival_time - kTs.revival), 2.0 * eps * kTs.revival) << eps;
    }
  }
}

TEST(EstimateRevivalTime, Errors) {
  EXPECT_THROW(estimate_revival_time({}, kParams), EstimationError);
  EXPECT_THROW(estimate_revival_time(lattice({{1, {1}}, {2, {3}}}), kParams), EstimationError);
  PatchSet odd = lattice({{1, {1, 2}}});
  Patch off = detection(0.1 * kTs.revival, 1);
  off.scale = scale_for_frequency(1.37 / kTs.classical, kParams);
  odd.push_back(off);
  off.tau = 0.6 * kTs.revival;
  odd.push_back(off);
  EstimatorOptions tight;
  tight.max_subharmonic = 2;
  EXPECT_THROW(estimate_revival_time(odd, kParams, tight), EstimationError);
}

TEST(EstimateRevivalTime, ReferenceScalogram) {
  const auto& run = reference_run();
  EstimatorOptions opt;
  opt.tau_resolution = run.grid.taus[1] - run.grid.taus[0];
  const auto est = estimate_revival_time(detect_patches(run.grid, 0.3, kTs.revival / 48.0), kParams, opt);
  EXPECT_NEAR(est.revival_time / kTs.revival, 1.0, 0.02);
  EXPECT_GT(est.revival_time, 0.0);
}
