#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fmhom/coincidence_mc.hpp"
#include "fmhom/hom_analytic.hpp"

using namespace fmhom;

namespace {

const DetectorSpec kModeDetector{0.47, 1.5e-4};

HomSetup mode_setup(double mu, double xi) { return HomSetup::symmetric(mu, kModeDetector, 3.0, xi); }

double oracle_coincidence(const HomSetup& s) { return phase_integral_oracle(s, 100000).coincidence; }

}  // namespace

TEST(McResult, DerivedFields) {
  const McResult r(1000, 10, 50, 40);
  EXPECT_DOUBLE_EQ(r.p_coin_hat(), 0.01);
  EXPECT_NEAR(r.std_error(), std::sqrt(0.01 * 0.99 / 1000.0), 1e-15);
}

TEST(McResult, Invariants) {
  EXPECT_THROW(McResult(0, 0, 0, 0), ValidationError);
  EXPECT_THROW(McResult(10, 5, 4, 9), ValidationError);
  EXPECT_THROW(McResult(10, 0, 11, 12), ValidationError);
  EXPECT_NO_THROW(McResult(10, 0, 11, 3));
}

TEST(SimulateCoincidences, RejectsZeroTrials) {
  EXPECT_THROW(simulate_coincidences(HomSetup{}, 0, 1), DomainError);
  EXPECT_THROW(simulate_coincidences_fock(HomSetup{}, 0, 1), DomainError);
}

TEST(SimulateCoincidences, VacuumNeverClicks) {
  const HomSetup vacuum = HomSetup::symmetric(0.0, DetectorSpec(0.5, 0.0));
  for (const auto& r : {simulate_coincidences(vacuum, 100000, 3), simulate_coincidences_fock(vacuum, 100000, 3)}) {
    EXPECT_EQ(r.coincidences(), 0u);
    EXPECT_EQ(r.clicks_c(), 0u);
    EXPECT_EQ(r.clicks_d(), 0u);
  }
}

TEST(SimulateCoincidences, AgreesWithOracle) {
  for (double xi : {0.0, 1.0}) {
    const HomSetup s = mode_setup(0.064, xi);
    const double want = oracle_coincidence(s);
    const McResult a = simulate_coincidences(s, 2'000'000, 11);
    const McResult b = simulate_coincidences_fock(s, 2'000'000, 11);
    EXPECT_NEAR(a.p_coin_hat(), want, 4.0 * a.std_error()) << "xi=" << xi;
    EXPECT_NEAR(b.p_coin_hat(), want, 4.0 * b.std_error()) << "xi=" << xi;
  }
}

TEST(SimulateCoincidences, SinglesMatchClosedForm) {
  const HomSetup s = HomSetup::symmetric(0.2, DetectorSpec(0.8, 1e-3), 10.0, 0.7);
  const auto singles = singles_probs(s);
  constexpr std::uint64_t kTrials = 500'000;
  for (const auto& r : {simulate_coincidences(s, kTrials, 5), simulate_coincidences_fock(s, kTrials, 5)}) {
    const double pc = static_cast<double>(r.clicks_c()) / kTrials;
    const double pd = static_cast<double>(r.clicks_d()) / kTrials;
    EXPECT_NEAR(pc, singles.p_c, 4.0 * binomial_std_error(singles.p_c, kTrials));
    EXPECT_NEAR(pd, singles.p_d, 4.0 * binomial_std_error(singles.p_d, kTrials));
  }
}

TEST(SimulateCoincidencesFock, DarkDarkCoincidences) {
  const HomSetup dark = HomSetup::symmetric(0.0, DetectorSpec(0.5, 1e-3));
  const McResult r = simulate_coincidences_fock(dark, 4'000'000, 2);
  const double want = 1e-6;
  EXPECT_NEAR(r.p_coin_hat(), want, 3.0 * binomial_std_error(want, r.trials()));
}

TEST(SimulateCoincidencesFock, UnbalancedSplitterAgreesWithOracle) {
  const HomSetup s(0.3, 0.1, DetectorSpec(0.9, 1e-4), DetectorSpec(0.6, 1e-4),
                   SplitterSpec(std::sqrt(0.35), std::sqrt(0.65)), 20.0, 0.9);
  const double want = oracle_coincidence(s);
  const McResult r = simulate_coincidences_fock(s, 1'000'000, 8);
  EXPECT_NEAR(r.p_coin_hat(), want, 4.0 * r.std_error());
}

TEST(Determinism, ThreadCountDoesNotMatter) {
  const HomSetup s = mode_setup(0.2, 1.0);
  const std::uint64_t trials = 4 * kTrialChunk + 17;
  const McResult one = simulate_coincidences(s, trials, 99, 1);
  const McResult fock_one = simulate_coincidences_fock(s, trials, 99, 1);
  for (unsigned threads : {2u, 8u}) {
    EXPECT_EQ(simulate_coincidences(s, trials, 99, threads), one);
    EXPECT_EQ(simulate_coincidences_fock(s, trials, 99, threads), fock_one);
  }
  EXPECT_NE(simulate_coincidences(s, trials, 100, 1), one);
}

TEST(Properties, EstimatorConsistency) {
  std::vector<HomSetup> setups;
  for (double mu : {0.064, 0.2}) {
    for (double eta : {0.47, 1.0}) {
      for (double xi : {0.0, 1.0}) setups.push_back(HomSetup::symmetric(mu, DetectorSpec(eta, 1.5e-4), 3.0, xi));
    }
  }
  for (const auto& s : setups) {
    const double want = oracle_coincidence(s);
    int inside = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const McResult r = simulate_coincidences(s, 50'000, seed);
      if (std::abs(r.p_coin_hat() - want) < 4.0 * r.std_error()) ++inside;
    }
    EXPECT_GE(inside, 99) << "mu=" << s.mu_a() << " eta=" << s.det_c().efficiency()
                          << " xi=" << s.temporal_overlap();
  }
}

TEST(DelayGrid, Counts) {
  EXPECT_EQ(delay_grid_size(-500.0, 500.0, 20.0), 51u);
  EXPECT_EQ(delay_grid_size(0.0, 1.0, 0.1), 11u);
  EXPECT_EQ(delay_grid_size(0.0, 1.0, 0.3), 4u);
  const auto g = delay_grid(-500.0, 500.0, 20.0);
  EXPECT_DOUBLE_EQ(g.front(), -500.0);
  EXPECT_DOUBLE_EQ(g[25], 0.0);
  EXPECT_DOUBLE_EQ(g.back(), 500.0);
  EXPECT_THROW(delay_grid_size(1.0, 1.0, 1.0), DomainError);
  EXPECT_THROW(delay_grid_size(0.0, 1.0, 0.0), DomainError);
}

TEST(DipScan, IdealSetupHalvesAtZeroDelay) {
  const HomSetup ideal = HomSetup::symmetric(0.01, DetectorSpec::ideal(), 0.0, 1.0);
  const DipCurve curve = dip_scan(ideal, kDefaultDipSigma, -500.0, 500.0, 500.0, 2'000'000, 4);
  ASSERT_EQ(curve.size(), 3u);
  const auto& mid = curve.points()[1];
  EXPECT_DOUBLE_EQ(mid.delay, 0.0);
  EXPECT_NEAR(mid.normalized_coincidence, 0.5, 3.0 * mid.std_error);
  for (const auto& edge : {curve.points()[0], curve.points()[2]}) {
    EXPECT_NEAR(edge.normalized_coincidence, 1.0, 3.0 * edge.std_error);
  }
}

TEST(DipScan, Preconditions) {
  EXPECT_THROW(dip_scan(HomSetup{}, kDefaultDipSigma, 0.0, 0.0, 20.0, 10, 1), DomainError);
  EXPECT_THROW(dip_scan(HomSetup{}, kDefaultDipSigma, -1.0, 1.0, -1.0, 10, 1), DomainError);
  EXPECT_THROW(dip_scan(HomSetup{}, kDefaultDipSigma, -1.0, 1.0, 1.0, 0, 1), DomainError);
  EXPECT_THROW(dip_scan(HomSetup{}, 0.0, -1.0, 1.0, 1.0, 10, 1), DomainError);
}

TEST(DipScan, DeterministicAcrossThreads) {
  const DipCurve a = dip_scan(HomSetup{}, kDefaultDipSigma, -100.0, 100.0, 50.0, 70'000, 21, 1);
  const DipCurve b = dip_scan(HomSetup{}, kDefaultDipSigma, -100.0, 100.0, 50.0, 70'000, 21, 4);
  EXPECT_EQ(a, b);
}

namespace {

std::vector<HomSetup> nominal_mode_setups(double xi = 1.0) {
  return {mode_setup(0.064, xi), mode_setup(0.053, xi), mode_setup(0.031, xi)};
}

std::pair<AfcBank, AfcBank> default_banks() { return {AfcBank::default_bank(), AfcBank::default_bank()}; }

}  // namespace

TEST(SynthesizeHistogram, SetupCountMustMatchModes) {
  std::vector<HomSetup> two{HomSetup{}, HomSetup{}};
  EXPECT_THROW(synthesize_histogram(default_banks(), PulseSpec{}, two, 0.0, 1000, 1), ConfigError);
}

TEST(SynthesizeHistogram, ConservesCoincidences) {
  const auto out = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 0.0, 300'000, 6);
  ASSERT_EQ(out.per_mode.size(), 3u);
  std::int64_t simulated = 0;
  for (const auto& m : out.per_mode) simulated += static_cast<std::int64_t>(m.coincidences());
  EXPECT_GT(simulated, 0);
  EXPECT_EQ(out.histogram.total(), simulated);
  EXPECT_DOUBLE_EQ(out.histogram.bin_width(), 8.192);
  EXPECT_DOUBLE_EQ(out.histogram.delay_setting(), 0.0);
}

TEST(SynthesizeHistogram, ZeroDelayAlignsPairs) {
  const auto out = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 0.0, 1000, 6);
  for (const auto& p : out.peaks) EXPECT_DOUBLE_EQ(p.time_1 - p.time_2, 0.0);
  EXPECT_NEAR(out.peaks[0].center(), 652.3, 0.1);
  EXPECT_NEAR(out.peaks[1].center(), 1087.0, 0.1);
  EXPECT_NEAR(out.peaks[2].center(), 1533.7, 0.1);
}

TEST(SynthesizeHistogram, DelayedPairsLoseInterference) {
  // At zero delay every pair overlaps fully and interference suppresses
  // coincidences; at +240 ns the matched pairs no longer overlap.
  const auto aligned = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 0.0, 1'000'000, 6);
  const auto shifted = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 240.0, 1'000'000, 6);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_LT(aligned.per_mode[i].p_coin_hat(), 0.7 * shifted.per_mode[i].p_coin_hat()) << i;
  }
}

TEST(SynthesizeHistogram, ArtifactPeakAddsCounts) {
  HistogramOptions opts;
  opts.artifact_counts = 500;
  opts.artifact_position = 2500.0;
  const auto plain = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 0.0, 100'000, 6);
  const auto with = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), 0.0, 100'000, 6, opts);
  EXPECT_EQ(with.histogram.total(), plain.histogram.total() + 500);
  std::int64_t late = 0;
  for (const auto& b : with.histogram.bins()) {
    if (b.bin_start > 2000.0) late += b.count;
  }
  EXPECT_EQ(late, 500);
}

TEST(SynthesizeHistogram, DeterministicAcrossThreads) {
  HistogramOptions one;
  one.threads = 1;
  HistogramOptions many;
  many.threads = 8;
  const auto a = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), -380.0, 200'000, 9, one);
  const auto b = synthesize_histogram(default_banks(), PulseSpec{}, nominal_mode_setups(), -380.0, 200'000, 9, many);
  EXPECT_EQ(a.histogram, b.histogram);
}
