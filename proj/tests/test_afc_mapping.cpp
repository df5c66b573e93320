#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "fmhom/afc_mapping.hpp"

using namespace fmhom;

TEST(StorageTime, Reciprocal) {
  EXPECT_DOUBLE_EQ(storage_time(1.0), 1000.0);
  EXPECT_NEAR(storage_time(1.533), 652.3, 0.1);
  EXPECT_NEAR(storage_time(0.652), 1533.7, 0.1);
  EXPECT_NEAR(storage_time(0.657), 1522.1, 0.1);
  for (double d : {0.1, 0.652, 0.92, 1.533, 7.0}) EXPECT_NEAR(storage_time(d) * d, 1000.0, 1e-12);
  EXPECT_THROW(storage_time(0.0), DomainError);
  EXPECT_THROW(storage_time(-1.0), DomainError);
}

TEST(EchoSchedule, DefaultBank) {
  const auto events = echo_schedule(AfcBank::default_bank(), 0.0, 0.0);
  ASSERT_EQ(events.size(), 3u);
  EXPECT_NEAR(events[0].retrieval_time(), 652.3, 0.1);
  EXPECT_NEAR(events[1].retrieval_time(), 1087.0, 0.1);
  EXPECT_NEAR(events[2].retrieval_time(), 1533.7, 0.1);
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(events[i].mode_index(), i + 1);
    EXPECT_DOUBLE_EQ(events[i].relative_intensity(), 0.10);
    EXPECT_DOUBLE_EQ(events[i].envelope_fwhm(), 100.0);
  }
}

TEST(EchoSchedule, RetrievalTimeIsStorageTime) {
  const AfcBank bank = AfcBank::default_bank();
  for (const auto& e : echo_schedule(bank, 0.0, 0.0)) {
    const double want = storage_time(bank.modes()[static_cast<std::size_t>(e.mode_index() - 1)].comb_spacing());
    EXPECT_NEAR(e.retrieval_time() / want, 1.0, 1e-9);
  }
}

TEST(EchoSchedule, DelayTranslates) {
  const AfcBank bank = AfcBank::default_bank();
  const auto base = echo_schedule(bank, 0.0, 0.0);
  const auto moved = echo_schedule(bank, 0.0, 240.0);
  const auto later = echo_schedule(bank, 10.0, 0.0);
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_DOUBLE_EQ(moved[i].retrieval_time(), base[i].retrieval_time() + 240.0);
    EXPECT_DOUBLE_EQ(later[i].retrieval_time(), base[i].retrieval_time() + 10.0);
  }
}

TEST(EchoSchedule, SortedAndStable) {
  // Modes listed slowest-first come out fastest-first; equal spacings keep bank order.
  const AfcBank bank = AfcBank::with_spacings({0.5, 2.0, 1.0, 1.0});
  const auto events = echo_schedule(bank, 0.0, 0.0);
  ASSERT_EQ(events.size(), 4u);
  EXPECT_EQ(events[0].mode_index(), 2);
  EXPECT_EQ(events[1].mode_index(), 3);
  EXPECT_EQ(events[2].mode_index(), 4);
  EXPECT_EQ(events[3].mode_index(), 1);
  for (std::size_t i = 1; i < events.size(); ++i) {
    EXPECT_LE(events[i - 1].retrieval_time(), events[i].retrieval_time());
  }
}

TEST(EchoSchedule, EmptyBankRejected) { EXPECT_THROW(AfcBank({}, 100.0), ValidationError); }

TEST(CrossModeOverlap, IdenticalBanksAtZeroDelay) {
  const AfcBank bank = AfcBank::default_bank();
  const Matrix m = cross_mode_overlap(bank, bank, 0.0, 100.0);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(m[i][i], 1.0);
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) {
        EXPECT_LT(m[i][j], 1e-10);
      }
    }
  }
}

TEST(CrossModeOverlap, Minus380DominatedByNeighbourPairs) {
  const AfcBank bank = AfcBank::default_bank();
  for (double tau : {-460.0, -440.0, -420.0, -400.0, -380.0, -360.0}) {
    const Matrix m = cross_mode_overlap(bank, bank, tau, 100.0);
    const double m21 = m[1][0];
    const double m32 = m[2][1];
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        if ((i == 1 && j == 0) || (i == 2 && j == 1)) continue;
        EXPECT_LT(m[i][j], std::min(m21, m32)) << "tau=" << tau << " (" << i + 1 << "," << j + 1 << ")";
      }
    }
  }
}

TEST(CrossModeOverlap, Plus240HasNoOverlap) {
  const AfcBank bank = AfcBank::default_bank();
  const Matrix m = cross_mode_overlap(bank, bank, 240.0, 100.0);
  for (const auto& row : m) {
    for (double v : row) EXPECT_LT(v, 0.05);
  }
}

TEST(CrossModeOverlap, Minus180HasNoOverlap) {
  const AfcBank bank = AfcBank::default_bank();
  const Matrix m = cross_mode_overlap(bank, bank, -180.0, 100.0);
  for (const auto& row : m) {
    for (double v : row) EXPECT_LT(v, 0.05);
  }
}

TEST(CrossModeOverlap, TransposeSymmetry) {
  const AfcBank b1 = AfcBank::default_bank();
  const AfcBank b2 = AfcBank::with_spacings({1.53, 0.92, 0.657, 0.5});
  for (double tau : {-380.0, -17.5, 0.0, 240.0}) {
    const Matrix m = cross_mode_overlap(b1, b2, tau, 100.0);
    const Matrix t = cross_mode_overlap(b2, b1, -tau, 100.0);
    ASSERT_EQ(m.size(), t[0].size());
    for (std::size_t i = 0; i < m.size(); ++i) {
      for (std::size_t j = 0; j < m[i].size(); ++j) {
        EXPECT_NEAR(m[i][j], t[j][i], 1e-13 * m[i][j]);
        EXPECT_GE(m[i][j], 0.0);
        EXPECT_LE(m[i][j], 1.0);
      }
    }
  }
}

TEST(CrossModeOverlap, GaussianForm) {
  // sigma_t = 100 / (2 sqrt(2 ln 2)); overlap at one sigma_t apart is exp(-1/4).
  const double sigma_t = 100.0 * kFwhmToSigma;
  EXPECT_NEAR(envelope_overlap(sigma_t, 100.0), std::exp(-0.25), 1e-15);
  EXPECT_THROW(envelope_overlap(1.0, 0.0), DomainError);
  EXPECT_THROW(cross_mode_overlap(AfcBank{}, AfcBank{}, 0.0, -1.0), DomainError);
}

TEST(Separability, DefaultBankPasses) {
  const auto rep = mode_separability_check(AfcBank::default_bank(), 100.0, 0.01);
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.spectrally_separated);
  EXPECT_EQ(rep.worst_mode_a, 1);
  EXPECT_EQ(rep.worst_mode_b, 2);
  EXPECT_LT(rep.worst_overlap, 1e-10);
}

TEST(Separability, EqualSpacingsFail) {
  const auto rep = mode_separability_check(AfcBank::with_spacings({1.0, 1.0, 0.5}), 100.0, 0.01);
  EXPECT_FALSE(rep.pass);
  EXPECT_EQ(rep.worst_mode_a, 1);
  EXPECT_EQ(rep.worst_mode_b, 2);
  EXPECT_DOUBLE_EQ(rep.worst_overlap, 1.0);
}

TEST(Separability, StrictThresholdFails) {
  const auto rep = mode_separability_check(AfcBank::default_bank(), 100.0, 1e-30);
  EXPECT_FALSE(rep.pass);
  EXPECT_GT(rep.worst_mode_a, 0);
  EXPECT_GT(rep.worst_overlap, 1e-30);
}

TEST(Separability, ThresholdRange) {
  EXPECT_THROW(mode_separability_check(AfcBank::default_bank(), 100.0, 0.0), DomainError);
  EXPECT_THROW(mode_separability_check(AfcBank::default_bank(), 100.0, 1.0), DomainError);
}

TEST(Separability, SingleModeBank) {
  const auto rep = mode_separability_check(AfcBank::with_spacings({1.0}), 100.0, 0.01);
  EXPECT_TRUE(rep.pass);
  EXPECT_EQ(rep.worst_mode_a, 0);
}

TEST(ScheduleCsv, Format) {
  std::ostringstream os;
  write_schedule_csv(os, echo_schedule(AfcBank::with_spacings({1.0, 0.5}), 0.0, 0.0));
  EXPECT_EQ(os.str(), "mode_index,retrieval_time_ns,relative_intensity\n"
                      "1,1000,0.10000000000000001\n"
                      "2,2000,0.10000000000000001\n");
}

TEST(MatchedPairPeaks, DelayConvention) {
  const auto peaks = matched_pair_peaks(AfcBank::default_bank(), AfcBank::default_bank(), -380.0);
  ASSERT_EQ(peaks.size(), 3u);
  for (const auto& p : peaks) EXPECT_DOUBLE_EQ(p.time_2 - p.time_1, 380.0);
  EXPECT_THROW(matched_pair_peaks(AfcBank::default_bank(), AfcBank::with_spacings({1.0}), 0.0), ConfigError);
}
