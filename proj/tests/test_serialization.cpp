#include <gtest/gtest.h>

#include <string>

#include "fmhom/coincidence_mc.hpp"
#include "fmhom/hom_analytic.hpp"
#include "fmhom/repeater_rates.hpp"
#include "fmhom/analysis.hpp"
#include "fmhom/serialization.hpp"

using namespace fmhom;

namespace {

template <class T>
T round_trip(const T& value) {
  const std::string text = to_json_value(value).dump();
  return validate<T>(Json::parse(text));
}

std::string violation_text(const Json& j) {
  try {
    validate<HomSetup>(j);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Serialization, RoundTripsEveryType) {
  const HomSetup setup(0.05, 0.07, DetectorSpec(0.3, 1e-3), DetectorSpec(0.6, 2e-4),
                       SplitterSpec(std::sqrt(0.4), std::sqrt(0.6)), 12.5, 0.25);
  EXPECT_EQ(round_trip(setup), setup);
  EXPECT_EQ(round_trip(PulseSpec(80.0, 0.05, 4)), PulseSpec(80.0, 0.05, 4));
  EXPECT_EQ(round_trip(AfcBank::with_spacings({2.0, 1.0}, 0.137)),
            AfcBank::with_spacings({2.0, 1.0}, 0.137));
  EXPECT_EQ(round_trip(LinkParams(0.3, 5, 0.5, 0.25)), LinkParams(0.3, 5, 0.5, 0.25));
  EXPECT_EQ(round_trip(RateParams::optimum()), RateParams::optimum());
  EXPECT_EQ(round_trip(EchoEvent(2, 1086.9565217391305, 100.0, 0.1)),
            EchoEvent(2, 1086.9565217391305, 100.0, 0.1));
  const CoincidenceHistogram hist(8.192, {{-8.192, 1}, {0.0, 5}, {8.192, 2}}, -380.0);
  EXPECT_EQ(round_trip(hist), hist);
  const DipCurve curve({{-20.0, 0.9, 0.01}, {0.0, 0.5, 0.02}, {20.0, 0.91, 0.01}});
  EXPECT_EQ(round_trip(curve), curve);
  EXPECT_EQ(round_trip(DipFitResult(1.1, 0.42, 0.0166, 1e-3)), DipFitResult(1.1, 0.42, 0.0166, 1e-3));
  EXPECT_EQ(round_trip(ClickConstants(0.97, 0.5)), ClickConstants(0.97, 0.5));
  EXPECT_EQ(round_trip(McResult(1000, 3, 40, 50)), McResult(1000, 3, 40, 50));
  EXPECT_EQ(round_trip(LinkMcResult(1000, 7)), LinkMcResult(1000, 7));
  EXPECT_EQ(round_trip(ModeWindow(2, 10.0, 4.0)), ModeWindow(2, 10.0, 4.0));
}

TEST(Serialization, MissingFieldsUseDefaults) {
  const HomSetup s = validate<HomSetup>(Json::parse(R"({"mu_a": 0.01})"));
  EXPECT_DOUBLE_EQ(s.mu_a(), 0.01);
  EXPECT_DOUBLE_EQ(s.mu_b(), HomSetup{}.mu_b());
  EXPECT_EQ(s.det_c(), DetectorSpec{});
}

TEST(Serialization, ReportsAllViolationsWithPaths) {
  const std::string msg = violation_text(Json::parse(
      R"({"mu_a": -1, "det_c": {"efficiency": 2}, "splitter": {"t_amp": 1, "r_amp": 1},
          "pol_mismatch": "x"})"));
  EXPECT_NE(msg.find("mu_a"), std::string::npos) << msg;
  EXPECT_NE(msg.find("det_c.efficiency"), std::string::npos) << msg;
  EXPECT_NE(msg.find("splitter.t_amp"), std::string::npos) << msg;
  EXPECT_NE(msg.find("pol_mismatch"), std::string::npos) << msg;
}

TEST(Serialization, RejectsNonObjects) {
  EXPECT_THROW(validate<HomSetup>(Json::parse("[1,2]")), ValidationError);
  EXPECT_THROW(validate<AfcBank>(Json::parse(R"({"modes": 3})")), ValidationError);
  EXPECT_THROW(validate<AfcBank>(Json::parse(R"({"modes": []})")), ValidationError);
}

TEST(Serialization, AdlSerializerUsesValidation) {
  const Json j = HomSetup{};
  EXPECT_EQ(j.get<HomSetup>(), HomSetup{});
  Json bad = j;
  bad["temporal_overlap"] = 3.0;
  EXPECT_THROW(bad.get<HomSetup>(), ValidationError);
}

TEST(Serialization, IntegerFieldsRejectFractions) {
  EXPECT_THROW(validate<LinkParams>(Json::parse(R"({"n_modes": 2.5})")), ValidationError);
  EXPECT_EQ(validate<LinkParams>(Json::parse(R"({"n_modes": 4.0})")).n_modes(), 4);
}
