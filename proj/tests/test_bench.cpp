#include <gtest/gtest.h>

#include <sstream>

#include "convbf/bench.hpp"

using namespace convbf;

TEST(MacCounter, NestedScopesSumToParent) {
  MacCounter c;
  {
    MacCounter::Scope outer(c, "update");
    c.complex_mac(3);
    {
      MacCounter::Scope inner(c, "inverse");
      c.complex_mac(6);
      c.division(2);
    }
    {
      MacCounter::Scope inner(c, "gain");
      c.real_mac(4);
    }
  }
  c.complex_mac(1);
  EXPECT_EQ(c.scope("update/inverse").complex_macs, 6u);
  EXPECT_EQ(c.scope("update").complex_macs, 9u);
  EXPECT_EQ(c.scope("update").real_macs, 4u);
  MacTally children = c.scope("update/inverse");
  children += c.scope("update/gain");
  children.complex_macs += 3;  // recorded directly in the parent
  EXPECT_EQ(children, c.scope("update"));
  EXPECT_EQ(c.total().complex_macs, 10u);
  EXPECT_EQ(c.total().total(), 14u);
}

TEST(CountApaUpdate, DeterministicAndMonotone) {
  EXPECT_EQ(count_apa_update(4, 0, 1), count_apa_update(4, 0, 1));
  for (Index m = 1; m < 8; ++m)
    EXPECT_LT(count_apa_update(m, 6, 1).total(), count_apa_update(m + 1, 6, 1).total());
  // Q: 104 -> 208 at M = 8 (L: 12 -> 25)
  const double r = double(count_apa_update(8, 25, 1).total()) / double(count_apa_update(8, 12, 1).total());
  EXPECT_LE(r, 2.3);
}

TEST(CountApaUpdate, LinearInQ) {
  std::vector<MeasuredPoint> points;
  for (Index q : {32, 64, 128, 256}) {
    const Index order = q / 2 - 1;  // M = 2, D = 1
    points.push_back({q, double(count_apa_update(2, order, 1).total())});
  }
  for (size_t i = 1; i < points.size(); ++i) EXPECT_LE(points[i].macs / points[i - 1].macs, 2.3);
  EXPECT_LE(fit_power_law(points), 1.15);
}

TEST(ReferenceCurves, AnchoringAndRatios) {
  const std::vector<MeasuredPoint> points = {{10, double(count_apa_update(2, 6, 1).total())},
                                             {100, double(count_apa_update(2, 51, 1).total())}};
  const auto rows = reference_curves(points);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].apa, rows[0].quadratic);
  EXPECT_NEAR(rows[0].apa, rows[0].fast_inverse, 1e-9 * rows[0].apa);
  EXPECT_NEAR(rows[1].quadratic / rows[0].quadratic, 100.0, 1e-9);
  EXPECT_LE(rows[1].apa / rows[0].apa, 13.0);
  const std::vector<MeasuredPoint> bad = {{0, 1.0}};
  EXPECT_THROW(reference_curves(bad), InvalidArgument);
}

TEST(FitPowerLaw, ExactExponents) {
  std::vector<MeasuredPoint> quad, lin;
  for (Index q : {10, 20, 40}) {
    quad.push_back({q, 3.0 * double(q * q)});
    lin.push_back({q, 5.0 * double(q)});
  }
  EXPECT_NEAR(fit_power_law(quad), 2.0, 1e-12);
  EXPECT_NEAR(fit_power_law(lin), 1.0, 1e-12);
}

TEST(FrameStep, MethodCounts) {
  EXPECT_EQ(count_frame_step(Method::kDelaySum, 8, 0, 1).total(), 8u);
  EXPECT_LT(count_frame_step(Method::kConvSdMvdr, 8, 12, 1).total(),
            count_frame_step(Method::kConvMpdrApa, 8, 12, 1).total());
  EXPECT_LT(count_frame_step(Method::kMpdrApa, 8, 12, 1).total(),
            count_frame_step(Method::kConvMpdrApa, 8, 12, 1).total());
}

TEST(WallclockSweep, RowsAndCsv) {
  const std::vector<Index> orders = {4, 6};
  const auto conv = wallclock_sweep(Method::kConvMpdrApa, 2, orders, 0.2, 5);
  ASSERT_EQ(conv.size(), 2u);
  EXPECT_EQ(conv[0].q, filter_length(2, 4, 1));
  const auto ds = wallclock_sweep(Method::kDelaySum, 2, orders, 0.2, 5);
  ASSERT_EQ(ds.size(), 1u);
  for (const auto& row : conv) EXPECT_GT(row.seconds_per_audio_second, 0.0);
  std::ostringstream out;
  write_timing_csv(out, conv);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "method,M,L,D,Q,macs,seconds_per_audio_second");
  std::getline(in, line);
  EXPECT_EQ(line.rfind("conv-mpdr-apa,2,4,1,10,", 0), 0u);
}
