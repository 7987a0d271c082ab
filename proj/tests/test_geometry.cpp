#include <gtest/gtest.h>

#include "support.hpp"

using namespace msfrac;
using msfrac::fixture::unit_square;

TEST(ValidatePattern, InteriorSegmentIsAccepted) {
  EXPECT_FALSE(validate_pattern(fixture::mid_segment()).has_value());
}

TEST(ValidatePattern, VertexOnCellBoundaryIsRejected) {
  const auto why = validate_pattern(PreCrackPattern{{{Vec2(0.0, 0.5), Vec2(0.5, 0.5)}}});
  ASSERT_TRUE(why.has_value());
  EXPECT_FALSE(why->empty());
}

TEST(ValidatePattern, EmptyPatternIsRejected) {
  EXPECT_TRUE(validate_pattern(PreCrackPattern{}).has_value());
}

TEST(BuildLattice, QuarterGivesFourCells) {
  const auto lattice = build_lattice(unit_square(), 0.25);
  ASSERT_EQ(lattice.size(), 4u);
  std::vector<std::pair<double, double>> origins;
  for (std::size_t k = 0; k < lattice.size(); ++k) origins.emplace_back(lattice.origin(k).x(), lattice.origin(k).y());
  const std::vector<std::pair<double, double>> expected{{0.25, 0.25}, {0.25, 0.5}, {0.5, 0.25}, {0.5, 0.5}};
  EXPECT_EQ(origins, expected);
}

TEST(BuildLattice, EighthGivesThirtySixCells) { EXPECT_EQ(build_lattice(unit_square(), 0.125).size(), 36u); }

TEST(BuildLattice, CellAsLargeAsDomainDoesNotFit) { EXPECT_TRUE(build_lattice(unit_square(), 1.0).empty()); }

TEST(BuildLattice, RejectsNonPositiveEpsilon) {
  EXPECT_THROW(build_lattice(unit_square(), 0.0), std::invalid_argument);
  EXPECT_THROW(build_lattice(unit_square(), -0.1), std::invalid_argument);
}

TEST(BuildLattice, CountsMatchClosedFormOnUnitSquare) {
  double previous = 0.0;
  for (long k = 3; k <= 128; ++k) {
    const auto lattice = build_lattice(unit_square(), 1.0 / static_cast<double>(k));
    ASSERT_EQ(lattice.size(), static_cast<std::size_t>((k - 2) * (k - 2))) << "k = " << k;
    const double ratio = coverage_ratio(lattice);
    const double closed = std::pow(1.0 - 2.0 / static_cast<double>(k), 2);
    EXPECT_NEAR(ratio, closed, 1e-14);
    EXPECT_LE(ratio, 1.0);
    EXPECT_GT(ratio, previous);
    previous = ratio;
  }
}

TEST(BuildLattice, BruteForceAgreesOnOffsetRectangle) {
  // Exact enumeration in hundredths: domain (-0.30, 1.15) x (0.70, 1.60).
  const long ox = -30, oy = 70, w = 145, hgt = 90;
  const Domain d{Vec2(ox / 100.0, oy / 100.0), w / 100.0, hgt / 100.0};
  for (long e : {10, 17, 25, 31}) {
    const auto lattice = build_lattice(d, e / 100.0);
    std::vector<CellIndex> expected;
    for (long m = -100; m <= 100; ++m)
      for (long n = -100; n <= 100; ++n)
        if (m * e > ox && m * e + e < ox + w && n * e > oy && n * e + e < oy + hgt) expected.push_back({m, n});
    EXPECT_EQ(lattice.cells, expected) << "eps = " << e << "/100";
  }
}

TEST(BuildLattice, IsDeterministic) {
  const auto a = build_lattice(unit_square(), 1.0 / 7.0);
  const auto b = build_lattice(unit_square(), 1.0 / 7.0);
  EXPECT_EQ(a.cells, b.cells);
}

TEST(CoverageRatio, SpecValues) {
  EXPECT_DOUBLE_EQ(coverage_ratio(build_lattice(unit_square(), 0.25)), 0.25);
  EXPECT_DOUBLE_EQ(coverage_ratio(build_lattice(unit_square(), 0.125)), 0.5625);
  EXPECT_NEAR(coverage_ratio(build_lattice(unit_square(), 1.0 / 64.0)), std::pow(62.0 / 64.0, 2), 1e-15);
}

TEST(PlacePrecracks, AffineMapIntoCell) {
  const auto lattice = build_lattice(unit_square(), 0.25);
  const auto f = place_precracks(lattice, fixture::mid_segment());
  ASSERT_EQ(f.segments.size(), 4u);
  const auto& s = f.segments[0];
  ASSERT_EQ(s.cell, 0u);
  EXPECT_DOUBLE_EQ(s.a.x(), 0.3125);
  EXPECT_DOUBLE_EQ(s.a.y(), 0.375);
  EXPECT_DOUBLE_EQ(s.b.x(), 0.4375);
  EXPECT_DOUBLE_EQ(s.b.y(), 0.375);
  EXPECT_DOUBLE_EQ(f.total_length, 0.5);
}

TEST(PlacePrecracks, EmptyLatticeGivesNothing) {
  const auto f = place_precracks(build_lattice(unit_square(), 1.0), fixture::mid_segment());
  EXPECT_TRUE(f.segments.empty());
  EXPECT_EQ(f.total_length, 0.0);
}

TEST(PlacePrecracks, SegmentsStayStrictlyInsideTheirCell) {
  const PreCrackPattern zigzag{{{Vec2(0.1, 0.2), Vec2(0.5, 0.9), Vec2(0.85, 0.15)}, {Vec2(0.3, 0.3), Vec2(0.6, 0.4)}}};
  for (double eps : {0.25, 0.1, 1.0 / 16.0}) {
    const auto lattice = build_lattice(unit_square(), eps);
    const auto f = place_precracks(lattice, zigzag);
    EXPECT_NEAR(f.total_length, lattice.size() * eps * zigzag.length(), 1e-12);
    for (const auto& s : f.segments) {
      const Vec2 z = lattice.origin(s.cell);
      for (const Vec2& p : {s.a, s.b}) {
        EXPECT_GT(p.x(), z.x());
        EXPECT_LT(p.x(), z.x() + eps);
        EXPECT_GT(p.y(), z.y());
        EXPECT_LT(p.y(), z.y() + eps);
      }
    }
  }
}

TEST(PlacePrecracks, OverrideReplacesPatternInOneCell) {
  const auto lattice = build_lattice(unit_square(), 0.25);
  const PreCrackPattern diag{{{Vec2(0.2, 0.2), Vec2(0.8, 0.8)}}};
  const auto f = place_precracks(lattice, fixture::mid_segment(), {{2, diag}});
  ASSERT_EQ(f.segments.size(), 4u);
  EXPECT_NEAR(f.segments[2].length(), 0.25 * std::sqrt(0.72), 1e-15);
  EXPECT_NEAR(f.segments[3].length(), 0.125, 1e-15);
}
