#include "obbkit/geometry.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace obbkit {
namespace {

using testing::corner_set_distance;
using testing::kPi;

void ExpectBoxNear(const RotatedBox& got, const RotatedBox& want, double tol = 1e-9) {
  EXPECT_NEAR(got.cx, want.cx, tol);
  EXPECT_NEAR(got.cy, want.cy, tol);
  EXPECT_NEAR(got.w, want.w, tol);
  EXPECT_NEAR(got.h, want.h, tol);
  EXPECT_NEAR(got.theta, want.theta, tol);
  EXPECT_EQ(got.convention, want.convention);
}

TEST(Normalize, AlreadyValidIsIdentity) {
  const RotatedBox b{0, 0, 4, 2, kPi / 3, AngleConvention::LE90};
  EXPECT_EQ(normalize(b, AngleConvention::LE90), b);
}

TEST(Normalize, SwapsShortLongEdgeForLe90) {
  const RotatedBox in{0, 0, 2, 4, 0, AngleConvention::LE90};
  const RotatedBox out = normalize(in, AngleConvention::LE90);
  ExpectBoxNear(out, {0, 0, 4, 2, -kPi / 2, AngleConvention::LE90});
  EXPECT_LT(corner_set_distance(in, out), 1e-9);
}

TEST(Normalize, HalfTurnIdentificationForLe135) {
  const RotatedBox in{0, 0, 4, 2, -kPi / 3, AngleConvention::LE90};
  const RotatedBox out = normalize(in, AngleConvention::LE135);
  ExpectBoxNear(out, {0, 0, 4, 2, 2 * kPi / 3, AngleConvention::LE135});
  EXPECT_LT(corner_set_distance(in, out), 1e-9);
}

TEST(Normalize, OcZeroAngleBecomesMinusQuarterTurnWithSwap) {
  const RotatedBox out = normalize({5, 6, 4, 2, 0, AngleConvention::LE90}, AngleConvention::OC);
  ExpectBoxNear(out, {5, 6, 2, 4, -kPi / 2, AngleConvention::OC});
}

TEST(Normalize, RangeBoundariesAreHalfOpen) {
  for (AngleConvention c : kAllConventions) {
    const AngleRange r = angle_range(c);
    const RotatedBox at_hi = normalize({0, 0, 4, 2, r.hi, c}, c);
    EXPECT_TRUE(r.contains(at_hi.theta)) << to_string(c);
    EXPECT_TRUE(is_canonical(at_hi)) << to_string(c);
    const RotatedBox at_lo = normalize({0, 0, 4, 2, r.lo, c}, c);
    EXPECT_EQ(at_lo.theta, r.lo) << to_string(c);
  }
}

TEST(Normalize, RejectsNonFinite) {
  EXPECT_THROW(normalize({0, 0, 1, 1, NAN, AngleConvention::OC}, AngleConvention::OC),
               NonFiniteInput);
  EXPECT_THROW(normalize({INFINITY, 0, 1, 1, 0, AngleConvention::OC}, AngleConvention::LE90),
               NonFiniteInput);
}

TEST(Normalize, RangeSoundnessAndCornerPreservation) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 2000; ++i) {
    const RotatedBox raw = testing::random_raw_box(rng);
    for (AngleConvention c : kAllConventions) {
      const RotatedBox out = normalize(raw, c);
      ASSERT_TRUE(is_canonical(out)) << to_string(c) << " theta=" << out.theta;
      ASSERT_LT(corner_set_distance(raw, out), 1e-9);
    }
  }
}

TEST(Convert, Le90ToLe135) {
  ExpectBoxNear(convert({0, 0, 4, 2, kPi / 3, AngleConvention::LE90}, AngleConvention::LE135),
                {0, 0, 4, 2, kPi / 3, AngleConvention::LE135});
  ExpectBoxNear(convert({0, 0, 4, 2, -kPi / 3, AngleConvention::LE90}, AngleConvention::LE135),
                {0, 0, 4, 2, 2 * kPi / 3, AngleConvention::LE135});
}

TEST(Convert, RoundTripOcLe90Le135Oc) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const RotatedBox oc = testing::random_box(rng, AngleConvention::OC);
    const RotatedBox back = convert(
        convert(convert(oc, AngleConvention::LE90), AngleConvention::LE135), AngleConvention::OC);
    ASSERT_LT(corner_set_distance(oc, back), 1e-6);
    ASSERT_TRUE(is_canonical(back));
  }
}

TEST(RboxToQuad, AxisAlignedUnit) {
  const QuadPoly q = rbox_to_quad({0, 0, 2, 2, 0, AngleConvention::LE90});
  const QuadPoly want{{Point{-1, -1}, Point{1, -1}, Point{1, 1}, Point{-1, 1}}};
  EXPECT_EQ(q, want);
}

TEST(RboxToQuad, Translation) {
  const QuadPoly q = rbox_to_quad({1, 1, 2, 2, 0, AngleConvention::LE90});
  const QuadPoly want{{Point{0, 0}, Point{2, 0}, Point{2, 2}, Point{0, 2}}};
  EXPECT_EQ(q, want);
}

TEST(RboxToQuad, FortyFiveDegreeSquare) {
  const QuadPoly q = rbox_to_quad({0, 0, 2, 2, kPi / 4, AngleConvention::LE90});
  const double r = std::sqrt(2.0);
  EXPECT_LT(testing::corner_set_distance(
                q.vertices, {Point{-r, 0}, Point{0, -r}, Point{r, 0}, Point{0, r}}),
            1e-12);
  EXPECT_GT(q.signed_area(), 0.0);
  EXPECT_NEAR(q.vertices[0].x, -r, 1e-12);
}

TEST(Canonicalize, ReversesClockwiseAndRotatesToLexMin) {
  const QuadPoly cw{{Point{2, 2}, Point{2, 0}, Point{0, 0}, Point{0, 2}}};
  const QuadPoly q = canonicalize(cw);
  const QuadPoly want{{Point{0, 0}, Point{2, 0}, Point{2, 2}, Point{0, 2}}};
  EXPECT_EQ(q, want);
}

TEST(Canonicalize, KeepsDegenerateVertices) {
  const QuadPoly line{{Point{3, 0}, Point{1, 0}, Point{2, 0}, Point{1, 0}}};
  const QuadPoly q = canonicalize(line);
  EXPECT_EQ(q.vertices[0], (Point{1, 0}));
  EXPECT_EQ(q.signed_area(), 0.0);
  int ones = 0;
  for (const Point& p : q.vertices) ones += p == Point{1, 0};
  EXPECT_EQ(ones, 2);
}

TEST(QuadToRbox, InvertsRboxToQuad) {
  const RotatedBox b{0, 0, 4, 2, kPi / 6, AngleConvention::LE90};
  ExpectBoxNear(quad_to_rbox(rbox_to_quad(b), AngleConvention::LE90), b);
}

TEST(QuadToRbox, NonRectangularQuadMatchesBruteForce) {
  // Brute force over orientations (offline, 0.00005 deg steps) gives a 2x2
  // axis-aligned rectangle of area 4 centred at (1, 1).
  const QuadPoly q{{Point{0, 0}, Point{2, 0}, Point{2, 1}, Point{0, 2}}};
  const RotatedBox r = quad_to_rbox(q, AngleConvention::LE90);
  EXPECT_NEAR(r.area(), 4.0, 1e-12);
  EXPECT_NEAR(r.cx, 1.0, 1e-12);
  EXPECT_NEAR(r.cy, 1.0, 1e-12);
  const testing::BoxFrame frame({r.cx, r.cy, r.w + 1e-9, r.h + 1e-9, r.theta});
  for (const Point& p : q.vertices) EXPECT_TRUE(frame.contains(p.x, p.y));
}

TEST(QuadToRbox, DegeneratePoint) {
  const QuadPoly q{{Point{5, 5}, Point{5, 5}, Point{5, 5}, Point{5, 5}}};
  for (AngleConvention c : kAllConventions) {
    const RotatedBox r = quad_to_rbox(q, c);
    EXPECT_EQ(r, (RotatedBox{5, 5, 0, 0, angle_range(c).lo, c}));
  }
}

TEST(QuadToRbox, Segment) {
  const QuadPoly q{{Point{0, 0}, Point{3, 4}, Point{3, 4}, Point{0, 0}}};
  const RotatedBox r = quad_to_rbox(q, AngleConvention::LE90);
  EXPECT_NEAR(r.w, 5.0, 1e-12);
  EXPECT_EQ(r.h, 0.0);
  EXPECT_NEAR(r.cx, 1.5, 1e-12);
  EXPECT_NEAR(r.cy, 2.0, 1e-12);
  EXPECT_NEAR(r.theta, std::atan2(4.0, 3.0), 1e-12);
}

TEST(QuadToRbox, MinimalAgainstSampledOrientations) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coord(-50.0, 50.0);
  for (int trial = 0; trial < 300; ++trial) {
    QuadPoly q;
    for (Point& p : q.vertices) p = {coord(rng), coord(rng)};
    const RotatedBox r = quad_to_rbox(q, AngleConvention::LE135);
    const std::vector<Point> pts(q.vertices.begin(), q.vertices.end());
    for (int deg = 0; deg < 360; ++deg) {
      ASSERT_LE(r.area(), testing::enclosing_rect_area(pts, deg * kPi / 180.0) * (1 + 1e-12));
    }
    // The rectangle must actually enclose the quad.
    const testing::BoxFrame frame({r.cx, r.cy, r.w + 1e-9, r.h + 1e-9, r.theta});
    for (const Point& p : q.vertices) ASSERT_TRUE(frame.contains(p.x, p.y));
  }
}

TEST(Gaussian, SquareIsIsotropic) {
  for (AngleConvention c : kAllConventions) {
    for (double theta : {-0.3, 0.0, 0.7}) {
      const Gaussian2D g = rbox_to_gaussian(normalize({0, 0, 2, 2, theta, c}, c));
      EXPECT_NEAR(g.sigma.xx, 1.0, 1e-12);
      EXPECT_NEAR(g.sigma.yy, 1.0, 1e-12);
      EXPECT_NEAR(g.sigma.xy, 0.0, 1e-12);
      EXPECT_NEAR(g.sigma.yx, 0.0, 1e-12);
    }
  }
}

TEST(Gaussian, AxisAligned) {
  const Gaussian2D g = rbox_to_gaussian({3, 4, 4, 2, 0, AngleConvention::LE90});
  EXPECT_EQ(g.mu, (Point{3, 4}));
  EXPECT_EQ(g.sigma, Mat2::diag(4, 1));
}

TEST(Gaussian, QuarterTurnConjugatesDiagonal) {
  const Gaussian2D g = rbox_to_gaussian({0, 0, 4, 2, kPi / 2, AngleConvention::LE135});
  EXPECT_NEAR(g.sigma.xx, 1.0, 1e-12);
  EXPECT_NEAR(g.sigma.yy, 4.0, 1e-12);
  EXPECT_NEAR(g.sigma.xy, 0.0, 1e-12);
}

TEST(Gaussian, ConventionIndependentAndTraceIdentity) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 1000; ++i) {
    const RotatedBox b = testing::random_box(rng, AngleConvention::LE90);
    const Gaussian2D g = rbox_to_gaussian(b);
    EXPECT_NEAR(g.sigma.trace(), (b.w * b.w + b.h * b.h) / 4, 1e-9);
    for (AngleConvention c : kAllConventions) {
      const Gaussian2D gc = rbox_to_gaussian(convert(b, c));
      ASSERT_NEAR(gc.mu.x, g.mu.x, 1e-9);
      ASSERT_NEAR(gc.mu.y, g.mu.y, 1e-9);
      ASSERT_NEAR(gc.sigma.xx, g.sigma.xx, 1e-9);
      ASSERT_NEAR(gc.sigma.xy, g.sigma.xy, 1e-9);
      ASSERT_NEAR(gc.sigma.yy, g.sigma.yy, 1e-9);
    }
  }
}

TEST(GaussianToRbox, Diagonal) {
  ExpectBoxNear(gaussian_to_rbox({{0, 0}, Mat2::diag(4, 1)}, AngleConvention::LE90),
                {0, 0, 4, 2, 0, AngleConvention::LE90});
}

TEST(GaussianToRbox, IsotropicPinsThetaToRangeMinimum) {
  for (AngleConvention c : kAllConventions) {
    const RotatedBox r = gaussian_to_rbox({{0, 0}, Mat2::identity()}, c);
    EXPECT_EQ(r, (RotatedBox{0, 0, 2, 2, angle_range(c).lo, c}));
  }
}

TEST(GaussianToRbox, RoundTripPreservesCorners) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 1000; ++i) {
    RotatedBox b = testing::random_box(rng, AngleConvention::LE90);
    if (b.w - b.h < 1e-3) b.w += 1.0;
    for (AngleConvention c : kAllConventions) {
      const RotatedBox back = gaussian_to_rbox(rbox_to_gaussian(b), c);
      ASSERT_TRUE(is_canonical(back));
      ASSERT_LT(corner_set_distance(b, back), 1e-6);
    }
  }
}

TEST(GaussianToRbox, RejectsNegativeEigenvalue) {
  EXPECT_THROW(gaussian_to_rbox({{0, 0}, Mat2::diag(1, -1e-6)}, AngleConvention::LE90), NotPSD);
  EXPECT_THROW(gaussian_to_rbox({{0, 0}, Mat2{1, 0.5, 0.4, 1}}, AngleConvention::LE90), NotPSD);
  EXPECT_NO_THROW(gaussian_to_rbox({{0, 0}, Mat2::diag(1, -1e-12)}, AngleConvention::LE90));
}

TEST(ParseConvention, AcceptsTagsCaseInsensitively) {
  EXPECT_EQ(parse_convention("LE90"), AngleConvention::LE90);
  EXPECT_EQ(parse_convention("oc"), AngleConvention::OC);
  EXPECT_EQ(parse_convention("le135"), AngleConvention::LE135);
  EXPECT_FALSE(parse_convention("le45"));
}

}  // namespace
}  // namespace obbkit
