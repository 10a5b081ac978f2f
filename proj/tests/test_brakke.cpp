#include <gtest/gtest.h>

#include <cmath>

#include "mcflab/brakke.hpp"

using namespace mcflab;

TEST(CurveFlow, CircleShrinksByRadiusLaw) {
  const auto tr = curve_flow(PolygonalCurve::circle(Point2(0, 0), 1.0, 128), nullptr, 1e-4, 2000);
  const double t = tr.back().time;
  EXPECT_NEAR(t, 0.2, 1e-12);
  EXPECT_NEAR(tr.back().mean_radius(), std::sqrt(1.0 - 2.0 * t), 2e-3);
  EXPECT_LT(tr.back().edge_ratio(), 1.1);
}

TEST(CurveFlow, RadialFieldHoldsUnitCircle) {
  const auto X = AmbientField::radial(2, 1.0);
  const auto tr = curve_flow(PolygonalCurve::circle(Point2(0, 0), 1.0, 256), &X, 1e-4, 500);
  EXPECT_NEAR(tr.back().mean_radius(), 1.0, 1e-3);
}

TEST(CurveFlow, EllipseGetsRounder) {
  const auto tr = curve_flow(PolygonalCurve::ellipse(Point2(0, 0), 1.0, 0.5, 256), nullptr, 1e-5, 5000);
  double lo = 1e9, hi = 0.0;
  for (const auto& p : tr.back().vertices) {
    lo = std::min(lo, p.norm());
    hi = std::max(hi, p.norm());
  }
  EXPECT_LT(hi / lo, 2.0);
  EXPECT_LT(tr.back().length(), tr.front().length());
}

TEST(Brakke, InequalityAndFormsOnCircle) {
  const auto tr = curve_flow(PolygonalCurve::circle(Point2(0, 0), 1.0, 256), nullptr, 1e-5, 500);
  for (const auto& f : {TestFunction::plateau(Point2(0, 0), 1.2, 1.6), TestFunction::bump(Point2(0.8, 0.2), 0.6, 1.0, 0.5)}) {
    const auto res = check_brakke_inequality(tr, nullptr, f);
    EXPECT_TRUE(res.report.passed) << f.name;
    EXPECT_TRUE(res.formsAgree) << f.name << " " << res.formDisagreement;
  }
}

// On a circle with phi = 1 near the curve, d/dt length = -int H^2 = -2 pi / r exactly.
TEST(Brakke, PlateauSidesMatchClosedForm) {
  const auto tr = curve_flow(PolygonalCurve::circle(Point2(0, 0), 1.0, 256), nullptr, 1e-5, 100);
  const auto res = check_brakke_inequality(tr, nullptr, TestFunction::plateau(Point2(0, 0), 1.2, 1.6));
  const double r = tr.front().mean_radius();
  EXPECT_NEAR(res.steps.front().rhs, -2.0 * M_PI / r, 0.01);
  EXPECT_NEAR(res.steps.front().lhs, -2.0 * M_PI / r, 0.01);
}

TEST(Brakke, RefinementAgreesOnCircle) {
  const auto f = TestFunction::bump(Point2(0, 0), 3.0);
  const auto r = check_brakke_refinement(PolygonalCurve::circle(Point2(0, 0), 1.0, 128),
                                         PolygonalCurve::circle(Point2(0, 0), 1.0, 256), nullptr, f, 1e-5, 100);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Brakke, RefinementNeedsDoubledVertices) {
  const auto f = TestFunction::bump(Point2(0, 0), 3.0);
  EXPECT_THROW((void)check_brakke_refinement(PolygonalCurve::circle(Point2(0, 0), 1.0, 128),
                                             PolygonalCurve::circle(Point2(0, 0), 1.0, 128), nullptr, f, 1e-5, 10),
               Error);
}

TEST(Brakke, RasterisedTrackIsWeakFlow) {
  const Grid g = Grid::centered(2, 1.6, 1.0 / 32);
  const auto tr = curve_flow(PolygonalCurve::circle(Point2(0, 0), 1.0, 128), nullptr, 1e-5, 2000);
  EXPECT_TRUE(check_support_is_weak_flow(tr, nullptr, g, 6, 1).passed);
}
