#include <gtest/gtest.h>

#include <cmath>

#include "mcflab/separator.hpp"

using namespace mcflab;

TEST(Separator, HalfPlanesGiveLinearRamp) {
  const Grid g = Grid::covering(make_vec(-2, -1.5), make_vec(2, 1.5), 1.0 / 16);
  const SignedDistance a = shapes::half_space(make_vec(1, 0), -1), b = shapes::half_space(make_vec(-1, 0), -1);
  const auto prob = make_separator_problem(shape_mask(g, a), shape_mask(g, b), 0.0, &a, &b);
  EXPECT_NEAR(prob.r, 1.0, 1e-12);
  const auto sol = solve_harmonic(prob);
  // h = -1 on {x <= -delta}, +1 on {x >= delta}: linear in between
  const double w = prob.delta;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (prob.U.inside[i]) worst = std::max(worst, std::abs(sol.h.values[i] - g.position(i)[0] / w));
  }
  EXPECT_LT(worst, 1e-6);
  const auto res = extract_separator(prob, sol.h);
  EXPECT_TRUE(res.separates);
  EXPECT_NEAR(res.distX, 1.0, 3 * g.spacing());
  EXPECT_NEAR(res.distY, 1.0, 3 * g.spacing());
}

TEST(Separator, SymmetricDisksGiveOddSolution) {
  const Grid g = Grid::covering(make_vec(-3.2, -2.2), make_vec(3.2, 2.2), 1.0 / 16);
  const SignedDistance a = shapes::ball(make_vec(-2, 0), 1), b = shapes::ball(make_vec(2, 0), 1);
  const auto prob = make_separator_problem(shape_mask(g, a), shape_mask(g, b), 0.0, &a, &b);
  const auto sol = solve_harmonic(prob);
  double odd = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec p = g.position(i);
    odd = std::max(odd, std::abs(sol.h.values[i] + sol.h.values[g.nearest_node(make_vec(-p[0], p[1]))]));
  }
  EXPECT_LT(odd, 1e-6);
  EXPECT_NEAR(regular_level(prob, sol.h), 0.0, 1e-6);
}

TEST(Separator, AnnulusMatchesLogProfile) {
  const Grid g = Grid::centered(2, 3.5, 1.0 / 32);
  const SignedDistance a = shapes::ball(make_vec(0, 0), 1), b = shapes::ball_complement(make_vec(0, 0), 3);
  const auto prob = make_separator_problem(shape_mask(g, a), shape_mask(g, b), 0.0, &a, &b);
  const auto sol = solve_harmonic(prob);
  EXPECT_TRUE(check_annulus_profile(prob, sol, make_vec(0, 0), 1.0, 3.0).passed);
}

TEST(Separator, TouchingSetsAreRejected) {
  const Grid g = Grid::centered(2, 2.0, 1.0 / 16);
  const SignedDistance a = shapes::ball(make_vec(-0.5, 0), 0.6), b = shapes::ball(make_vec(0.5, 0), 0.6);
  try {
    (void)make_separator_problem(shape_mask(g, a), shape_mask(g, b), 0.0, &a, &b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Precondition);
  }
}

TEST(Separator, FullCheckOnDisks) {
  const Grid g = Grid::covering(make_vec(-3.2, -2.2), make_vec(3.2, 2.2), 1.0 / 16);
  const SignedDistance a = shapes::ball(make_vec(-2, 0), 1), b = shapes::ball(make_vec(2, 0), 1);
  const auto chk = check_separator(shape_mask(g, a), shape_mask(g, b), &a, &b);
  ASSERT_EQ(chk.sweep.size(), 3u);
  for (const auto& r : chk.reports) EXPECT_TRUE(r.passed) << r.label << " " << r.detail;
}
