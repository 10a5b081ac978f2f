#include <gtest/gtest.h>

#include <cmath>

#include "mcflab/barrier.hpp"

using namespace mcflab;

TEST(AmbientField, BoundsOnBox) {
  const Grid g = Grid::centered(2, 1.0, 0.125);
  auto X = AmbientField::radial(2, 0.5);
  X.bound_on(g);
  EXPECT_NEAR(X.boundSupNorm, 0.5 * std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(X.boundJac, 0.5, 1e-12);
  EXPECT_NEAR(ricX_lower_bound(X, g), 0.5, 1e-12);
}

TEST(AmbientField, RotationHasZeroSymmetricPart) {
  const Grid g = Grid::centered(2, 1.0, 0.125);
  auto X = AmbientField::rotation(2, 2.0);
  EXPECT_NEAR(ricX_lower_bound(X, g), 0.0, 1e-12);
  EXPECT_FALSE(X.is_zero());
  EXPECT_TRUE(AmbientField::zero(2).is_zero());
}

TEST(AmbientField, ShearLambdaIsHalfNegativeRate) {
  const Grid g = Grid::centered(2, 1.0, 0.125);
  // grad X = [[0, s], [0, 0]]; symmetric part has eigenvalues +-s/2
  EXPECT_NEAR(ricX_lower_bound(AmbientField::shear(2, 1.0), g), -0.5, 1e-12);
}

TEST(ExactSphere, PhiVanishesToRoundOff) {
  for (int dim : {2, 3}) {
    for (bool complement : {false, true}) {
      const auto b = exact_sphere(Vec::Zero(dim), 1.0, 0.0, 0.4, complement);
      for (double t : {0.0, 0.2, 0.4}) {
        for (const auto& x : sample_boundary(b, t, 32)) {
          EXPECT_LE(std::abs(eval_barrier(b, x, t).Phi), 1e-10) << dim << " " << complement << " " << t;
        }
      }
    }
  }
}

TEST(ExactSphere, BoundaryRadiusFollowsLaw) {
  const auto b = exact_sphere(make_vec(0, 0), 0.5, 0.0, 0.4);
  for (const auto& x : sample_boundary(b, 0.3, 16)) EXPECT_NEAR(x.norm(), std::sqrt(2.0 * (0.5 - 0.3)), 1e-9);
}

TEST(Classify, KnownExamples) {
  EXPECT_TRUE(classify_strong(strong_shrinking_ball(make_vec(0, 0), 0.5, 0.0)).strong);
  EXPECT_FALSE(classify_strong(exact_sphere(make_vec(0, 0), 0.5, 0.0, 0.4)).strong);
  // a ball growing at speed 1 is far too slow to be a barrier
  EXPECT_FALSE(classify_strong(ball_barrier(make_vec(0, 0), 0.5, -1.0, 0.0, 0.1)).strong);
}

TEST(Classify, TransportCanDestroyStrength) {
  const auto b = strong_shrinking_ball(make_vec(0, 0), 0.5, 0.0, 0.2);
  EXPECT_TRUE(classify_strong(b).strong);
  // an outward drift only helps; a strong inward drift pushes the flow into the barrier
  const auto out = AmbientField::radial(2, 5.0), in = AmbientField::radial(2, -20.0);
  EXPECT_TRUE(classify_strong(b, &out).strong);
  EXPECT_FALSE(classify_strong(b, &in).strong);
}

// The perturbed set touches the original at p at the final time and lies inside it everywhere else.
TEST(Perturbation, PerturbedSetSitsInsideAndTouches) {
  const auto src = half_space(make_vec(1, 0), 0.0, 0.0, -1.0, 0.0);
  const auto pb = perturb_barrier(src, make_vec(0, 0), 1.0);
  EXPECT_NEAR(pb.barrier.f(make_vec(0, 0), 0.0), 0.0, 1e-12);
  for (double t : {-0.5, -0.1, 0.0}) {
    for (double x : {-0.8, -0.3, 0.0, 0.2}) {
      for (double y : {-0.7, 0.0, 0.4}) {
        EXPECT_GE(pb.barrier.f(make_vec(x, y), t), pb.original.f(make_vec(x, y), t) - 1e-12);
      }
    }
  }
  EXPECT_GT(pb.barrier.f(make_vec(0, 0.3), 0.0), 0.0);
}

TEST(Perturbation, QuadraticRatioIsHalfTheConstant) {
  const auto src = half_space(make_vec(1, 0), 0.0, 0.0, -1.0, 0.0);
  for (double c : {0.5, 1.0, 2.0}) {
    const auto pb = perturb_barrier(src, make_vec(0, 0), c);
    EXPECT_NEAR(separation_ratio(pb, make_vec(0, 1), 0.02), 0.5 * c, 0.01 * c);
  }
}

TEST(Perturbation, RejectsNonPositiveConstant) {
  const auto src = half_space(make_vec(1, 0), 0.0, 0.0, -1.0, 0.0);
  EXPECT_THROW((void)perturb_barrier(src, make_vec(0, 0), 0.0), Error);
}

TEST(Barrier, MaskMatchesSublevel) {
  const Grid g = Grid::centered(2, 1.0, 0.0625);
  const auto m = barrier_mask(strong_shrinking_ball(make_vec(0, 0), 0.5, 0.0), g, 0.0);
  EXPECT_TRUE(m[g.nearest_node(make_vec(0, 0))]);
  EXPECT_FALSE(m[g.nearest_node(make_vec(0.75, 0))]);
}

TEST(FiniteSpeed, BoundIsCurvatureOfHalfRadiusSphere) {
  EXPECT_DOUBLE_EQ(finite_speed_bound(0.5, 1), 4.0);
  EXPECT_DOUBLE_EQ(finite_speed_bound(0.5, 2), 8.0);
  EXPECT_THROW((void)finite_speed_bound(0.0, 1), Error);
}
