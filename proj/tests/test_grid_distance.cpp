#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mcflab/distance.hpp"
#include "mcflab/shapes.hpp"

using namespace mcflab;

TEST(Grid, CenteredIndexRoundTrip) {
  const Grid g = Grid::centered(2, 1.0, 0.125);
  EXPECT_EQ(g.counts()[0], 17);
  EXPECT_EQ(g.size(), 17u * 17u);
  for (std::size_t i : {0ul, 5ul, 144ul, 288ul}) {
    const auto c = g.coords(i);
    EXPECT_EQ(g.index(c), i);
    EXPECT_EQ(g.nearest_node(g.position(i)), i);
  }
  EXPECT_NEAR(g.position(g.index(8, 8))[0], 0.0, 1e-15);
}

TEST(Grid, ThreeDimensionalStrides) {
  const Grid g = Grid::centered(3, 1.0, 0.25);
  EXPECT_EQ(g.size(), 729u);
  const auto i = g.index(1, 2, 3);
  EXPECT_EQ(g.coords(i)[2], 3);
  EXPECT_EQ(g.stride(0), 1);
  EXPECT_EQ(g.stride(2), 81);
  int n = 0;
  g.for_each_neighbor(g.index(4, 4, 4), [&](std::size_t, int, int) { ++n; });
  EXPECT_EQ(n, 6);
}

TEST(Grid, MismatchIsReported) {
  const Grid a = Grid::centered(2, 1.0, 0.125), b = Grid::centered(2, 1.0, 0.25);
  try {
    require_same_grid(a, b, "test");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::GridMismatch);
  }
}

TEST(Masks, SetAlgebra) {
  const Grid g = Grid::centered(2, 1.0, 0.1);
  const auto a = shape_mask(g, shapes::ball(make_vec(-0.3, 0), 0.4));
  const auto b = shape_mask(g, shapes::ball(make_vec(0.3, 0), 0.4));
  const auto u = mask_union(a, b), n = mask_intersection(a, b);
  EXPECT_EQ(u.count() + n.count(), a.count() + b.count());
  EXPECT_TRUE(masks_intersect(a, b));
  EXPECT_EQ(mask_complement(a).count(), g.size() - a.count());
}

// Brute force over all node pairs as the oracle.
TEST(DistanceTransform, MatchesBruteForce) {
  const Grid g = Grid::centered(2, 1.0, 0.0625);
  std::mt19937 rng(3);
  std::bernoulli_distribution coin(0.01);
  ClosedSetMask m(g);
  for (auto& v : m.inside) v = coin(rng) ? 1 : 0;
  m.inside[7] = 1;
  const auto d = distance_transform(m);
  const auto pts = m.nodes();
  for (std::size_t i = 0; i < g.size(); i += 13) {
    double best = 1e9;
    for (auto j : pts) best = std::min(best, (g.position(i) - g.position(j)).norm());
    EXPECT_NEAR(d.field.values[i], best, 1e-12);
  }
}

TEST(DistanceTransform, EmptySetUsesSentinel) {
  const Grid g = Grid::centered(2, 1.0, 0.25);
  const auto d = distance_transform(ClosedSetMask(g));
  EXPECT_TRUE(d.setEmpty);
  EXPECT_DOUBLE_EQ(d.field.values[0], empty_sentinel(g));
}

TEST(Distance, HausdorffOfConcentricDisks) {
  const Grid g = Grid::centered(2, 1.5, 0.03125);
  const auto a = shape_mask(g, shapes::ball(make_vec(0, 0), 1.0));
  const auto b = shape_mask(g, shapes::ball(make_vec(0, 0), 0.5));
  EXPECT_NEAR(hausdorff_distance(a, b).value, 0.5, 2 * g.spacing());
  EXPECT_NEAR(set_distance(a, b).value, 0.0, 1e-12);
}

TEST(Distance, InterfaceGapIsSubCell) {
  const Grid g = Grid::centered(2, 2.0, 0.0625);
  const auto u = sample_distance(g, shapes::ball(make_vec(-0.7, 0), 0.5));
  const auto v = sample_distance(g, shapes::ball(make_vec(0.7, 0), 0.5));
  EXPECT_NEAR(interface_gap(u, v).value, 0.4, 0.01);
}

TEST(Distance, SignedDistanceFromMask) {
  const Grid g = Grid::centered(2, 1.5, 0.03125);
  const auto u = signed_distance_from_mask(shape_mask(g, shapes::ball(make_vec(0, 0), 1.0)));
  EXPECT_NEAR(u.values[g.nearest_node(make_vec(0, 0))], -1.0, 2 * g.spacing());
  EXPECT_NEAR(u.values[g.nearest_node(make_vec(1.4, 0))], 0.4, 2 * g.spacing());
}

TEST(Distance, SpacetimeIsParabolic) {
  EXPECT_DOUBLE_EQ(spacetime_distance(make_vec(0, 0), 0.0, make_vec(0.3, 0.4), 0.25), 0.5);
  EXPECT_DOUBLE_EQ(spacetime_distance(make_vec(0, 0), 0.0, make_vec(0, 0), 0.25), 0.5);
}

namespace {

SpacetimeTrack circle_track(const Grid& g, double T, double t0, double t1, int samples) {
  SpacetimeTrack tr;
  tr.startTime = t0;
  tr.timeStep = (t1 - t0) / (samples - 1);
  for (int k = 0; k < samples; ++k) {
    const double t = t0 + (t1 - t0) * k / (samples - 1);
    const double r2 = 2.0 * (T - t);
    tr.samples.push_back({t, ScalarField::sample(g, [&](const Vec& x) {
                            return r2 >= 0.0 ? x.norm() - std::sqrt(r2) : empty_sentinel(g);
                          }, t)});
  }
  return tr;
}

}  // namespace

TEST(Kuratowski, ConstantSequenceIsItsOwnLimit) {
  const Grid g = Grid::centered(2, 1.0, 0.0625);
  std::vector<SpacetimeTrack> tracks(4, circle_track(g, 0.3, 0.0, 0.2, 5));
  const auto lim = kuratowski_limsup(tracks);
  ASSERT_EQ(lim.size(), 5u);
  for (std::size_t k = 0; k < lim.size(); ++k) {
    const auto m = tracks[0].mask(k);
    EXPECT_LE(hausdorff_distance(lim[k], m).value, 2 * g.spacing() + 1e-12);
    for (auto i : m.nodes()) EXPECT_TRUE(lim[k][i]);
  }
}

TEST(Kuratowski, VanishingCirclesLeaveTheLimitPoint) {
  const Grid g = Grid::centered(2, 0.3, 0.015625);
  std::vector<SpacetimeTrack> tracks;
  for (int n = 1; n <= 12; ++n) tracks.push_back(circle_track(g, 1.0 - std::ldexp(1.0, -n), 0.99, 1.0, 82));
  const auto lim = kuratowski_limsup(tracks);
  EXPECT_TRUE(lim.back()[g.nearest_node(make_vec(0, 0))]);
  // far from the origin at the final time nothing survives
  EXPECT_FALSE(lim.back()[g.nearest_node(make_vec(0.25, 0))]);
}

TEST(Kuratowski, RejectsMismatchedLattices) {
  const Grid g = Grid::centered(2, 1.0, 0.125);
  std::vector<SpacetimeTrack> tracks = {circle_track(g, 0.3, 0.0, 0.2, 5), circle_track(g, 0.3, 0.0, 0.2, 6)};
  EXPECT_THROW((void)kuratowski_limsup(tracks), Error);
}
