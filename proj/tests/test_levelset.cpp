#include <gtest/gtest.h>

#include <cmath>

#include "mcflab/levelset.hpp"
#include "mcflab/shapes.hpp"

using namespace mcflab;

namespace {

// r' = -m / r + kappa r, classical RK4; the reference for round spheres under X = kappa x.
double rk4_radius(double r0, double m, double kappa, double t, double dt = 1e-5) {
  auto f = [&](double r) { return -m / r + kappa * r; };
  double r = r0, s = 0.0;
  while (s < t - 1e-15) {
    const double k = std::min(dt, t - s);
    const double a = f(r), b = f(r + 0.5 * k * a), c = f(r + 0.5 * k * b), d = f(r + k * c);
    r += k / 6.0 * (a + 2 * b + 2 * c + d);
    s += k;
  }
  return r;
}

std::pair<double, double> radius_range(const ScalarField& u) {
  double lo = 1e9, hi = 0.0;
  for (const auto& p : interface_points(u)) {
    lo = std::min(lo, p.norm());
    hi = std::max(hi, p.norm());
  }
  return {lo, hi};
}

}  // namespace

TEST(RadiusOracle, MatchesClosedForm) {
  // without transport r^2 = r0^2 - 2 m t
  EXPECT_NEAR(rk4_radius(1.0, 1.0, 0.0, 0.3), std::sqrt(0.4), 1e-9);
}

TEST(Evolve, CircleFollowsRadiusLaw) {
  const Grid g = Grid::centered(2, 1.3, 1.0 / 32);
  FlowParams p;
  p.maxTime = 0.3;
  p.sampleInterval = 0.1;
  const auto tr = evolve(sample_distance(g, shapes::ball(make_vec(0, 0), 1.0)), nullptr, p);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const auto [lo, hi] = radius_range(tr.samples[k].field);
    const double r = rk4_radius(1.0, 1.0, 0.0, tr.samples[k].time);
    EXPECT_NEAR(lo, r, 2 * g.spacing());
    EXPECT_NEAR(hi, r, 2 * g.spacing());
  }
}

TEST(Evolve, CircleUnderRadialFieldFollowsOde) {
  const Grid g = Grid::centered(2, 1.3, 1.0 / 32);
  AmbientField X = AmbientField::radial(2, -0.5);
  X.bound_on(g);
  FlowParams p;
  p.maxTime = 0.2;
  p.sampleInterval = 0.1;
  const auto tr = evolve(sample_distance(g, shapes::ball(make_vec(0, 0), 0.9)), &X, p);
  for (std::size_t k = 1; k < tr.size(); ++k) {
    const auto [lo, hi] = radius_range(tr.samples[k].field);
    const double r = rk4_radius(0.9, 1.0, -0.5, tr.samples[k].time);
    EXPECT_NEAR(0.5 * (lo + hi), r, 2 * g.spacing());
  }
}

TEST(Evolve, SphereInThreeDimensionsVanishesOnTime) {
  const Grid g = Grid::centered(3, 0.8, 1.0 / 16);
  FlowParams p;
  p.maxTime = 0.15;
  p.sampleInterval = 0.01;
  const auto tr = evolve(sample_distance(g, shapes::ball(make_vec(0, 0, 0), 0.6)), nullptr, p);
  const auto T = extinction_time(tr);
  ASSERT_TRUE(T.has_value());
  EXPECT_NEAR(*T, 0.36 / 4.0, 0.012);
}

TEST(Evolve, TranslationByWholeCellsCommutes) {
  const Grid g = Grid::centered(2, 1.5, 1.0 / 16);
  FlowParams p;
  p.maxTime = 0.1;
  p.sampleInterval = 0.1;
  const double shift = 4 * g.spacing();
  const auto a = evolve(sample_distance(g, shapes::ball(make_vec(0, 0), 0.6)), nullptr, p);
  const auto b = evolve(sample_distance(g, shapes::ball(make_vec(shift, 0), 0.6)), nullptr, p);
  const auto& ua = a.samples.back().field;
  const auto& ub = b.samples.back().field;
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    if (c[0] + 4 >= g.counts()[0] || std::abs(ua.values[i]) > 0.2) continue;
    worst = std::max(worst, std::abs(ua.values[i] - ub.values[g.index(c[0] + 4, c[1])]));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(Evolve, ComparisonKeepsNestedSetsNested) {
  const Grid g = Grid::centered(2, 1.3, 1.0 / 32);
  FlowParams p;
  p.maxTime = 0.1;
  p.sampleInterval = 0.02;
  p.stopAtExtinction = false;
  const auto small = evolve(sample_distance(g, shapes::ellipse(make_vec(0, 0), 0.5, 0.3)), nullptr, p);
  const auto big = evolve(sample_distance(g, shapes::ball(make_vec(0, 0), 0.8)), nullptr, p);
  // the ellipse vanishes mid-run; both tracks must keep the same time lattice
  ASSERT_EQ(small.size(), big.size());
  for (std::size_t k = 0; k < small.size(); ++k) {
    const auto s = small.mask(k), b = big.mask(k);
    for (auto i : s.nodes()) EXPECT_TRUE(b[i]) << "sample " << k;
  }
}

TEST(Evolve, EmptyStartStaysEmpty) {
  const Grid g = Grid::centered(2, 1.0, 1.0 / 16);
  FlowParams p;
  p.maxTime = 0.05;
  const auto tr = evolve(signed_distance_from_mask(ClosedSetMask(g)), nullptr, p);
  for (std::size_t k = 0; k < tr.size(); ++k) EXPECT_TRUE(tr.mask(k).empty());
}

TEST(Reinitialize, KeepsInterfaceAndRestoresSlope) {
  const Grid g = Grid::centered(2, 1.3, 1.0 / 32);
  auto u = sample_distance(g, shapes::ball(make_vec(0, 0), 0.7));
  for (auto& v : u.values) v *= 3.0;  // steep but same zero set
  const auto before = interface_points(u);
  const auto r = reinitialize(u);
  const auto [lo, hi] = radius_range(r);
  EXPECT_NEAR(lo, 0.7, 0.1 * g.spacing());
  EXPECT_NEAR(hi, 0.7, 0.1 * g.spacing());
  EXPECT_NEAR(r.values[g.nearest_node(make_vec(1.0, 0))], 0.3, 0.5 * g.spacing());
  EXPECT_NEAR(r.values[g.nearest_node(make_vec(0.4, 0))], -0.3, 0.5 * g.spacing());
  EXPECT_TRUE(r.all_finite());
}

TEST(FlowParams, RejectsBadSettings) {
  const Grid g = Grid::centered(2, 1.0, 1.0 / 16);
  FlowParams p;
  p.cfl = 0.7;
  EXPECT_THROW(p.validate(g), Error);
  p.cfl = 0.2;
  p.bandWidth = g.spacing();
  EXPECT_THROW(p.validate(g), Error);
  p.bandWidth = 0.0;
  EXPECT_NO_THROW(p.validate(g));
  EXPECT_DOUBLE_EQ(p.time_step(g, 0.0), 0.2 * g.spacing() * g.spacing() / 4.0);
}

TEST(Arrival, MatchesParabolaForDisk) {
  const Grid g = Grid::centered(2, 1.2, 1.0 / 32);
  FlowParams p;
  p.maxTime = 0.55;
  p.sampleInterval = 0.01;
  const auto u0 = sample_distance(g, shapes::ball(make_vec(0, 0), 1.0));
  const auto at = arrival_time(evolve(u0, nullptr, p), sublevel_mask(u0));
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.position(i);
    if (x.norm() <= 0.9) worst = std::max(worst, std::abs(at.u[i] - 0.5 * (1.0 - x.squaredNorm())));
  }
  EXPECT_LE(worst, 3 * g.spacing());
}

TEST(ComposeFlows, SemigroupOnDisk) {
  const Grid g = Grid::centered(2, 1.2, 1.0 / 32);
  FlowParams p;
  const auto C = shape_mask(g, shapes::ball(make_vec(0, 0), 0.9));
  const auto once = flow_mask(C, 0.2, nullptr, p);
  const auto twice = flow_mask(flow_mask(C, 0.1, nullptr, p), 0.1, nullptr, p);
  EXPECT_LE(hausdorff_distance(once, twice).value, 3 * g.spacing());
}
