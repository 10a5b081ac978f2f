#ifndef MCFLAB_SHAPES_HPP
#define MCFLAB_SHAPES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

#include "mcflab/grid.hpp"

namespace mcflab {

/// Signed distance function: negative inside the shape.
using SignedDistance = std::function<double(const Vec&)>;

namespace shapes {

inline SignedDistance ball(const Vec& center, double radius) {
  return [=](const Vec& x) { return (x - center).norm() - radius; };
}

inline SignedDistance ball_complement(const Vec& center, double radius) {
  return [=](const Vec& x) { return radius - (x - center).norm(); };
}

/// {inner <= |x - c| <= outer}.
inline SignedDistance annulus(const Vec& center, double inner, double outer) {
  return [=](const Vec& x) {
    const double r = (x - center).norm();
    return std::max(r - outer, inner - r);
  };
}

/// {n . x <= offset}.
inline SignedDistance half_space(const Vec& normal, double offset) {
  const Vec n = normal.normalized();
  return [=](const Vec& x) { return n.dot(x) - offset; };
}

inline SignedDistance unite(std::vector<SignedDistance> parts) {
  return [parts = std::move(parts)](const Vec& x) {
    double d = std::numeric_limits<double>::infinity();
    for (const auto& s : parts) d = std::min(d, s(x));
    return d;
  };
}

inline SignedDistance translate(SignedDistance s, const Vec& shift) {
  return [=](const Vec& x) { return s(x - shift); };
}

/// Closed planar polygon (counter-clockwise or clockwise), signed distance with winding-number sign.
inline SignedDistance polygon(std::vector<Vec> vertices) {
  return [v = std::move(vertices)](const Vec& x) {
    double best = std::numeric_limits<double>::infinity();
    bool in = false;
    const std::size_t n = v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec e = v[i] - v[j];
      const Vec w = x - v[j];
      const double t = std::clamp(w.dot(e) / e.squaredNorm(), 0.0, 1.0);
      best = std::min(best, (w - t * e).norm());
      if ((v[i][1] > x[1]) != (v[j][1] > x[1])) {
        const double xc = v[j][0] + (x[1] - v[j][1]) * e[0] / e[1];
        if (x[0] < xc) in = !in;
      }
    }
    return in ? -best : best;
  };
}

inline std::vector<Vec> ellipse_vertices(const Vec& center, double a, double b, int n) {
  std::vector<Vec> v;
  v.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double th = 2.0 * std::numbers::pi * i / n;
    v.push_back(make_vec(center[0] + a * std::cos(th), center[1] + b * std::sin(th)));
  }
  return v;
}

/// Ellipse with semi-axes a, b, as a finely sampled polygon.
inline SignedDistance ellipse(const Vec& center, double a, double b, int n = 1024) {
  return polygon(ellipse_vertices(center, a, b, n));
}

}  // namespace shapes

/// Samples a signed distance onto the grid nodes.
inline ScalarField sample_distance(const Grid& g, const SignedDistance& sd, double t = 0.0) {
  return ScalarField::sample(g, sd, t);
}

inline ClosedSetMask shape_mask(const Grid& g, const SignedDistance& sd) {
  return ClosedSetMask::from_predicate(g, [&](const Vec& x) { return sd(x) <= 0.0; });
}

}  // namespace mcflab

#endif  // MCFLAB_SHAPES_HPP
