#ifndef MCFLAB_BRAKKE_HPP
#define MCFLAB_BRAKKE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/barrier.hpp"
#include "mcflab/errors.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/harness.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab {

using Point2 = Eigen::Vector2d;

/// Closed planar polygon, vertices in order (either orientation).
struct PolygonalCurve {
  std::vector<Point2> vertices;
  double time = 0.0;

  [[nodiscard]] std::size_t size() const { return vertices.size(); }
  [[nodiscard]] const Point2& at(long i) const {
    const long n = static_cast<long>(vertices.size());
    return vertices[static_cast<std::size_t>(((i % n) + n) % n)];
  }

  [[nodiscard]] double length() const {
    double L = 0.0;
    for (std::size_t i = 0; i < size(); ++i) L += (at(static_cast<long>(i) + 1) - vertices[i]).norm();
    return L;
  }

  [[nodiscard]] double min_edge() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) m = std::min(m, (at(static_cast<long>(i) + 1) - vertices[i]).norm());
    return m;
  }

  /// Largest ratio between adjacent edge lengths (>= 1).
  [[nodiscard]] double edge_ratio() const {
    double worst = 1.0;
    for (std::size_t i = 0; i < size(); ++i) {
      const long k = static_cast<long>(i);
      const double a = (at(k) - at(k - 1)).norm(), b = (at(k + 1) - at(k)).norm();
      worst = std::max(worst, std::max(a / b, b / a));
    }
    return worst;
  }

  [[nodiscard]] double mean_radius(const Point2& c = Point2::Zero()) const {
    double s = 0.0;
    for (const auto& p : vertices) s += (p - c).norm();
    return s / static_cast<double>(size());
  }

  static PolygonalCurve circle(const Point2& c, double r, int n, double t = 0.0) {
    return ellipse(c, r, r, n, t);
  }

  static PolygonalCurve ellipse(const Point2& c, double a, double b, int n, double t = 0.0) {
    PolygonalCurve out;
    out.time = t;
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * i / n;
      out.vertices.emplace_back(c.x() + a * std::cos(th), c.y() + b * std::sin(th));
    }
    return out;
  }
};

namespace detail {

inline bool segments_cross(const Point2& a, const Point2& b, const Point2& c, const Point2& d) {
  auto orient = [](const Point2& p, const Point2& q, const Point2& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double o1 = orient(a, b, c), o2 = orient(a, b, d), o3 = orient(c, d, a), o4 = orient(c, d, b);
  return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

/// Curvature vector from the circle through three consecutive vertices.
inline Point2 circumcircle_curvature(const Point2& a, const Point2& b, const Point2& c) {
  const Point2 u = a - b, w = c - b;
  const double d = 2.0 * (u.x() * w.y() - u.y() * w.x());
  if (std::abs(d) < 1e-300) return Point2::Zero();
  const Point2 o((w.y() * u.squaredNorm() - u.y() * w.squaredNorm()) / d,
                 (u.x() * w.squaredNorm() - w.x() * u.squaredNorm()) / d);
  return o / o.squaredNorm();
}

inline Point2 vertex_normal(const PolygonalCurve& c, long i) {
  const Point2 t = c.at(i + 1) - c.at(i - 1);
  return Point2(t.y(), -t.x()).normalized();
}

// Sixth-order central difference in the vertex index.
constexpr double kD1[4] = {0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};

template <class Fn>
Point2 index_derivative(long n, long i, Fn&& value) {
  auto wrap = [n](long k) { return ((k % n) + n) % n; };
  Point2 acc = (value(wrap(i + 1)) - value(wrap(i - 1))) * kD1[1];
  for (int k = 2; k <= 3; ++k) acc += (value(wrap(i + k)) - value(wrap(i - k))) * kD1[k];
  return acc;
}

inline Point2 to_point(const Vec& v) { return Point2(v[0], v[1]); }
inline Vec to_vec(const Point2& p) { return make_vec(p.x(), p.y()); }

}  // namespace detail

/// Throws Singular when two non-adjacent edges cross.
inline void require_simple(const PolygonalCurve& c) {
  const long n = static_cast<long>(c.size());
  for (long i = 0; i < n; ++i) {
    for (long j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      if (detail::segments_cross(c.at(i), c.at(i + 1), c.at(j), c.at(j + 1)))
        throw Error(ErrorKind::Singular, "flow singular at this resolution: curve self-intersects");
    }
  }
}

inline void validate_curve(const PolygonalCurve& c) {
  if (c.size() < 16) throw Error(ErrorKind::Precondition, "a polygonal curve needs at least 16 vertices");
  require_simple(c);
}

/// Arc-length resampling with the same vertex count; vertex 0 stays put. Points between vertices
/// come from the Catmull-Rom spline through the neighbours, so a uniform polygon is left unchanged.
inline PolygonalCurve remesh(const PolygonalCurve& c) {
  const long n = static_cast<long>(c.size());
  std::vector<double> s(static_cast<std::size_t>(n) + 1, 0.0);
  for (long i = 0; i < n; ++i) s[i + 1] = s[i] + (c.at(i + 1) - c.at(i)).norm();
  const double L = s[n];
  PolygonalCurve out;
  out.time = c.time;
  out.vertices.reserve(static_cast<std::size_t>(n));
  long j = 0;
  for (long k = 0; k < n; ++k) {
    const double target = L * static_cast<double>(k) / static_cast<double>(n);
    while (j + 1 < n && s[j + 1] <= target) ++j;
    const double len = s[j + 1] - s[j];
    const double u = len > 0.0 ? (target - s[j]) / len : 0.0;
    const Point2 &p0 = c.at(j - 1), &p1 = c.at(j), &p2 = c.at(j + 1), &p3 = c.at(j + 2);
    const double u2 = u * u, u3 = u2 * u;
    out.vertices.push_back(0.5 * ((2.0 * p1) + (-p0 + p2) * u + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * u2 +
                                  (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * u3));
  }
  return out;
}

/// One explicit step: every vertex moves by dt (kappa + (X . n) n).
inline PolygonalCurve curve_step(const PolygonalCurve& c, const AmbientField* X, double dt, bool remeshAfter = false) {
  if (dt < 0.0) throw Error(ErrorKind::Precondition, "curve_step needs dt >= 0");
  if (dt > 0.25 * c.min_edge() * c.min_edge() * (1.0 + 1e-12))
    throw Error(ErrorKind::Precondition, "curve_step needs dt <= 0.25 (min edge)^2");
  PolygonalCurve out;
  out.time = c.time + dt;
  if (dt == 0.0) {
    out.vertices = c.vertices;
    return out;
  }
  const long n = static_cast<long>(c.size());
  out.vertices.resize(c.size());
  for (long i = 0; i < n; ++i) {
    Point2 v = detail::circumcircle_curvature(c.at(i - 1), c.at(i), c.at(i + 1));
    if (X) {
      const Point2 nrm = detail::vertex_normal(c, i);
      const Point2 x = detail::to_point(X->X(detail::to_vec(c.at(i))));
      v += x.dot(nrm) * nrm;
    }
    out.vertices[static_cast<std::size_t>(i)] = c.at(i) + dt * v;
  }
  return remeshAfter ? remesh(out) : out;
}

/// Runs the curve flow for the given number of steps, remeshing every 10 steps and checking for
/// self-intersection at each remesh.
inline std::vector<PolygonalCurve> curve_flow(const PolygonalCurve& c0, const AmbientField* X, double dt, int steps,
                                              int remeshEvery = 10) {
  validate_curve(c0);
  std::vector<PolygonalCurve> track{c0};
  track.reserve(static_cast<std::size_t>(steps) + 1);
  for (int k = 1; k <= steps; ++k) {
    const bool rm = remeshEvery > 0 && k % remeshEvery == 0;
    track.push_back(curve_step(track.back(), X, dt, rm));
    if (rm) require_simple(track.back());
  }
  return track;
}

/// Nonnegative test function with compact support in a disk.
struct TestFunction {
  std::string name;
  std::function<double(const Point2&, double)> phi;
  std::function<Point2(const Point2&, double)> grad;
  std::function<double(const Point2&, double)> dt;
  Point2 center = Point2::Zero();
  double supportRadius = std::numeric_limits<double>::infinity();

  /// A (1 + beta t) exp(1 - 1/(1 - |x-c|^2/R^2)) inside the disk of radius R, zero outside.
  static TestFunction bump(const Point2& c, double R, double A = 1.0, double beta = 0.0) {
    TestFunction f;
    f.name = "bump";
    f.center = c;
    f.supportRadius = R;
    auto core = [=](const Point2& x) {
      const double q = (x - c).squaredNorm() / (R * R);
      return q < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - q)) : 0.0;
    };
    f.phi = [=](const Point2& x, double t) { return A * (1.0 + beta * t) * core(x); };
    f.grad = [=](const Point2& x, double t) -> Point2 {
      const double q = (x - c).squaredNorm() / (R * R);
      if (q >= 1.0) return Point2::Zero();
      const double g = std::exp(1.0 - 1.0 / (1.0 - q));
      return A * (1.0 + beta * t) * g * (-1.0 / ((1.0 - q) * (1.0 - q))) * 2.0 * (x - c) / (R * R);
    };
    f.dt = [=](const Point2& x, double) { return A * beta * core(x); };
    return f;
  }

  /// Equal to 1 on the disk of radius inner, smoothly decaying to 0 at radius outer.
  static TestFunction plateau(const Point2& c, double inner, double outer) {
    TestFunction f;
    f.name = "plateau";
    f.center = c;
    f.supportRadius = outer;
    auto e = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; };
    auto de = [](double s) { return s > 0.0 ? std::exp(-1.0 / s) / (s * s) : 0.0; };
    const double w = outer - inner;
    f.phi = [=](const Point2& x, double) {
      const double s = (outer - (x - c).norm()) / w;
      return e(s) / (e(s) + e(1.0 - s));
    };
    f.grad = [=](const Point2& x, double) -> Point2 {
      const double r = (x - c).norm();
      const double s = (outer - r) / w;
      const double a = e(s), b = e(1.0 - s);
      if (a + b == 0.0 || r == 0.0) return Point2::Zero();
      const double dsdr = -1.0 / w;
      const double dphids = (de(s) * (a + b) - a * (de(s) - de(1.0 - s))) / ((a + b) * (a + b));
      return dphids * dsdr * (x - c) / r;
    };
    f.dt = [](const Point2&, double) { return 0.0; };
    return f;
  }
};

struct BrakkeSides {
  double lhs = 0.0;
  double rhs = 0.0;       ///< last form of the chain: dphi/dt + grad phi.X - Div_M grad phi + phi Div_M X - phi |H|^2
  double rhsFirst = 0.0;  ///< first form: dphi/dt + grad phi^perp.X + grad phi.H - phi H.X - phi |H|^2
  bool supportOutside = false;
};

namespace detail {

/// Quadrature of phi over the curve with weights |x_u| (smooth-periodic rule in the vertex index).
inline double integrate_phi(const PolygonalCurve& c, const TestFunction& f) {
  const long n = static_cast<long>(c.size());
  double total = 0.0;
  for (long i = 0; i < n; ++i) {
    const Point2 xu = index_derivative(n, i, [&](long k) { return c.at(k); });
    total += f.phi(c.at(i), c.time) * xu.norm();
  }
  return total;
}

}  // namespace detail

/// Both sides of the Brakke X-inequality for one step of a curve track.
inline BrakkeSides brakke_sides(const PolygonalCurve& before, const PolygonalCurve& after, const AmbientField* X,
                                const TestFunction& f) {
  const double dt = after.time - before.time;
  if (!(dt > 0.0)) throw Error(ErrorKind::Precondition, "brakke_sides needs consecutive states with dt > 0");
  BrakkeSides out;
  out.lhs = (detail::integrate_phi(after, f) - detail::integrate_phi(before, f)) / dt;

  const auto& c = before;
  const long n = static_cast<long>(c.size());
  const double t = c.time;
  std::vector<Point2> gphi(static_cast<std::size_t>(n)), xs(static_cast<std::size_t>(n), Point2::Zero());
  for (long i = 0; i < n; ++i) {
    gphi[static_cast<std::size_t>(i)] = f.grad(c.at(i), t);
    if (X) xs[static_cast<std::size_t>(i)] = detail::to_point(X->X(detail::to_vec(c.at(i))));
  }
  Point2 lo = c.vertices.front(), hi = c.vertices.front();
  for (const auto& p : c.vertices) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  if (std::isfinite(f.supportRadius)) {
    out.supportOutside = (f.center.array() - f.supportRadius < lo.array()).any() ||
                         (f.center.array() + f.supportRadius > hi.array()).any();
  }

  for (long i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const Point2 p = c.at(i);
    const Point2 xu = detail::index_derivative(n, i, [&](long k) { return c.at(k); });
    const double w = xu.norm();
    const double xu2 = xu.squaredNorm();
    const Point2 H = detail::circumcircle_curvature(c.at(i - 1), p, c.at(i + 1));
    const Point2 nrm = detail::vertex_normal(c, i);
    const double phi = f.phi(p, t), phit = f.dt(p, t);
    const Point2& gp = gphi[ui];
    const Point2& x = xs[ui];

    const double divGrad =
        detail::index_derivative(n, i, [&](long k) { return gphi[static_cast<std::size_t>(k)]; }).dot(xu) / xu2;
    const double divX =
        X ? detail::index_derivative(n, i, [&](long k) { return xs[static_cast<std::size_t>(k)]; }).dot(xu) / xu2
          : 0.0;

    out.rhs += w * (phit + gp.dot(x) - divGrad + phi * divX - phi * H.squaredNorm());
    out.rhsFirst += w * (phit + gp.dot(nrm) * nrm.dot(x) + gp.dot(H) - phi * H.dot(x) - phi * H.squaredNorm());
  }
  return out;
}

struct BrakkeResult {
  TheoremCheckReport report;
  std::vector<BrakkeSides> steps;
  double formDisagreement = 0.0;  ///< worst |rhs - rhsFirst| / max(|rhs|, |rhsFirst|, 1e-6)
  bool formsAgree = true;         ///< every step within 1% (1e-6 floor)
};

inline double brakke_tolerance(const BrakkeSides& s) { return 0.05 * (std::abs(s.lhs) + std::abs(s.rhs)) + 1e-6; }

/// lhs <= rhs + 5% (|lhs| + |rhs|) + 1e-6 at every step of the track.
inline BrakkeResult check_brakke_inequality(const std::vector<PolygonalCurve>& track, const AmbientField* X,
                                            const TestFunction& f) {
  detail::Stopwatch sw;
  BrakkeResult out;
  auto& r = out.report;
  r.theoremId = TheoremId::BrakkeInequality;
  double worstScaled = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < track.size(); ++k) {
    const auto s = brakke_sides(track[k], track[k + 1], X, f);
    out.steps.push_back(s);
    const double tol = brakke_tolerance(s);
    const double slack = s.rhs - s.lhs;
    if (slack + tol < worstScaled) {
      worstScaled = slack + tol;
      r.margin = slack;
      r.tolerance = tol;
      r.witnessTime = track[k].time;
    }
    const double scale = std::max({std::abs(s.rhs), std::abs(s.rhsFirst)});
    const double diff = std::abs(s.rhs - s.rhsFirst);
    if (diff > 0.01 * scale + 1e-6) out.formsAgree = false;
    out.formDisagreement = std::max(out.formDisagreement, diff / std::max(scale, 1e-6));
  }
  r.finalize();
  std::ostringstream os;
  os << out.steps.size() << " steps, test function " << f.name << ", form disagreement " << out.formDisagreement;
  r.detail = os.str();
  r.runtimeSeconds = sw.seconds();
  return out;
}

/// Refinement consistency: rerun with twice the vertices and a quarter of the step. The refined run must
/// pass the inequality too, and the time-integrated lhs and rhs may move by no more than the inequality's
/// own tolerance band, 5% of (|lhs| + |rhs|) plus 1e-6 per unit time, taken on the coarse run.
inline TheoremCheckReport check_brakke_refinement(const PolygonalCurve& coarse0, const PolygonalCurve& fine0,
                                                  const AmbientField* X, const TestFunction& f, double dt, int steps) {
  detail::Stopwatch sw;
  if (fine0.size() != 2 * coarse0.size()) throw Error(ErrorKind::Precondition, "refined curve needs twice the vertices");
  const auto coarse = check_brakke_inequality(curve_flow(coarse0, X, dt, steps), X, f);
  const auto fine = check_brakke_inequality(curve_flow(fine0, X, 0.25 * dt, 4 * steps), X, f);
  auto integrate = [](const BrakkeResult& r, double step, double& lhs, double& rhs) {
    lhs = rhs = 0.0;
    for (const auto& s : r.steps) {
      lhs += s.lhs * step;
      rhs += s.rhs * step;
    }
  };
  double lc, rc, lf, rf;
  integrate(coarse, dt, lc, rc);
  integrate(fine, 0.25 * dt, lf, rf);
  const double allowed = 0.05 * (std::abs(lc) + std::abs(rc)) + 1e-6 * dt * steps;
  const double moved = std::max(std::abs(lf - lc), std::abs(rf - rc));
  TheoremCheckReport r;
  r.theoremId = TheoremId::BrakkeInequality;
  r.tolerance = 0.0;
  r.margin = allowed - moved;
  // the refined run's own verdict, on the same relative scale
  if (!fine.report.passed) r.margin = std::min(r.margin, fine.report.margin + fine.report.tolerance);
  r.witnessTime = coarse0.time + dt * steps;
  std::ostringstream os;
  os << "integrated lhs " << lc << " -> " << lf << ", rhs " << rc << " -> " << rf << ", allowed move " << allowed
     << ", refined inequality " << (fine.report.passed ? "holds" : "fails") << " (test function " << f.name << ")";
  r.detail = os.str();
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Rasterises a curve track onto a grid as a ZeroSet spacetime track (signed distance to the polygon).
inline SpacetimeTrack rasterize_curve_track(const std::vector<PolygonalCurve>& track, const Grid& g,
                                            std::size_t maxSamples = 60) {
  if (g.dim() != 2) throw Error(ErrorKind::Precondition, "curve tracks rasterise onto 2-D grids");
  SpacetimeTrack out;
  out.representation = Representation::ZeroSet;
  out.level = 0.0;
  out.startTime = track.front().time;
  const std::size_t stride = std::max<std::size_t>(1, (track.size() + maxSamples - 1) / maxSamples);
  for (std::size_t k = 0; k < track.size(); k += stride) {
    std::vector<Vec> verts;
    verts.reserve(track[k].size());
    for (const auto& p : track[k].vertices) verts.push_back(detail::to_vec(p));
    out.samples.push_back({track[k].time, sample_distance(g, shapes::polygon(std::move(verts)), track[k].time)});
  }
  out.timeStep = out.samples.size() > 1 ? out.samples[1].time - out.samples[0].time : 0.0;
  return out;
}

/// The support of the curve track must avoid a panel of strong barriers.
inline TheoremCheckReport check_support_is_weak_flow(const std::vector<PolygonalCurve>& track, const AmbientField* X,
                                                     const Grid& g, int panelSize = 6, unsigned seed = 1) {
  detail::Stopwatch sw;
  const auto st = rasterize_curve_track(track, g);
  const auto& first = st.samples.front().field;
  const auto panel = strong_barrier_panel(st, panelSize, seed, 0.3, &first);
  if (static_cast<int>(panel.size()) < panelSize)
    throw Error(ErrorKind::Precondition, "could not seed enough strong barriers away from the curve");
  auto r = check_barrier_panel(st, panel, X, TheoremId::StrongBarrierEquiv);
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// CSV export: one row per state, "t,x0,y0,x1,y1,...".
inline void write_curve_track(std::ostream& os, const std::vector<PolygonalCurve>& track) {
  os.precision(12);
  for (const auto& c : track) {
    os << c.time;
    for (const auto& p : c.vertices) os << ',' << p.x() << ',' << p.y();
    os << '\n';
  }
}

}  // namespace mcflab

#endif  // MCFLAB_BRAKKE_HPP
