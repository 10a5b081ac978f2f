#ifndef MCFLAB_BARRIER_HPP
#define MCFLAB_BARRIER_HPP

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "mcflab/grid.hpp"

namespace mcflab {

/// Smooth vector field X on the ambient space together with its Jacobian (jac(i, j) = dX_i/dx_j).
struct AmbientField {
  std::string name = "zero";
  int dim = 2;
  std::function<Vec(const Vec&)> X;
  std::function<Mat(const Vec&)> jac;
  double boundSupNorm = 0.0;  ///< chi >= sup |X| over the run box
  double boundJac = 0.0;      ///< >= sup |grad X| (operator norm) over the run box

  [[nodiscard]] Vec operator()(const Vec& x) const { return X(x); }

  /// Fills the bounds from the grid nodes, then checks every node against them.
  AmbientField& bound_on(const Grid& g) {
    boundSupNorm = 0.0;
    boundJac = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec p = g.position(i);
      boundSupNorm = std::max(boundSupNorm, X(p).norm());
      boundJac = std::max(boundJac, jac(p).operatorNorm());
    }
    validate_on(g);
    return *this;
  }

  void validate_on(const Grid& g) const {
    if (g.dim() != dim) throw Error(ErrorKind::GridMismatch, "ambient field dimension differs from grid");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const Vec p = g.position(i);
      if (X(p).norm() > boundSupNorm * (1 + 1e-12) + 1e-300)
        throw Error(ErrorKind::Precondition, "ambient field exceeds its sup-norm bound at a grid node");
      if (jac(p).operatorNorm() > boundJac * (1 + 1e-12) + 1e-300)
        throw Error(ErrorKind::Precondition, "ambient field exceeds its Jacobian bound at a grid node");
    }
  }

  [[nodiscard]] bool is_zero() const { return boundSupNorm == 0.0 && boundJac == 0.0; }

  static AmbientField zero(int dim) {
    return {"zero", dim, [dim](const Vec&) { return Vec(Vec::Zero(dim)); },
            [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); }, 0.0, 0.0};
  }

  static AmbientField constant(const Vec& c) {
    const int dim = static_cast<int>(c.size());
    return {"constant", dim, [c](const Vec&) { return c; },
            [dim](const Vec&) { return Mat(Mat::Zero(dim, dim)); }, c.norm(), 0.0};
  }

  /// X(x) = kappa x.
  static AmbientField radial(int dim, double kappa) {
    return {"radial", dim, [kappa](const Vec& x) { return Vec(kappa * x); },
            [dim, kappa](const Vec&) { return Mat(kappa * Mat::Identity(dim, dim)); }, 0.0, std::abs(kappa)};
  }

  /// Rigid rotation omega (-y, x, 0) about the last-but-one axis pair.
  static AmbientField rotation(int dim, double omega = 1.0) {
    Mat J = Mat::Zero(dim, dim);
    J(0, 1) = -omega;
    J(1, 0) = omega;
    return {"rotation", dim, [J](const Vec& x) { return Vec(J * x); }, [J](const Vec&) { return J; }, 0.0,
            std::abs(omega)};
  }

  /// X(x, y) = (s y, 0).
  static AmbientField shear(int dim, double s = 1.0) {
    Mat J = Mat::Zero(dim, dim);
    J(0, 1) = s;
    return {"shear", dim, [J](const Vec& x) { return Vec(J * x); }, [J](const Vec&) { return J; }, 0.0,
            std::abs(s)};
  }

  /// X(x) = b + A x.
  static AmbientField affine(const Vec& b, const Mat& A) {
    return {"affine", static_cast<int>(b.size()), [b, A](const Vec& x) { return Vec(b + A * x); },
            [A](const Vec&) { return A; }, 0.0, A.operatorNorm()};
  }
};

/// Smooth barrier t -> K(t) = {f(., t) <= 0} on [a, b], with exact derivatives of f.
struct ImplicitBarrier {
  std::string name;
  int dim = 2;
  std::function<double(const Vec&, double)> f;
  std::function<Vec(const Vec&, double)> grad;
  std::function<Mat(const Vec&, double)> hess;
  std::function<double(const Vec&, double)> dft;
  double a = -std::numeric_limits<double>::infinity();
  double b = std::numeric_limits<double>::infinity();
  /// Boundary sampling hints: seeds on a sphere of this radius about this centre are Newton-projected.
  std::function<Vec(double)> seedCenter;
  std::function<double(double)> seedRadius;

  [[nodiscard]] bool covers(double t) const { return t >= a - 1e-12 && t <= b + 1e-12; }
};

struct BarrierPointReport {
  Vec point;
  double time = 0.0;
  Vec nu;
  double H = 0.0;
  double v = 0.0;
  double Phi = 0.0;
  double PhiX = 0.0;
};

inline constexpr double kBoundaryTolerance = 1e-8;
inline constexpr double kRegularGradient = 1e-6;

/// Exact nu, H, v, Phi and Phi^X at a boundary point.
inline BarrierPointReport eval_barrier(const ImplicitBarrier& b, const Vec& x, double t,
                                       const AmbientField* X = nullptr) {
  if (!b.covers(t)) throw Error(ErrorKind::OutOfInterval, "time outside the barrier interval");
  const double fx = b.f(x, t);
  if (std::abs(fx) > kBoundaryTolerance) throw Error(ErrorKind::Precondition, "point is not on the barrier boundary");
  const Vec g = b.grad(x, t);
  const double gn = g.norm();
  if (gn < kRegularGradient) throw Error(ErrorKind::NotRegular, "not a regular boundary point");
  BarrierPointReport r;
  r.point = x;
  r.time = t;
  r.nu = g / gn;
  const Mat Hs = b.hess(x, t);
  r.H = -(Hs.trace() - r.nu.dot(Hs * r.nu)) / gn;
  r.v = -b.dft(x, t) / gn;
  r.Phi = r.v - r.H;
  r.PhiX = X ? r.Phi - X->X(x).dot(r.nu) : r.Phi;
  return r;
}

/// Newton projection onto {f(., t) = 0}; nullopt if it fails to converge or meets a critical point.
inline std::optional<Vec> project_to_boundary(const ImplicitBarrier& b, Vec x, double t, int maxIter = 60) {
  for (int it = 0; it < maxIter; ++it) {
    const double fx = b.f(x, t);
    if (!std::isfinite(fx)) return std::nullopt;
    if (std::abs(fx) <= 1e-13) return x;
    const Vec g = b.grad(x, t);
    const double g2 = g.squaredNorm();
    if (g2 < kRegularGradient * kRegularGradient) return std::nullopt;
    x -= (fx / g2) * g;
  }
  if (std::abs(b.f(x, t)) <= kBoundaryTolerance) return x;
  return std::nullopt;
}

/// Deterministic unit directions: uniform angles in 2D, a Fibonacci lattice in 3D.
inline std::vector<Vec> lattice_directions(int dim, int n, double phase = 0.0) {
  std::vector<Vec> dirs;
  dirs.reserve(static_cast<std::size_t>(n));
  if (dim == 2) {
    for (int i = 0; i < n; ++i) {
      const double th = 2.0 * std::numbers::pi * (i + phase) / n;
      dirs.push_back(make_vec(std::cos(th), std::sin(th)));
    }
    return dirs;
  }
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * i + 2.0 * std::numbers::pi * phase;
    dirs.push_back(make_vec(rho * std::cos(th), rho * std::sin(th), z));
  }
  return dirs;
}

/// Boundary points of K(t) obtained by projecting lattice seeds.
inline std::vector<Vec> sample_boundary(const ImplicitBarrier& b, double t, int n, double phase = 0.0) {
  std::vector<Vec> pts;
  const Vec c = b.seedCenter ? b.seedCenter(t) : Vec(Vec::Zero(b.dim));
  const double r = b.seedRadius ? b.seedRadius(t) : 1.0;
  for (const auto& d : lattice_directions(b.dim, n, phase)) {
    if (auto p = project_to_boundary(b, c + r * d, t)) pts.push_back(*p);
  }
  return pts;
}

struct StrongClassification {
  bool strong = false;
  double worstPhi = -std::numeric_limits<double>::infinity();
  Vec worstPoint;
  double worstTime = 0.0;
  std::size_t evaluated = 0;
};

/// Strong iff the largest sampled Phi (Phi^X when X is given) is below -1e-6.
inline StrongClassification classify_strong(const ImplicitBarrier& b, const AmbientField* X = nullptr,
                                            int samples = 128, int slices = 24) {
  if (samples < 100 || slices < 20)
    throw Error(ErrorKind::Precondition, "classify_strong needs >= 100 samples and >= 20 time slices");
  if (!std::isfinite(b.a) || !std::isfinite(b.b))
    throw Error(ErrorKind::Precondition, "classify_strong needs a bounded time interval");
  StrongClassification out;
  for (int s = 0; s < slices; ++s) {
    const double t = b.a + (b.b - b.a) * s / (slices - 1);
    for (const auto& p : sample_boundary(b, t, samples, 0.5 * s / slices)) {
      const auto r = eval_barrier(b, p, t, X);
      ++out.evaluated;
      if (r.PhiX > out.worstPhi) {
        out.worstPhi = r.PhiX;
        out.worstPoint = p;
        out.worstTime = t;
      }
    }
  }
  if (out.evaluated == 0) throw Error(ErrorKind::Precondition, "no boundary points could be sampled");
  out.strong = out.worstPhi < -1e-6;
  return out;
}

/// Nodes of K(t).
inline ClosedSetMask barrier_mask(const ImplicitBarrier& b, const Grid& g, double t) {
  return ClosedSetMask::from_predicate(g, [&](const Vec& x) { return b.f(x, t) <= 0.0; });
}

// ---------------------------------------------------------------------------------------------
// Built-in barriers

/// Ball (or closed complement of a ball) of radius rho(t) = sqrt(delta^2 - c (t - t0)).
///
/// c > 2m gives a strong barrier, c = 2m the exact shrinking sphere, c < 0 an expanding ball.
inline ImplicitBarrier ball_barrier(const Vec& center, double delta, double c, double t0, double t1,
                                    bool complement = false) {
  const int dim = static_cast<int>(center.size());
  const double sign = complement ? -1.0 : 1.0;
  auto rho = [=](double t) { return std::sqrt(std::max(0.0, delta * delta - c * (t - t0))); };
  ImplicitBarrier b;
  b.name = complement ? "ball-complement" : "ball";
  b.dim = dim;
  b.f = [=](const Vec& x, double t) { return sign * ((x - center).norm() - rho(t)); };
  b.grad = [=](const Vec& x, double) {
    const Vec d = x - center;
    return Vec(sign * d / d.norm());
  };
  b.hess = [=](const Vec& x, double) {
    const Vec d = x - center;
    const double r = d.norm();
    const Vec n = d / r;
    return Mat(sign * (Mat::Identity(dim, dim) - n * n.transpose()) / r);
  };
  b.dft = [=](const Vec&, double t) { return sign * (c / (2.0 * rho(t))); };
  b.a = t0;
  b.b = t1;
  b.seedCenter = [center](double) { return center; };
  b.seedRadius = rho;
  if (c > 0.0 && t1 >= t0 + delta * delta / c)
    throw Error(ErrorKind::Precondition, "ball barrier interval must end before the radius vanishes");
  return b;
}

/// Strong shrinking ball of Thm-style comparison tests: radius law with c = 2m + extra.
inline ImplicitBarrier strong_shrinking_ball(const Vec& center, double delta, double t0, double extra = 1.0,
                                             double lifetimeFraction = 0.95) {
  const int m = static_cast<int>(center.size()) - 1;
  const double c = 2.0 * m + extra;
  return ball_barrier(center, delta, c, t0, t0 + lifetimeFraction * delta * delta / c);
}

/// Exact shrinking-sphere solution with extinction time T: radius sqrt(2m (T - t)).
inline ImplicitBarrier exact_sphere(const Vec& center, double T, double t0, double t1, bool complement = false) {
  const int m = static_cast<int>(center.size()) - 1;
  const double delta = std::sqrt(2.0 * m * (T - t0));
  return ball_barrier(center, delta, 2.0 * m, t0, t1, complement);
}

/// Half-space {n . x <= offset + speed t}; speed = 0 is the static flat barrier.
inline ImplicitBarrier half_space(const Vec& normal, double offset, double speed = 0.0,
                                  double t0 = -std::numeric_limits<double>::infinity(),
                                  double t1 = std::numeric_limits<double>::infinity()) {
  const int dim = static_cast<int>(normal.size());
  const Vec n = normal.normalized();
  ImplicitBarrier b;
  b.name = speed == 0.0 ? "half-space" : "translating-half-space";
  b.dim = dim;
  b.f = [=](const Vec& x, double t) { return n.dot(x) - offset - speed * t; };
  b.grad = [=](const Vec&, double) { return n; };
  b.hess = [=](const Vec&, double) { return Mat(Mat::Zero(dim, dim)); };
  b.dft = [=](const Vec&, double) { return -speed; };
  b.a = t0;
  b.b = t1;
  b.seedCenter = [=](double t) { return Vec((offset + speed * (std::isfinite(t) ? t : 0.0)) * n); };
  b.seedRadius = [](double) { return 1.0; };
  return b;
}

/// Image of a barrier under y = A x + shift (A invertible).
inline ImplicitBarrier affine_image(const ImplicitBarrier& src, const Mat& A, const Vec& shift) {
  const Mat Ainv = A.inverse();
  ImplicitBarrier b = src;
  b.name = src.name + "-affine";
  auto pull = [Ainv, shift](const Vec& y) { return Vec(Ainv * (y - shift)); };
  b.f = [=](const Vec& y, double t) { return src.f(pull(y), t); };
  b.grad = [=](const Vec& y, double t) { return Vec(Ainv.transpose() * src.grad(pull(y), t)); };
  b.hess = [=](const Vec& y, double t) { return Mat(Ainv.transpose() * src.hess(pull(y), t) * Ainv); };
  b.dft = [=](const Vec& y, double t) { return src.dft(pull(y), t); };
  if (src.seedCenter) b.seedCenter = [=](double t) { return Vec(A * src.seedCenter(t) + shift); };
  if (src.seedRadius) {
    const double scale = A.operatorNorm();
    b.seedRadius = [=](double t) { return scale * src.seedRadius(t); };
  }
  return b;
}

/// Outward epsilon-fattening of a ball barrier: radius rho(t) + eps.
inline ImplicitBarrier fattened_ball(const Vec& center, double delta, double c, double t0, double t1, double eps) {
  ImplicitBarrier b = ball_barrier(center, delta, c, t0, t1);
  auto rho = [=](double t) { return std::sqrt(std::max(0.0, delta * delta - c * (t - t0))) + eps; };
  b.name = "fattened-ball";
  b.f = [=](const Vec& x, double t) { return (x - center).norm() - rho(t); };
  b.dft = [=](const Vec&, double t) { return c / (2.0 * (rho(t) - eps)); };
  b.seedRadius = rho;
  return b;
}

// ---------------------------------------------------------------------------------------------
// Perturbation f~ = f + c (delta - t)

namespace detail {

// delta(s) = s^2/2 for s <= 1/2, blended by a quintic smoothstep into the constant 1/2 at s = 1.
struct CappedHalfSquare {
  static constexpr double inner = 0.5;
  static constexpr double outer = 1.0;

  // value, first and second derivative with respect to s
  static std::array<double, 3> eval(double s) {
    if (s <= inner) return {0.5 * s * s, s, 1.0};
    if (s >= outer) return {0.5, 0.0, 0.0};
    const double w = outer - inner;
    const double x = (s - inner) / w;
    const double S = x * x * x * (10.0 + x * (-15.0 + 6.0 * x));
    const double dS = 30.0 * x * x * (1.0 - x) * (1.0 - x) / w;
    const double d2S = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x) / (w * w);
    const double q = 0.5 * s * s, dq = s, d2q = 1.0;
    const double val = (1.0 - S) * q + S * 0.5;
    const double d1 = (1.0 - S) * dq + dS * (0.5 - q);
    const double d2 = (1.0 - S) * d2q - 2.0 * dS * dq + d2S * (0.5 - q);
    return {val, d1, d2};
  }
};

}  // namespace detail

struct PerturbedBarrier {
  ImplicitBarrier barrier;   ///< K~, on the time-shifted interval [a - bEnd, 0]
  ImplicitBarrier original;  ///< K, time-shifted and normalised so |grad f(p, 0)| = 1
  Vec p;
  double c = 0.0;
};

/// f~(x, t) = f(x, t) + c (delta(x) - t), with the final time shifted to 0 and delta ~ |x - p|^2 / 2 near p.
inline PerturbedBarrier perturb_barrier(const ImplicitBarrier& src, const Vec& p, double c) {
  if (!(c > 0.0)) throw Error(ErrorKind::Precondition, "perturbation constant must be positive");
  if (!std::isfinite(src.b)) throw Error(ErrorKind::Precondition, "barrier needs a finite final time");
  const double tEnd = src.b;
  const Vec g0 = src.grad(p, tEnd);
  if (std::abs(src.f(p, tEnd)) > kBoundaryTolerance)
    throw Error(ErrorKind::Precondition, "p is not on the final boundary");
  if (g0.norm() < kRegularGradient) throw Error(ErrorKind::NotRegular, "p is not a regular boundary point");
  const double scale = 1.0 / g0.norm();
  const int dim = src.dim;

  ImplicitBarrier base = src;
  base.name = src.name + "-shifted";
  base.f = [=](const Vec& x, double t) { return scale * src.f(x, t + tEnd); };
  base.grad = [=](const Vec& x, double t) { return Vec(scale * src.grad(x, t + tEnd)); };
  base.hess = [=](const Vec& x, double t) { return Mat(scale * src.hess(x, t + tEnd)); };
  base.dft = [=](const Vec& x, double t) { return scale * src.dft(x, t + tEnd); };
  base.a = src.a - tEnd;
  base.b = 0.0;
  if (src.seedCenter) base.seedCenter = [=](double t) { return src.seedCenter(t + tEnd); };
  if (src.seedRadius) base.seedRadius = [=](double t) { return src.seedRadius(t + tEnd); };

  auto delta = [p](const Vec& x) { return detail::CappedHalfSquare::eval((x - p).norm()); };
  ImplicitBarrier k = base;
  k.name = src.name + "-perturbed";
  k.f = [=](const Vec& x, double t) { return base.f(x, t) + c * (delta(x)[0] - t); };
  k.grad = [=](const Vec& x, double t) {
    const Vec d = x - p;
    const double s = d.norm();
    Vec gd = (s <= detail::CappedHalfSquare::inner) ? Vec(d) : Vec(delta(x)[1] * d / s);
    return Vec(base.grad(x, t) + c * gd);
  };
  k.hess = [=](const Vec& x, double t) {
    const Vec d = x - p;
    const double s = d.norm();
    Mat hd;
    if (s <= detail::CappedHalfSquare::inner) {
      hd = Mat::Identity(dim, dim);
    } else {
      const auto e = delta(x);
      const Vec n = d / s;
      const Mat nn = n * n.transpose();
      hd = e[2] * nn + (e[1] / s) * (Mat::Identity(dim, dim) - nn);
    }
    return Mat(base.hess(x, t) + c * hd);
  };
  k.dft = [=](const Vec& x, double t) { return base.dft(x, t) - c; };
  k.seedCenter = [p](double) { return p; };
  k.seedRadius = [](double) { return 0.25; };

  // Regularity of the final boundary near p.
  for (const auto& dir : lattice_directions(dim, dim == 2 ? 256 : 400)) {
    for (double r : {0.05, 0.2, 0.5, 0.9}) {
      auto q = project_to_boundary(k, p + r * dir, 0.0);
      if (!q) continue;
      if (k.grad(*q, 0.0).norm() < kRegularGradient) {
        throw Error(ErrorKind::NotRegular, "perturbation constant too large: degenerate gradient near p");
      }
    }
  }
  return {k, base, p, c};
}

/// dist(x, boundary of K(0)) / dist(x, p)^2 for the point x of the perturbed final boundary at distance ~s from p.
inline double separation_ratio(const PerturbedBarrier& pb, const Vec& direction, double s) {
  const Vec x0 = pb.p + s * direction.normalized();
  const auto x = project_to_boundary(pb.barrier, x0, 0.0);
  if (!x) throw Error(ErrorKind::NotRegular, "could not reach the perturbed boundary");
  const auto y = project_to_boundary(pb.original, *x, 0.0);
  if (!y) throw Error(ErrorKind::NotRegular, "could not reach the original boundary");
  // Newton from x lands on the foot point of the nearest boundary point for small offsets.
  const double d = (*x - *y).norm();
  return d / (*x - pb.p).squaredNorm();
}

// ---------------------------------------------------------------------------------------------
// Comparison constants

/// Mean curvature of the sphere of radius r/2 in flat R^{m+1}: the speed bound 2m/r.
inline double finite_speed_bound(double r, int m) {
  if (!(r > 0.0) || m < 1) throw Error(ErrorKind::Precondition, "finite_speed_bound needs r > 0 and m >= 1");
  return 2.0 * m / r;
}

/// Smallest eigenvalue of the symmetric part of grad X over the grid nodes (flat ambient Ricci = 0).
inline double ricX_lower_bound(const AmbientField& X, const Grid& g) {
  double lambda = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Mat J = X.jac(g.position(i));
    const Mat S = 0.5 * (J + J.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    lambda = std::min(lambda, es.eigenvalues().minCoeff());
  }
  return lambda;
}

}  // namespace mcflab

#endif  // MCFLAB_BARRIER_HPP
