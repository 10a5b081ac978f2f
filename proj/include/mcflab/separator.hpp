#ifndef MCFLAB_SEPARATOR_HPP
#define MCFLAB_SEPARATOR_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcflab/distance.hpp"
#include "mcflab/errors.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/harness.hpp"
#include "mcflab/shapes.hpp"

namespace mcflab {

/// Masked-grid Dirichlet problem whose harmonic solution separates two closed sets at distance 2r.
///
/// h = -1 on {dist(., X) <= r - delta}, h = +1 on {dist(., Y) <= r - delta}, harmonic on the rest
/// (U) with zero flux through the box faces. The contact set is {dist(., X) <= r} ∩ {dist(., Y) <= r}.
struct SeparatorProblem {
  Grid grid;
  ClosedSetMask maskX, maskY;
  double r = 0.0;
  double delta = 0.0;
  ScalarField distX, distY;  ///< unsigned distances (analytic when shapes were supplied)
  ClosedSetMask minusSet, plusSet, U, contact;
};

namespace detail {

inline ScalarField unsigned_distance(const ClosedSetMask& m, const SignedDistance* sd) {
  if (sd) return ScalarField::sample(m.grid, [&](const Vec& x) { return std::max(0.0, (*sd)(x)); });
  return distance_transform(m).field;
}

}  // namespace detail

/// Builds the problem; delta <= 0 selects r/4. Optional signed distances give sub-cell boundary data.
inline SeparatorProblem make_separator_problem(const ClosedSetMask& maskX, const ClosedSetMask& maskY,
                                               double delta = 0.0, const SignedDistance* sdX = nullptr,
                                               const SignedDistance* sdY = nullptr) {
  require_same_grid(maskX.grid, maskY.grid, "make_separator_problem");
  if (maskX.empty() || maskY.empty()) throw Error(ErrorKind::Precondition, "separator needs two nonempty sets");
  SeparatorProblem p;
  p.grid = maskX.grid;
  p.maskX = maskX;
  p.maskY = maskY;
  const auto gap = set_distance(maskX, maskY);
  if (gap.value <= 2.0 * p.grid.spacing()) throw Error(ErrorKind::Precondition, "sets must be more than 2h apart");
  p.r = 0.5 * gap.value;
  p.delta = delta > 0.0 ? delta : 0.25 * p.r;
  if (!(p.delta < p.r)) throw Error(ErrorKind::Precondition, "delta must lie in (0, r)");
  p.distX = detail::unsigned_distance(maskX, sdX);
  p.distY = detail::unsigned_distance(maskY, sdY);
  const Grid& g = p.grid;
  const double inner = p.r - p.delta;
  const double tol = 1e-9 * g.spacing();
  p.minusSet = ClosedSetMask(g);
  p.plusSet = ClosedSetMask(g);
  p.U = ClosedSetMask(g);
  p.contact = ClosedSetMask(g, Representation::ZeroSet);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double dx = p.distX.values[i], dy = p.distY.values[i];
    if (dx <= inner + tol) p.minusSet.inside[i] = 1;
    else if (dy <= inner + tol) p.plusSet.inside[i] = 1;
    else p.U.inside[i] = 1;
    if (dx <= p.r + tol && dy <= p.r + tol) p.contact.inside[i] = 1;
  }
  if (p.U.empty()) throw Error(ErrorKind::Precondition, "the in-between region U is empty");
  return p;
}

struct HarmonicSolution {
  ScalarField h;
  int iterations = 0;
  double residual = 0.0;  ///< max |discrete Laplacian| over U nodes, cut-cell rows rescaled
};

/// Solves the cut-cell Dirichlet problem on U with Jacobi-preconditioned conjugate gradients.
inline HarmonicSolution solve_harmonic(const SeparatorProblem& prob, double tolerance = 1e-8, int maxIter = 0) {
  const Grid& g = prob.grid;
  const double h = g.spacing();
  const double ih2 = 1.0 / (h * h);
  const double inner = prob.r - prob.delta;
  const std::size_t N = g.size();

  // Connectivity: U must link the two Dirichlet sets.
  {
    std::vector<std::uint8_t> seen(N, 0);
    std::deque<std::size_t> q;
    for (std::size_t i = 0; i < N; ++i) {
      if (!prob.U.inside[i]) continue;
      bool touches = false;
      g.for_each_neighbor(i, [&](std::size_t j, int, int) { touches = touches || prob.minusSet.inside[j]; });
      if (touches) {
        seen[i] = 1;
        q.push_back(i);
      }
    }
    bool reached = false;
    while (!q.empty() && !reached) {
      const std::size_t i = q.front();
      q.pop_front();
      g.for_each_neighbor(i, [&](std::size_t j, int, int) {
        if (prob.plusSet.inside[j]) reached = true;
        if (prob.U.inside[j] && !seen[j]) {
          seen[j] = 1;
          q.push_back(j);
        }
      });
    }
    if (!reached) throw Error(ErrorKind::Separation, "U does not connect the two boundary components");
  }

  // Unknown numbering and symmetric cut-cell stencil.
  std::vector<long> id(N, -1);
  std::vector<std::size_t> nodes;
  for (std::size_t i = 0; i < N; ++i) {
    if (prob.U.inside[i]) {
      id[i] = static_cast<long>(nodes.size());
      nodes.push_back(i);
    }
  }
  const std::size_t n = nodes.size();
  std::vector<double> diag(n, 0.0), b(n, 0.0);
  std::vector<std::vector<std::pair<std::size_t, double>>> off(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = nodes[k];
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (prob.U.inside[j]) {
        diag[k] += ih2;
        off[k].emplace_back(static_cast<std::size_t>(id[j]), -ih2);
        return;
      }
      const bool minus = prob.minusSet.inside[j] != 0;
      const auto& d = minus ? prob.distX.values : prob.distY.values;
      const double phiI = d[i] - inner, phiJ = d[j] - inner;
      double theta = phiI / (phiI - phiJ);
      theta = std::clamp(std::isfinite(theta) ? theta : 1.0, 1e-6, 1.0);
      const double w = ih2 / theta;
      diag[k] += w;
      b[k] += w * (minus ? -1.0 : 1.0);
    });
  }

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t k = 0; k < n; ++k) {
      double s = diag[k] * x[k];
      for (const auto& [j, a] : off[k]) s += a * x[j];
      y[k] = s;
    }
  };

  std::vector<double> x(n, 0.0), r(b), z(n), p(n), Ap(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double dx = prob.distX.values[nodes[k]], dy = prob.distY.values[nodes[k]];
    x[k] = (dx - dy) / std::max(dx + dy, 1e-12);
  }
  apply(x, Ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
  // Rows with cut cells are rescaled to the regular diagonal, so the test reads as |Laplacian h|.
  const double regularDiag = 2.0 * g.dim() * ih2;
  auto norm_inf = [&](const std::vector<double>& v) {
    double m = 0.0;
    for (std::size_t k = 0; k < n; ++k) m = std::max(m, std::abs(v[k]) * regularDiag / diag[k]);
    return m;
  };
  for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
  p = z;
  double rz = 0.0;
  for (std::size_t k = 0; k < n; ++k) rz += r[k] * z[k];
  const int budget = maxIter > 0 ? maxIter : static_cast<int>(20 * std::sqrt(static_cast<double>(n)) + 2000);
  HarmonicSolution out;
  int it = 0;
  double res = norm_inf(r);
  while (res > tolerance && it < budget) {
    apply(p, Ap);
    double pAp = 0.0;
    for (std::size_t k = 0; k < n; ++k) pAp += p[k] * Ap[k];
    const double alpha = rz / pAp;
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * Ap[k];
    }
    ++it;
    if (it % 50 == 0) {
      // refresh the recursive residual to keep round-off from drifting
      apply(x, Ap);
      for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
    }
    res = norm_inf(r);
    for (std::size_t k = 0; k < n; ++k) z[k] = r[k] / diag[k];
    double rzNew = 0.0;
    for (std::size_t k = 0; k < n; ++k) rzNew += r[k] * z[k];
    const double beta = rzNew / rz;
    rz = rzNew;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
  }
  apply(x, Ap);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - Ap[k];
  res = norm_inf(r);
  if (res > tolerance) {
    std::ostringstream os;
    os << "harmonic solve did not converge: residual " << res << " after " << it << " iterations";
    throw Error(ErrorKind::NonConvergence, os.str());
  }
  out.h = ScalarField(g, 0.0);
  for (std::size_t i = 0; i < N; ++i) {
    if (prob.minusSet.inside[i]) out.h.values[i] = -1.0;
    else if (prob.plusSet.inside[i]) out.h.values[i] = 1.0;
  }
  for (std::size_t k = 0; k < n; ++k) out.h.values[nodes[k]] = x[k];
  out.iterations = it;
  out.residual = res;
  return out;
}

/// Level c, or the nearest value in steps of 1e-3 that no node sits on with a flat neighbourhood.
inline double regular_level(const SeparatorProblem& prob, const ScalarField& h, double c = 0.0) {
  const Grid& g = prob.grid;
  auto regular = [&](double lvl) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!prob.U.inside[i] || std::abs(h.values[i] - lvl) > 1e-10) continue;
      bool flat = true;
      g.for_each_neighbor(i, [&](std::size_t j, int, int) { flat = flat && std::abs(h.values[j] - h.values[i]) < 1e-10; });
      if (flat) return false;
    }
    return true;
  };
  for (int k = 0; k < 1000; ++k) {
    for (int s : {1, -1}) {
      const double lvl = c + s * 1e-3 * k;
      if (lvl > -1.0 && lvl < 1.0 && regular(lvl)) return lvl;
    }
  }
  throw Error(ErrorKind::NotRegular, "no regular level of the harmonic function found near the request");
}

struct SeparatorResult {
  ClosedSetMask M;
  double level = 0.0;
  bool separates = false;
  double distX = 0.0;  ///< dist(X, M) over nodes
  double distY = 0.0;
};

namespace detail {

/// Nodes reachable from `from` through nodes outside `wall` (4/6-connected); returns a path to the
/// first node of `to` reached, empty when none is.
inline std::vector<std::size_t> leak_path(const ClosedSetMask& from, const ClosedSetMask& to, const ClosedSetMask& wall) {
  const Grid& g = from.grid;
  std::vector<long> parent(g.size(), -2);
  std::deque<std::size_t> q;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (from.inside[i] && !wall.inside[i]) {
      parent[i] = -1;
      q.push_back(i);
    }
  }
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop_front();
    if (to.inside[i]) {
      std::vector<std::size_t> path;
      for (long k = static_cast<long>(i); k >= 0; k = parent[static_cast<std::size_t>(k)])
        path.push_back(static_cast<std::size_t>(k));
      std::reverse(path.begin(), path.end());
      return path;
    }
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (parent[j] == -2 && !wall.inside[j]) {
        parent[j] = static_cast<long>(i);
        q.push_back(j);
      }
    });
  }
  return {};
}

}  // namespace detail

/// M = crossing nodes of h - c (the endpoint nearer the level on each sign-changing edge) ∪ contact set.
inline SeparatorResult extract_separator(const SeparatorProblem& prob, const ScalarField& h, double c = 0.0) {
  const Grid& g = prob.grid;
  SeparatorResult out;
  out.level = regular_level(prob, h, c);
  out.M = prob.contact;
  out.M.representation = Representation::ZeroSet;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = h.values[i] - out.level;
    if (a == 0.0) {
      out.M.inside[i] = 1;
      continue;
    }
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      const double bj = h.values[j] - out.level;
      if (a * bj < 0.0 && (std::abs(a) < std::abs(bj) || (std::abs(a) == std::abs(bj) && i < j))) out.M.inside[i] = 1;
    });
  }
  const auto path = detail::leak_path(prob.maskX, prob.maskY, out.M);
  if (!path.empty()) {
    std::ostringstream os;
    os << "M does not separate the sets; leak path through " << path.size() << " nodes from ("
       << g.position(path.front()).transpose() << ") to (" << g.position(path.back()).transpose() << ")";
    throw Error(ErrorKind::Separation, os.str());
  }
  out.separates = true;
  out.distX = set_distance(prob.maskX, out.M).value;
  out.distY = set_distance(prob.maskY, out.M).value;
  return out;
}

struct NormalContinuityReport {
  bool contactEmpty = true;
  double maxAngleDeg = 0.0;
  std::size_t nodesChecked = 0;
};

/// Angle between grad h and the unit direction from X to Y (grad dist_X - grad dist_Y) at nodes
/// of M within `radius` of the contact set.
inline NormalContinuityReport normal_continuity_report(const ClosedSetMask& M, const ScalarField& h,
                                                       const SeparatorProblem& prob, double radius = 0.0) {
  const Grid& g = prob.grid;
  const double sp = g.spacing();
  const double reach = radius > 0.0 ? radius : 3.0 * sp;
  NormalContinuityReport out;
  out.contactEmpty = prob.contact.empty();
  if (out.contactEmpty) return out;
  const auto dz = distance_transform(prob.contact);
  auto grad = [&](const ScalarField& f, std::size_t i, Vec& gv) {
    const auto c = g.coords(i);
    gv = Vec::Zero(g.dim());
    for (int a = 0; a < g.dim(); ++a) {
      if (c[a] == 0 || c[a] == g.counts()[a] - 1) return false;
      const auto s = static_cast<std::size_t>(g.stride(a));
      gv[a] = (f.values[i + s] - f.values[i - s]) / (2.0 * sp);
    }
    return true;
  };
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!M.inside[i] || dz.field.values[i] > reach) continue;
    Vec gh, gx, gy;
    if (!grad(h, i, gh) || !grad(prob.distX, i, gx) || !grad(prob.distY, i, gy)) continue;
    const Vec v = gx - gy;
    if (gh.norm() < 1e-12 || v.norm() < 1e-12) continue;
    const double cosang = std::clamp(gh.normalized().dot(v.normalized()), -1.0, 1.0);
    out.maxAngleDeg = std::max(out.maxAngleDeg, std::acos(cosang) * 180.0 / std::numbers::pi);
    ++out.nodesChecked;
  }
  return out;
}

struct SeparatorSweepStep {
  double delta = 0.0;
  SeparatorResult result;
  HarmonicSolution solution;
};

/// Solves and extracts for delta, delta/2, delta/4 (delta <= 0 means r/4).
inline std::vector<SeparatorSweepStep> separator_delta_sweep(const ClosedSetMask& maskX, const ClosedSetMask& maskY,
                                                             double delta = 0.0, const SignedDistance* sdX = nullptr,
                                                             const SignedDistance* sdY = nullptr, double c = 0.0) {
  std::vector<SeparatorSweepStep> out;
  double d = delta;
  for (int k = 0; k < 3; ++k) {
    const auto prob = make_separator_problem(maskX, maskY, d, sdX, sdY);
    if (k == 0) d = prob.delta;
    SeparatorSweepStep s;
    s.delta = prob.delta;
    s.solution = solve_harmonic(prob);
    s.result = extract_separator(prob, s.solution.h, c);
    out.push_back(std::move(s));
    d *= 0.5;
  }
  return out;
}

struct SeparatorCheck {
  std::vector<TheoremCheckReport> reports;  ///< separation, equidistance, distance to r, normal continuity
  std::vector<SeparatorSweepStep> sweep;
  SeparatorProblem finalProblem;
};

/// Delta sweep, then the separator properties on the last (smallest delta) step.
inline SeparatorCheck check_separator(const ClosedSetMask& maskX, const ClosedSetMask& maskY,
                                      const SignedDistance* sdX = nullptr, const SignedDistance* sdY = nullptr,
                                      double maxAngleDeg = 15.0) {
  detail::Stopwatch sw;
  SeparatorCheck out;
  out.sweep = separator_delta_sweep(maskX, maskY, 0.0, sdX, sdY);
  const auto& last = out.sweep.back();
  out.finalProblem = make_separator_problem(maskX, maskY, last.delta, sdX, sdY);
  const auto& prob = out.finalProblem;
  const double h = prob.grid.spacing();
  const double elapsed = sw.seconds();
  auto make = [&](const char* label, double margin, double tol, const std::string& detail) {
    TheoremCheckReport r;
    r.theoremId = TheoremId::Separator;
    r.label = label;
    r.margin = margin;
    r.tolerance = tol;
    r.detail = detail;
    r.finalize();
    r.runtimeSeconds = elapsed;
    out.reports.push_back(r);
  };
  std::ostringstream os;
  os << "delta sweep";
  for (const auto& st : out.sweep) os << ' ' << st.delta << " (" << st.solution.iterations << " it)";
  // extract_separator throws on a leak, so reaching here means the flood fill proved separation
  make("separation", last.result.separates ? 0.0 : -1.0, 0.0, os.str());
  os.str("");
  os << "dist(X,M) " << last.result.distX << " dist(Y,M) " << last.result.distY;
  make("equidistance", -std::abs(last.result.distX - last.result.distY), 3.0 * h, os.str());
  os.str("");
  os << "r " << prob.r << " dist(X,M) " << last.result.distX << " dist(Y,M) " << last.result.distY;
  make("distance-to-r", -std::max(std::abs(last.result.distX - prob.r), std::abs(last.result.distY - prob.r)),
       3.0 * h, os.str());
  const auto nc = normal_continuity_report(last.result.M, last.solution.h, prob);
  os.str("");
  if (nc.contactEmpty) {
    os << "contact set empty";
  } else {
    os << "max angle " << nc.maxAngleDeg << " deg over " << nc.nodesChecked << " nodes";
  }
  make("normal-continuity", nc.contactEmpty ? 0.0 : maxAngleDeg - nc.maxAngleDeg, 0.0, os.str());
  return out;
}

/// Concentric circles (X the disk of radius a, Y outside radius b, both about c): h against the
/// log-radial closed form on U, within 2% of the unit amplitude of the boundary data.
inline TheoremCheckReport check_annulus_profile(const SeparatorProblem& prob, const HarmonicSolution& sol, const Vec& c,
                                                double a, double b) {
  const Grid& g = prob.grid;
  const double inner = a + prob.r - prob.delta, outer = b - (prob.r - prob.delta);
  TheoremCheckReport r;
  r.theoremId = TheoremId::Separator;
  r.label = "annulus-log-profile";
  r.tolerance = 0.0;
  if (!(inner < outer)) throw Error(ErrorKind::Precondition, "annulus profile needs two concentric circles");
  const double A = 2.0 / std::log(outer / inner), B = -1.0 - A * std::log(inner);
  double worst = 0.0;
  Vec where;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!prob.U.inside[i]) continue;
    const Vec x = g.position(i);
    const double e = std::abs(sol.h.values[i] - (A * std::log((x - c).norm()) + B));
    if (e > worst) {
      worst = e;
      where = x;
    }
  }
  r.observe(0.02 - worst, 0.0, where);
  std::ostringstream os;
  os << "max |h - (a ln r + b)| " << worst << " on radii [" << inner << ", " << outer << "]";
  r.detail = os.str();
  r.finalize();
  return r;
}

}  // namespace mcflab

#endif  // MCFLAB_SEPARATOR_HPP
