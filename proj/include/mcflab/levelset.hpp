#ifndef MCFLAB_LEVELSET_HPP
#define MCFLAB_LEVELSET_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mcflab/barrier.hpp"
#include "mcflab/distance.hpp"
#include "mcflab/grid.hpp"

namespace mcflab {

/// Discretisation controls for the level set solver. Zero-valued lengths mean "use the default".
struct FlowParams {
  double epsReg = 0.0;      ///< gradient regularisation; default h^2
  double cfl = 0.2;         ///< dt = cfl h^2 / (2 dim), and dt <= cfl h / chi with transport
  int reinitEvery = 20;     ///< steps between reinitialisations; 0 disables
  double bandWidth = 0.0;   ///< narrow band half width; default 8h
  double maxTime = 0.0;
  double sampleInterval = 0.0;  ///< spacing of recorded samples; default maxTime / 50
  Representation representation = Representation::Sublevel;
  double level = 0.0;
  bool stopAtExtinction = true;
  int activeRefresh = 20;  ///< steps between rebuilds of the active node list

  [[nodiscard]] double eps(const Grid& g) const { return epsReg > 0.0 ? epsReg : g.spacing() * g.spacing(); }
  [[nodiscard]] double band(const Grid& g) const { return bandWidth > 0.0 ? bandWidth : 8.0 * g.spacing(); }
  [[nodiscard]] double interval() const {
    if (sampleInterval > 0.0) return sampleInterval;
    return maxTime > 0.0 ? maxTime / 50.0 : 1.0;
  }

  void validate(const Grid& g) const {
    if (!(cfl > 0.0 && cfl <= 0.5)) throw Error(ErrorKind::Precondition, "cfl must lie in (0, 0.5]");
    if (epsReg < 0.0) throw Error(ErrorKind::Precondition, "epsReg must be positive");
    if (band(g) < 4.0 * g.spacing() - 1e-15) throw Error(ErrorKind::Precondition, "bandWidth must be at least 4h");
    if (maxTime < 0.0) throw Error(ErrorKind::Precondition, "maxTime must be non-negative");
    if (activeRefresh < 1) throw Error(ErrorKind::Precondition, "activeRefresh must be positive");
  }

  /// Stable step for the given transport bound chi.
  [[nodiscard]] double time_step(const Grid& g, double chi) const {
    const double h = g.spacing();
    double dt = cfl * h * h / (2.0 * g.dim());
    if (chi > 0.0) dt = std::min(dt, cfl * h / chi);
    return dt;
  }
};

struct FlowLogRow {
  double time = 0.0;
  double volume = 0.0;            ///< area / volume of the sublevel set
  double interfaceMeasure = 0.0;  ///< length / area of the zero set (smeared delta estimate)
  std::vector<double> probeDistances;
};

/// Optional per-sample diagnostics and field dumps collected during evolve.
struct FlowLog {
  std::vector<std::string> probeNames;
  std::vector<ClosedSetMask> probes;
  std::vector<FlowLogRow> rows;
  int dumpEvery = 0;
  std::function<void(const ScalarField&, long step)> dump;

  void write_csv(std::ostream& os) const {
    os << "time,volume,interface_measure";
    for (const auto& n : probeNames) os << ",dist_" << n;
    os << '\n';
    os.precision(12);
    for (const auto& r : rows) {
      os << r.time << ',' << r.volume << ',' << r.interfaceMeasure;
      for (double d : r.probeDistances) os << ',' << d;
      os << '\n';
    }
  }
};

namespace detail {

inline double smeared_interface_measure(const ScalarField& u, double level) {
  const Grid& g = u.grid;
  const double h = g.spacing();
  const double w = 1.5 * h;
  double cell = 1.0;
  for (int a = 0; a < g.dim(); ++a) cell *= h;
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double phi = u.values[i] - level;
    if (std::abs(phi) >= w || g.on_face(i)) continue;
    double g2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      const auto s = static_cast<std::size_t>(g.stride(a));
      const double d = (u.values[i + s] - u.values[i - s]) / (2.0 * h);
      g2 += d * d;
    }
    total += (1.0 + std::cos(std::numbers::pi * phi / w)) / (2.0 * w) * std::sqrt(g2) * cell;
  }
  return total;
}

inline FlowLogRow log_row(const ScalarField& u, double level, const FlowLog& log) {
  FlowLogRow row;
  row.time = u.time;
  const ClosedSetMask m = sublevel_mask(u, level);
  double cell = 1.0;
  for (int a = 0; a < u.grid.dim(); ++a) cell *= u.grid.spacing();
  row.volume = static_cast<double>(m.count()) * cell;
  row.interfaceMeasure = smeared_interface_measure(u, level);
  for (const auto& p : log.probes) row.probeDistances.push_back(set_distance(m, p).value);
  return row;
}

// Central gradient with one-sided differences on the box faces.
inline void node_gradient(const ScalarField& u, std::size_t i, double* grad) {
  const Grid& g = u.grid;
  const double h = g.spacing();
  const auto c = g.coords(i);
  for (int a = 0; a < g.dim(); ++a) {
    const auto s = static_cast<std::size_t>(g.stride(a));
    if (c[a] == 0) {
      grad[a] = (u.values[i + s] - u.values[i]) / h;
    } else if (c[a] == g.counts()[a] - 1) {
      grad[a] = (u.values[i] - u.values[i - s]) / h;
    } else {
      grad[a] = (u.values[i + s] - u.values[i - s]) / (2.0 * h);
    }
  }
}

/// Central-difference Hessian at node i (row-major dim x dim); zero at box faces.
inline void node_hessian(const ScalarField& u, std::size_t i, double* hess) {
  const Grid& g = u.grid;
  const double h = g.spacing();
  const auto c = g.coords(i);
  const int dim = g.dim();
  for (int k = 0; k < dim * dim; ++k) hess[k] = 0.0;
  for (int a = 0; a < dim; ++a)
    if (c[a] == 0 || c[a] == g.counts()[a] - 1) return;
  const double* v = u.values.data();
  for (int a = 0; a < dim; ++a) {
    const auto sa = static_cast<std::size_t>(g.stride(a));
    hess[a * dim + a] = (v[i + sa] - 2.0 * v[i] + v[i - sa]) / (h * h);
    for (int b = a + 1; b < dim; ++b) {
      const auto sb = static_cast<std::size_t>(g.stride(b));
      const double uab = (v[i + sa + sb] - v[i + sa - sb] - v[i - sa + sb] + v[i - sa - sb]) / (4.0 * h * h);
      hess[a * dim + b] = hess[b * dim + a] = uab;
    }
  }
}

}  // namespace detail

/// Rebuilds u - level as a signed distance to its zero crossing inside a band; values beyond the
/// band are clamped to +-(bandWidth + 2h). Crossing locations move by well under half a cell.
inline ScalarField reinitialize(const ScalarField& u, double bandWidth = 0.0, double level = 0.0) {
  const Grid& g = u.grid;
  const double h = g.spacing();
  const int dim = g.dim();
  const double band = bandWidth > 0.0 ? bandWidth : 8.0 * h;
  const double cap = band + 2.0 * h;
  const int reach = static_cast<int>(std::ceil(cap / h));
  const auto& n = g.counts();

  ScalarField out(g, 0.0, u.time);
  std::vector<double> mag(g.size(), cap);
  std::vector<std::int32_t> owner(g.size(), -1);

  struct Foot {
    std::size_t node;
    double off[3];
    double normal[3];
    double shape[9];  // Hessian over |grad u|, a stand-in for the shape operator on tangent vectors
  };
  std::vector<Foot> feet;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = u.values[i] - level;
    bool crossing = (a == 0.0);
    double intercept[3] = {0.0, 0.0, 0.0};  // signed inverse intercepts per axis
    const auto c = g.coords(i);
    for (int ax = 0; ax < dim; ++ax) {
      const auto s = static_cast<std::size_t>(g.stride(ax));
      double best = std::numeric_limits<double>::infinity();
      int dir = 0;
      if (c[ax] > 0) {
        const double b = u.values[i - s] - level;
        if (a * b < 0.0 || (b == 0.0 && a != 0.0)) {
          const double frac = a / (a - b) * h;
          if (frac < best) { best = frac; dir = -1; }
        }
      }
      if (c[ax] + 1 < n[ax]) {
        const double b = u.values[i + s] - level;
        if (a * b < 0.0 || (b == 0.0 && a != 0.0)) {
          const double frac = a / (a - b) * h;
          if (frac < best) { best = frac; dir = +1; }
        }
      }
      if (dir != 0) {
        crossing = true;
        intercept[ax] = dir / std::max(best, 1e-300);
      }
    }
    if (!crossing) continue;
    Foot f{i, {0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}, {}};
    if (a != 0.0) {
      double grad[3];
      detail::node_gradient(u, i, grad);
      double gn = 0.0;
      for (int ax = 0; ax < dim; ++ax) gn += grad[ax] * grad[ax];
      gn = std::sqrt(gn);
      double d = gn > 1e-12 ? a / gn : std::numeric_limits<double>::infinity();
      if (std::isfinite(d)) {
        // root of the quadratic model a - gn s + q s^2 / 2 along the normal
        double nrm[3] = {0.0, 0.0, 0.0};
        for (int ax = 0; ax < dim; ++ax) nrm[ax] = grad[ax] / gn;
        detail::node_hessian(u, i, f.shape);
        double q = 0.0;
        for (int r = 0; r < dim; ++r)
          for (int k = 0; k < dim; ++k) q += nrm[r] * f.shape[r * dim + k] * nrm[k];
        for (int k = 0; k < dim * dim; ++k) f.shape[k] /= gn;
        const double disc = gn * gn - 2.0 * q * a;
        if (disc > 0.0) d = 2.0 * a / (gn + std::sqrt(disc));
      }
      if (std::abs(d) <= h * std::sqrt(static_cast<double>(dim))) {
        for (int ax = 0; ax < dim; ++ax) {
          f.off[ax] = -d * grad[ax] / gn;
          f.normal[ax] = grad[ax] / gn;
        }
      } else {
        // locally planar interface through the axis intercepts
        double s2 = 0.0;
        for (int ax = 0; ax < dim; ++ax) s2 += intercept[ax] * intercept[ax];
        for (int ax = 0; ax < dim; ++ax) {
          f.off[ax] = intercept[ax] / s2;
          f.normal[ax] = intercept[ax] / std::sqrt(s2);
        }
      }
    }
    feet.push_back(f);
  }

  if (feet.empty()) {
    for (std::size_t i = 0; i < g.size(); ++i)
      out.values[i] = level + (u.values[i] - level < 0.0 ? -cap : cap);
    return out;
  }

  for (std::size_t fi = 0; fi < feet.size(); ++fi) {
    const auto& f = feet[fi];
    const auto c = g.coords(f.node);
    int lo[3] = {0, 0, 0}, hi[3] = {0, 0, 0};
    for (int ax = 0; ax < dim; ++ax) {
      lo[ax] = std::max(0, c[ax] - reach);
      hi[ax] = std::min(n[ax] - 1, c[ax] + reach);
    }
    for (int k = lo[2]; k <= hi[2]; ++k) {
      const double dz = dim == 3 ? (k - c[2]) * h - f.off[2] : 0.0;
      for (int j = lo[1]; j <= hi[1]; ++j) {
        const double dy = (j - c[1]) * h - f.off[1];
        const double dyz = dy * dy + dz * dz;
        if (dyz >= cap * cap) continue;
        std::size_t idx = g.index(lo[0], j, k);
        for (int i = lo[0]; i <= hi[0]; ++i, ++idx) {
          const double dx = (i - c[0]) * h - f.off[0];
          const double d2 = dx * dx + dyz;
          if (d2 < mag[idx] * mag[idx]) {
            mag[idx] = std::sqrt(d2);
            owner[idx] = static_cast<std::int32_t>(fi);
          }
        }
      }
    }
  }
  // Distance to the tangent plane of the nearest foot removes the bias of point-to-point distances
  // when the lateral offset is small.
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (owner[i] < 0) continue;
    const Foot& f = feet[static_cast<std::size_t>(owner[i])];
    const auto c = g.coords(i), cf = g.coords(f.node);
    double r[3] = {0.0, 0.0, 0.0}, along = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
      r[ax] = (c[ax] - cf[ax]) * h - f.off[ax];
      along += r[ax] * f.normal[ax];
    }
    if (mag[i] * mag[i] - along * along > dim * h * h) continue;
    double bend = 0.0;
    for (int ax = 0; ax < dim; ++ax) r[ax] -= along * f.normal[ax];
    for (int ax = 0; ax < dim; ++ax)
      for (int k = 0; k < dim; ++k) bend += r[ax] * f.shape[ax * dim + k] * r[k];
    // fronts curved at grid scale (a collapsing blob) keep the Euclidean value
    if (std::abs(bend) > h) continue;
    mag[i] = std::min(cap, std::abs(along + 0.5 * bend));
  }
  // Nodes next to the interface take their own sub-cell estimate, but keep their value when it already
  // agrees; re-estimating a field that is already a distance lets round-off feed back and grow.
  for (const auto& f : feet) {
    double d2 = 0.0;
    for (int ax = 0; ax < dim; ++ax) d2 += f.off[ax] * f.off[ax];
    const double own = std::sqrt(d2), kept = std::abs(u.values[f.node] - level);
    mag[f.node] = std::abs(own - kept) <= 1e-3 * own ? kept : own;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double a = u.values[i] - level;
    out.values[i] = a == 0.0 ? level : level + (a < 0.0 ? -mag[i] : mag[i]);
  }
  return out;
}

/// Evolves u_t = |grad u| div(grad u / |grad u|) - X . grad u and records the spacetime track.
///
/// Box faces are frozen. When the initial interface keeps a band's distance from the faces the run
/// is treated as bounded and any sign change inside that margin aborts with DomainTooSmall.
inline SpacetimeTrack evolve(const ScalarField& u0, const AmbientField* X, const FlowParams& p,
                             FlowLog* log = nullptr) {
  const Grid& g = u0.grid;
  p.validate(g);
  if (!u0.all_finite()) throw Error(ErrorKind::Precondition, "initial field has non-finite values");
  if (X) X->validate_on(g);

  const int dim = g.dim();
  const double h = g.spacing();
  const double ih = 1.0 / h, ih2 = 1.0 / (h * h), iq = 1.0 / (4.0 * h * h);
  const double eps2 = p.eps(g) * p.eps(g);
  const double band = p.band(g);
  const double level = p.level;
  const std::size_t N = g.size();
  const bool transport = X && X->boundSupNorm > 0.0;
  const double dtMax = p.time_step(g, transport ? X->boundSupNorm : 0.0);
  const double interval = p.interval();
  std::ptrdiff_t st[3] = {g.stride(0), g.stride(1), g.stride(2)};

  std::vector<double> Xn;
  if (transport) {
    Xn.resize(N * static_cast<std::size_t>(dim));
    for (std::size_t i = 0; i < N; ++i) {
      const Vec x = X->X(g.position(i));
      for (int a = 0; a < dim; ++a) Xn[i * dim + a] = x[a];
    }
  }

  ScalarField u = u0;
  std::vector<double> next(N);

  // Margin bookkeeping for bounded runs.
  std::vector<std::size_t> marginNodes;
  for (std::size_t i = 0; i < N; ++i) {
    if (g.face_distance(i) < band) marginNodes.push_back(i);
  }
  bool bounded = true;
  for (const auto i : marginNodes) {
    const double a = u.values[i] - level;
    if (std::abs(a) <= h) bounded = false;
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (a * (u.values[j] - level) < 0.0) bounded = false;
    });
    if (!bounded) break;
  }
  std::vector<std::uint8_t> marginSign;
  if (bounded) {
    for (const auto i : marginNodes) marginSign.push_back(u.values[i] - level <= 0.0 ? 1 : 0);
  }

  std::vector<std::size_t> active;
  double inactiveMin = 0.0, inactiveMax = 0.0;
  auto refresh = [&]() {
    active.clear();
    inactiveMin = std::numeric_limits<double>::infinity();
    inactiveMax = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
      const double a = u.values[i] - level;
      if (std::abs(a) <= band && !g.on_face(i)) {
        active.push_back(i);
      } else {
        inactiveMin = std::min(inactiveMin, a);
        inactiveMax = std::max(inactiveMax, a);
      }
    }
    if (bounded) {
      for (std::size_t k = 0; k < marginNodes.size(); ++k) {
        const bool in = u.values[marginNodes[k]] - level <= 0.0;
        if (in != (marginSign[k] != 0))
          throw Error(ErrorKind::DomainTooSmall, "domain too small: the flow reached the frozen margin");
      }
    }
  };

  auto extinct = [&]() {
    double lo = inactiveMin, hi = inactiveMax;
    for (const auto i : active) {
      lo = std::min(lo, u.values[i] - level);
      hi = std::max(hi, u.values[i] - level);
    }
    if (p.representation == Representation::Sublevel) return lo > 1e-12;
    return lo > h || hi < -h;
  };

  SpacetimeTrack track;
  track.startTime = u0.time;
  track.timeStep = interval;
  track.representation = p.representation;
  track.level = level;
  track.samples.push_back({u.time, u});
  if (log) {
    log->rows.push_back(detail::log_row(u, level, *log));
    if (log->dump && log->dumpEvery > 0) log->dump(u, 0);
  }

  const double t0 = u0.time;
  const double tEnd = t0 + p.maxTime;
  long step = 0;
  long sampleIndex = 1;
  double blowLimit = 0.0;
  for (double v : u0.values) blowLimit = std::max(blowLimit, std::abs(v));
  blowLimit = 1e3 * (blowLimit + 1.0);

  refresh();
  if (extinct()) return track;

  while (u.time < tEnd - 1e-14) {
    const double nextSample = t0 + sampleIndex * interval;
    const double dt = std::min({dtMax, nextSample - u.time, tEnd - u.time});
    if (step % p.activeRefresh == 0 && step > 0) refresh();

    for (std::size_t n = 0; n < active.size(); ++n) {
      const std::size_t i = active[n];
      const double* q = &u.values[i];
      double grad[3], lap = 0.0, H[3][3];
      for (int a = 0; a < dim; ++a) {
        const double up = q[st[a]], dn = q[-st[a]];
        grad[a] = 0.5 * (up - dn) * ih;
        H[a][a] = (up - 2.0 * q[0] + dn) * ih2;
        lap += H[a][a];
      }
      for (int a = 0; a < dim; ++a) {
        for (int b = a + 1; b < dim; ++b) {
          H[a][b] = H[b][a] = (q[st[a] + st[b]] - q[st[a] - st[b]] - q[-st[a] + st[b]] + q[-st[a] - st[b]]) * iq;
        }
      }
      double g2 = 0.0, gHg = 0.0;
      for (int a = 0; a < dim; ++a) {
        g2 += grad[a] * grad[a];
        for (int b = 0; b < dim; ++b) gHg += grad[a] * H[a][b] * grad[b];
      }
      double rhs = lap - gHg / (g2 + eps2);
      if (transport) {
        const double* x = &Xn[i * dim];
        for (int a = 0; a < dim; ++a) {
          const double d = x[a] > 0.0 ? (q[0] - q[-st[a]]) * ih : (q[st[a]] - q[0]) * ih;
          rhs -= x[a] * d;
        }
      }
      next[n] = q[0] + dt * rhs;
    }
    for (std::size_t n = 0; n < active.size(); ++n) {
      const double v = next[n];
      if (!std::isfinite(v) || std::abs(v) > blowLimit)
        throw Error(ErrorKind::Instability, "level set solution blew up (CFL violation)");
      u.values[active[n]] = v;
    }
    ++step;
    u.time = (std::abs(u.time + dt - nextSample) < 1e-13) ? nextSample : u.time + dt;
    if (std::abs(u.time - tEnd) < 1e-13) u.time = tEnd;

    if (p.reinitEvery > 0 && step % p.reinitEvery == 0) {
      const double t = u.time;
      u = reinitialize(u, band, level);
      u.time = t;
      refresh();
    }
    if (log && log->dump && log->dumpEvery > 0 && step % log->dumpEvery == 0) log->dump(u, step);

    const bool gone = extinct();
    // the extinction step is recorded only when the run ends there; otherwise paired tracks drift apart
    const bool vanished = gone && p.stopAtExtinction;
    const bool atSample = u.time >= nextSample - 1e-13;
    if (atSample) ++sampleIndex;
    if (atSample || vanished || u.time >= tEnd - 1e-14) {
      track.samples.push_back({u.time, u});
      if (log) log->rows.push_back(detail::log_row(u, level, *log));
    }
    if (gone && p.stopAtExtinction) break;
  }
  return track;
}

/// Time of the first sample whose mask is empty; nullopt when the set survives the whole track.
inline std::optional<double> extinction_time(const SpacetimeTrack& track) {
  for (std::size_t k = 0; k < track.size(); ++k) {
    if (track.mask(k).empty()) return track.samples[k].time;
  }
  return std::nullopt;
}

/// First time the moving boundary of a mean-convex region passes each node.
struct ArrivalTimeField {
  Grid grid;
  std::vector<double> u;  ///< +infinity on nodes outside the domain or never reached
  ClosedSetMask domainMask;
  double continuityConstant = 0.0;  ///< max |u_i - u_j| / h over adjacent finite pairs

  [[nodiscard]] ClosedSetMask superlevel(double t) const {
    ClosedSetMask m(grid);
    for (std::size_t i = 0; i < u.size(); ++i) m.inside[i] = (domainMask.inside[i] && u[i] >= t) ? 1 : 0;
    return m;
  }

  /// {u = t}: nodes where u - t vanishes or changes sign across an edge inside the domain.
  [[nodiscard]] ClosedSetMask level(double t) const {
    ClosedSetMask m(grid, Representation::ZeroSet);
    for (std::size_t i = 0; i < u.size(); ++i) {
      if (!domainMask.inside[i]) continue;
      const double a = u[i] - t;
      if (std::abs(a) <= 1e-12) {
        m.inside[i] = 1;
        continue;
      }
      grid.for_each_neighbor(i, [&](std::size_t j, int, int) {
        if (domainMask.inside[j] && a * (u[j] - t) < 0.0 && std::abs(a) <= std::abs(u[j] - t)) m.inside[i] = 1;
      });
    }
    return m;
  }
};

/// Arrival times from a track by linear interpolation in time of each node's sign change.
inline ArrivalTimeField arrival_time(const SpacetimeTrack& track, const ClosedSetMask& Q0) {
  const Grid& g = track.grid();
  require_same_grid(g, Q0.grid, "arrival_time");
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double reentryTol = 0.05 * g.spacing();
  ArrivalTimeField out{g, std::vector<double>(g.size(), inf), Q0, 0.0};
  std::vector<std::size_t> offending;
  const double lvl = track.level;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!Q0.inside[i]) continue;
    double arrival = inf;
    for (std::size_t k = 0; k < track.size(); ++k) {
      const double b = track.samples[k].field.values[i] - lvl;
      if (std::isfinite(arrival)) {
        if (b < -reentryTol) {
          offending.push_back(i);
          break;
        }
        continue;
      }
      if (b > 0.0) {
        if (k == 0) {
          arrival = track.samples[0].time;
        } else {
          const double a = track.samples[k - 1].field.values[i] - lvl;
          const double t0 = track.samples[k - 1].time, t1 = track.samples[k].time;
          arrival = t0 + (t1 - t0) * (-a) / (b - a);
        }
      }
    }
    out.u[i] = arrival;
  }
  if (!offending.empty()) {
    std::ostringstream os;
    os << offending.size() << " node(s) re-entered the region after the front passed, e.g. node";
    for (std::size_t k = 0; k < std::min<std::size_t>(offending.size(), 5); ++k) os << ' ' << offending[k];
    throw Error(ErrorKind::NotMeanConvex, os.str());
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!std::isfinite(out.u[i])) continue;
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (std::isfinite(out.u[j]))
        out.continuityConstant = std::max(out.continuityConstant, std::abs(out.u[i] - out.u[j]) / g.spacing());
    });
  }
  return out;
}

struct ComposedFlows {
  ClosedSetMask direct;    ///< F_{s+t}(C)
  ClosedSetMask composed;  ///< F_t(F_s(C)) after re-extraction and re-distancing
};

/// Final mask of a flow started from the signed distance of a node set.
inline ClosedSetMask flow_mask(const ClosedSetMask& C, double duration, const AmbientField* X, FlowParams p) {
  ScalarField u0 = signed_distance_from_mask(C);
  if (duration <= 0.0) return sublevel_mask(u0, 0.0);
  p.maxTime = duration;
  p.level = 0.0;
  p.representation = Representation::Sublevel;
  const auto tr = evolve(u0, X, p);
  return tr.mask(tr.size() - 1);
}

inline ComposedFlows compose_flows(const ClosedSetMask& C, double s, double t, const AmbientField* X,
                                   const FlowParams& p) {
  if (s < 0.0 || t < 0.0) throw Error(ErrorKind::Precondition, "compose_flows needs non-negative times");
  ComposedFlows out;
  out.direct = flow_mask(C, s + t, X, p);
  out.composed = flow_mask(flow_mask(C, s, X, p), t, X, p);
  return out;
}

}  // namespace mcflab

#endif  // MCFLAB_LEVELSET_HPP
