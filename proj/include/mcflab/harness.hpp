#ifndef MCFLAB_HARNESS_HPP
#define MCFLAB_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcflab/barrier.hpp"
#include "mcflab/distance.hpp"
#include "mcflab/errors.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/levelset.hpp"

namespace mcflab {

enum class TheoremId {
  ShrinkingBall,
  FiniteSpeed,
  Compactness,
  KeyProposition,
  DistanceTheorem,
  LongTime,
  Avoidance,
  StrongBarrierEquiv,
  BoundaryFlow,
  Semigroup,
  Containment,
  Extinction,
  ArrivalTime,
  BrakkeInequality,
  Separator,
  BarrierCalculus,
  KuratowskiLimit,
};

inline const std::vector<std::pair<TheoremId, const char*>>& theorem_names() {
  static const std::vector<std::pair<TheoremId, const char*>> names = {
      {TheoremId::ShrinkingBall, "ShrinkingBall"},
      {TheoremId::FiniteSpeed, "FiniteSpeed"},
      {TheoremId::Compactness, "Compactness"},
      {TheoremId::KeyProposition, "KeyProposition"},
      {TheoremId::DistanceTheorem, "DistanceTheorem"},
      {TheoremId::LongTime, "LongTime"},
      {TheoremId::Avoidance, "Avoidance"},
      {TheoremId::StrongBarrierEquiv, "StrongBarrierEquiv"},
      {TheoremId::BoundaryFlow, "BoundaryFlow"},
      {TheoremId::Semigroup, "Semigroup"},
      {TheoremId::Containment, "Containment"},
      {TheoremId::Extinction, "Extinction"},
      {TheoremId::ArrivalTime, "ArrivalTime"},
      {TheoremId::BrakkeInequality, "BrakkeInequality"},
      {TheoremId::Separator, "Separator"},
      {TheoremId::BarrierCalculus, "BarrierCalculus"},
      {TheoremId::KuratowskiLimit, "KuratowskiLimit"},
  };
  return names;
}

inline const char* to_string(TheoremId id) {
  for (const auto& [k, v] : theorem_names())
    if (k == id) return v;
  return "?";
}

inline std::optional<TheoremId> theorem_from_string(const std::string& s) {
  for (const auto& [k, v] : theorem_names())
    if (s == v) return k;
  return std::nullopt;
}

/// Outcome of one executable check. margin = measured - nominal bound; passed iff margin >= -tolerance.
struct TheoremCheckReport {
  TheoremId theoremId = TheoremId::Avoidance;
  std::string label;
  bool passed = false;
  double margin = 0.0;
  double tolerance = 0.0;
  double witnessTime = 0.0;
  Vec witnessPoint;
  std::string detail;
  double runtimeSeconds = 0.0;
  std::vector<std::array<double, 2>> series;  ///< (time, measured quantity) when meaningful

  void finalize() { passed = margin >= -tolerance; }

  /// Keeps the worst margin seen so far together with its witness.
  void observe(double m, double t, const Vec& p = Vec()) {
    if (!observed_ || m < margin) {
      margin = m;
      witnessTime = t;
      witnessPoint = p;
      observed_ = true;
    }
  }
  [[nodiscard]] bool observed() const { return observed_; }

 private:
  bool observed_ = false;
};

namespace detail {

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

inline double lambda_for(const AmbientField* X, const Grid& g) {
  return X ? ricX_lower_bound(*X, g) : 0.0;
}

}  // namespace detail

/// Distance from a point to the set recorded in sample k (sub-cell where a crossing exists).
inline SetDistance track_point_distance(const SpacetimeTrack& tr, std::size_t k, const Vec& p) {
  const auto& u = tr.samples[k].field;
  const ClosedSetMask m = tr.mask(k);
  if (m.empty()) return {empty_sentinel(u.grid), true};
  if (tr.representation == Representation::Sublevel && m.inside[u.grid.nearest_node(p)]) return {0.0, false};
  double best = point_set_distance(m, p).value;
  for (const auto& q : interface_points(u, tr.level)) best = std::min(best, (q - p).norm());
  return {best, false};
}

/// Gap between the sets of two aligned samples; zero when their node masks meet.
inline SetDistance track_gap(const SpacetimeTrack& a, std::size_t ka, const SpacetimeTrack& b, std::size_t kb) {
  const ClosedSetMask ma = a.mask(ka), mb = b.mask(kb);
  if (ma.empty() || mb.empty()) return {empty_sentinel(ma.grid), true};
  if (masks_intersect(ma, mb)) return {0.0, false};
  const auto gap = interface_gap(a.samples[ka].field, b.samples[kb].field, a.level, b.level);
  if (gap.empty) return set_distance(ma, mb);
  return gap;
}

struct FlowPair {
  SpacetimeTrack y;
  SpacetimeTrack z;
};

/// Evolves two initial fields with identical sampling so their samples line up.
inline FlowPair evolve_pair(const ScalarField& y0, const ScalarField& z0, const AmbientField* X, FlowParams p) {
  p.stopAtExtinction = false;
  return {evolve(y0, X, p), evolve(z0, X, p)};
}

namespace detail {

inline void require_separated(const ScalarField& y0, const ScalarField& z0, double level) {
  const ClosedSetMask my = sublevel_mask(y0, level), mz = sublevel_mask(z0, level);
  if (my.empty() || mz.empty()) return;
  const double h = y0.grid.spacing();
  const auto d = interface_gap(y0, z0, level, level);
  if (masks_intersect(my, mz) || d.value <= 4.0 * h)
    throw Error(ErrorKind::Precondition, "initial sets must be more than 4h apart");
}

}  // namespace detail

/// Avoidance: two flows that start disjoint stay disjoint. margin = smallest gap.
inline TheoremCheckReport check_avoidance(const ScalarField& y0, const ScalarField& z0, const AmbientField* X,
                                          const FlowParams& p) {
  detail::Stopwatch sw;
  detail::require_separated(y0, z0, p.level);
  const FlowPair fp = evolve_pair(y0, z0, X, p);
  TheoremCheckReport r;
  r.theoremId = TheoremId::Avoidance;
  r.tolerance = 0.0;
  const std::size_t K = std::min(fp.y.size(), fp.z.size());
  for (std::size_t k = 0; k < K; ++k) {
    const auto gap = track_gap(fp.y, k, fp.z, k);
    if (gap.empty) continue;
    r.series.push_back({fp.y.samples[k].time, gap.value});
    r.observe(gap.value > 0.0 ? gap.value : -y0.grid.spacing(), fp.y.samples[k].time);
  }
  if (!r.observed()) r.observe(0.0, fp.y.samples.front().time);
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

inline TheoremCheckReport check_avoidance(const ClosedSetMask& y0, const ClosedSetMask& z0, const AmbientField* X,
                                          const FlowParams& p) {
  return check_avoidance(signed_distance_from_mask(y0), signed_distance_from_mask(z0), X, p);
}

/// Exponential distance bound dist(Y(t),Z(t)) >= e^{lambda t} (d0 - 4h) - 4h with lambda from Ric^X.
inline TheoremCheckReport check_exponential_distance(const ScalarField& y0, const ScalarField& z0,
                                                     const AmbientField* X, const FlowParams& p) {
  detail::Stopwatch sw;
  detail::require_separated(y0, z0, p.level);
  const Grid& g = y0.grid;
  const double h = g.spacing();
  const double lambda = detail::lambda_for(X, g);
  const FlowPair fp = evolve_pair(y0, z0, X, p);
  TheoremCheckReport r;
  r.theoremId = (X && !X->is_zero()) ? TheoremId::DistanceTheorem : TheoremId::LongTime;
  r.tolerance = 4.0 * h;
  const double t0 = fp.y.samples.front().time;
  const auto first = track_gap(fp.y, 0, fp.z, 0);
  const double d0 = first.value;
  for (std::size_t k = 0; k < std::min(fp.y.size(), fp.z.size()); ++k) {
    const auto gap = track_gap(fp.y, k, fp.z, k);
    if (gap.empty) continue;
    const double t = fp.y.samples[k].time;
    r.series.push_back({t, gap.value});
    r.observe(gap.value - std::exp(lambda * (t - t0)) * (d0 - 4.0 * h), t);
  }
  if (!r.observed()) r.observe(0.0, t0);
  std::ostringstream os;
  os << "lambda=" << lambda << " d0=" << d0;
  r.detail = os.str();
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Flow track against a strong barrier: K(t) and Z(t) must stay disjoint on the barrier interval.
inline TheoremCheckReport check_strong_barrier_avoidance(const SpacetimeTrack& track, const ImplicitBarrier& b,
                                                         const AmbientField* X) {
  detail::Stopwatch sw;
  const auto cls = classify_strong(b, X);
  if (!cls.strong) {
    std::ostringstream os;
    os << "barrier '" << b.name << "' is not strong (worst Phi " << cls.worstPhi << ")";
    throw Error(ErrorKind::Precondition, os.str());
  }
  const Grid& g = track.grid();
  const double h = g.spacing();
  TheoremCheckReport r;
  r.theoremId = TheoremId::StrongBarrierEquiv;
  r.tolerance = 0.0;
  bool first = true;
  for (std::size_t k = 0; k < track.size(); ++k) {
    const double t = track.samples[k].time;
    if (!b.covers(t)) continue;
    const ClosedSetMask K = barrier_mask(b, g, t), Z = track.mask(k);
    const auto d = set_distance(K, Z);
    if (first) {
      first = false;
      if (!d.empty && d.value <= 4.0 * h)
        throw Error(ErrorKind::Precondition, "barrier must start more than 4h away from the flow");
    }
    if (d.empty) continue;
    r.series.push_back({t, d.value});
    if (masks_intersect(K, Z)) {
      const auto both = mask_intersection(K, Z).nodes();
      r.observe(-h, t, g.position(both.front()));
    } else {
      r.observe(d.value, t);
    }
  }
  if (!r.observed()) r.observe(0.0, b.a);
  r.detail = "barrier " + b.name;
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Contact test for barriers that are not strong: at the first contact, Phi^X at the touching
/// boundary points must be >= -tol. No contact passes vacuously.
inline TheoremCheckReport check_weak_barrier_contact(const SpacetimeTrack& track, const ImplicitBarrier& b,
                                                     const AmbientField* X, double tol = 1e-6) {
  detail::Stopwatch sw;
  const Grid& g = track.grid();
  TheoremCheckReport r;
  r.theoremId = TheoremId::StrongBarrierEquiv;
  r.tolerance = tol;
  for (std::size_t k = 0; k < track.size(); ++k) {
    const double t = track.samples[k].time;
    if (!b.covers(t)) continue;
    const ClosedSetMask K = barrier_mask(b, g, t), Z = track.mask(k);
    if (!masks_intersect(K, Z)) continue;
    double best = -std::numeric_limits<double>::infinity();
    Vec where;
    for (const auto i : mask_intersection(K, Z).nodes()) {
      const auto q = project_to_boundary(b, g.position(i), t);
      if (!q) continue;
      const auto rep = eval_barrier(b, *q, t, X);
      if (rep.PhiX > best) {
        best = rep.PhiX;
        where = *q;
      }
    }
    if (std::isfinite(best)) {
      r.observe(best, t, where);
      r.detail = "first contact";
    }
    break;
  }
  if (!r.observed()) {
    r.observe(0.0, b.a);
    r.detail = "no contact";
  }
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Strong shrinking balls seeded at random samples of the track, away from Z(t_k).
/// When a region field is supplied, seeds alternate between its inside and outside.
inline std::vector<ImplicitBarrier> strong_barrier_panel(const SpacetimeTrack& track, int count, unsigned seed,
                                                         double maxRadius = 0.3,
                                                         const ScalarField* region = nullptr) {
  const Grid& g = track.grid();
  const double h = g.spacing();
  std::mt19937 rng(seed);
  std::vector<ImplicitBarrier> out;
  std::vector<std::size_t> usable;
  for (std::size_t k = 0; k + 1 < track.size(); ++k)
    if (!track.mask(k).empty()) usable.push_back(k);
  if (usable.empty()) return out;
  for (int attempt = 0; attempt < 40 * count && static_cast<int>(out.size()) < count; ++attempt) {
    const std::size_t k = usable[std::uniform_int_distribution<std::size_t>(0, usable.size() / 2)(rng)];
    const auto dist = distance_transform(track.mask(k));
    const bool wantInside = region && (out.size() % 2 == 0);
    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (dist.field.values[i] < 12.0 * h || g.face_distance(i) < 2.0 * maxRadius) continue;
      if (region && ((region->values[i] < 0.0) != wantInside)) continue;
      cand.push_back(i);
    }
    if (cand.empty()) continue;
    const std::size_t i = cand[std::uniform_int_distribution<std::size_t>(0, cand.size() - 1)(rng)];
    const double delta = std::min(maxRadius, 0.5 * dist.field.values[i]);
    if (delta < 4.0 * h) continue;
    auto b = strong_shrinking_ball(g.position(i), delta, track.samples[k].time, 1.0, 0.95);
    b.name = "strong-ball#" + std::to_string(out.size());
    out.push_back(std::move(b));
  }
  return out;
}

/// Runs the strong-barrier test for every panel member; margin is the worst over the panel.
inline TheoremCheckReport check_barrier_panel(const SpacetimeTrack& track, const std::vector<ImplicitBarrier>& panel,
                                              const AmbientField* X, TheoremId id) {
  detail::Stopwatch sw;
  TheoremCheckReport r;
  r.theoremId = id;
  r.tolerance = 0.0;
  int contacts = 0;
  for (const auto& b : panel) {
    const auto one = check_strong_barrier_avoidance(track, b, X);
    if (!one.passed) ++contacts;
    r.observe(one.margin, one.witnessTime, one.witnessPoint);
  }
  if (!r.observed()) r.observe(0.0, 0.0);
  std::ostringstream os;
  os << panel.size() << " barriers, " << contacts << " contacts";
  r.detail = os.str();
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Boundary flow: the ZeroSet track of the evolving region must avoid a panel of strong barriers.
inline TheoremCheckReport check_boundary_flow(const ScalarField& region0, const AmbientField* X, const FlowParams& p,
                                              int panelSize = 6, unsigned seed = 1) {
  detail::Stopwatch sw;
  FlowParams q = p;
  q.representation = Representation::Sublevel;
  SpacetimeTrack boundary = evolve(region0, X, q);
  boundary.representation = Representation::ZeroSet;
  const auto panel = strong_barrier_panel(boundary, panelSize, seed, 0.3, &region0);
  if (static_cast<int>(panel.size()) < panelSize)
    throw Error(ErrorKind::Precondition, "could not seed enough strong barriers away from the boundary");
  auto r = check_barrier_panel(boundary, panel, X, TheoremId::BoundaryFlow);
  r.runtimeSeconds = sw.seconds();
  return r;
}

struct ContainmentResult {
  TheoremCheckReport report;
  SpacetimeTrack track;  ///< the single solve; level tracks are views with another level
  std::vector<std::pair<double, double>> unresolvedPairs;
};

/// One solve from u0, level tracks {u = a} pairwise disjoint, and the zero level matching a direct
/// biggest-flow run of the zero sublevel within one cell (Hausdorff of region masks).
inline ContainmentResult check_containment_levels(const ScalarField& u0, const std::vector<double>& levels,
                                                  const AmbientField* X, const FlowParams& p) {
  detail::Stopwatch sw;
  const Grid& g = u0.grid;
  const double h = g.spacing();
  for (double a : levels)
    if (std::abs(a) > 0.5 * p.band(g) + 1e-12)
      throw Error(ErrorKind::OutOfInterval, "level " + std::to_string(a) + " lies outside +-bandWidth/2");
  FlowParams q = p;
  q.level = 0.0;
  q.stopAtExtinction = false;
  q.representation = Representation::Sublevel;
  ContainmentResult out;
  // Reinitialisation only keeps the zero level faithful and a narrow band freezes stale values
  // next to the other levels, so the single solve covers the whole box without it.
  q.reinitEvery = 0;
  q.bandWidth = g.diameter();
  out.track = evolve(u0, X, q);
  auto& r = out.report;
  r.theoremId = TheoremId::Containment;
  r.tolerance = 0.0;

  auto levelTrack = [&](double a) {
    SpacetimeTrack t = out.track;
    t.level = a;
    t.representation = Representation::ZeroSet;
    return t;
  };
  std::vector<SpacetimeTrack> tracks;
  for (double a : levels) tracks.push_back(levelTrack(a));
  for (std::size_t i = 0; i < levels.size(); ++i) {
    for (std::size_t j = i + 1; j < levels.size(); ++j) {
      if (std::abs(levels[i] - levels[j]) <= 2.0 * h) {
        out.unresolvedPairs.emplace_back(levels[i], levels[j]);
        continue;
      }
      for (std::size_t k = 0; k < out.track.size(); ++k) {
        const ClosedSetMask a = tracks[i].mask(k), b = tracks[j].mask(k);
        if (a.empty() || b.empty()) continue;
        if (masks_intersect(a, b)) {
          r.observe(-h, out.track.samples[k].time);
        } else {
          r.observe(set_distance(a, b).value, out.track.samples[k].time);
        }
      }
    }
  }

  // Zero level against the biggest flow computed directly from the node set.
  if (std::find(levels.begin(), levels.end(), 0.0) != levels.end()) {
    FlowParams d = p;
    d.level = 0.0;
    d.stopAtExtinction = false;
    d.representation = Representation::Sublevel;
    const auto direct = evolve(signed_distance_from_mask(sublevel_mask(u0)), X, d);
    double worst = 0.0, worstT = 0.0;
    for (std::size_t k = 0; k < std::min(direct.size(), out.track.size()); ++k) {
      const auto hd = hausdorff_distance(direct.mask(k), out.track.mask(k));
      if (hd.value > worst) {
        worst = hd.value;
        worstT = direct.samples[k].time;
      }
    }
    // "within one cell": node masks may differ by a cell diagonal
    r.observe(h * std::sqrt(static_cast<double>(g.dim())) * (1.0 + 1e-9) - worst, worstT);
    r.series.push_back({worstT, worst});
  }
  if (!r.observed()) r.observe(0.0, u0.time);
  std::ostringstream os;
  os << levels.size() << " levels, " << out.unresolvedPairs.size() << " unresolved pair(s)";
  r.detail = os.str();
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return out;
}

/// min(eps, dist(Z(t),p))^2 + c t nondecreasing in t up to slack, with c = 2m + 0.5.
inline TheoremCheckReport check_shrinking_ball(const SpacetimeTrack& track, const std::vector<Vec>& probes,
                                               double eps, double slack) {
  detail::Stopwatch sw;
  const int m = track.grid().dim() - 1;
  const double c = 2.0 * m + 0.5;
  TheoremCheckReport r;
  r.theoremId = TheoremId::ShrinkingBall;
  r.tolerance = slack;
  int violations = 0;
  for (const auto& p : probes) {
    double runningMax = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < track.size(); ++k) {
      const double t = track.samples[k].time;
      const auto d = track_point_distance(track, k, p);
      const double f = std::min(eps, d.value);
      const double val = f * f + c * t;
      if (std::isfinite(runningMax)) {
        const double m0 = val - runningMax;
        if (m0 < -slack) ++violations;
        r.observe(m0, t, p);
      }
      runningMax = std::max(runningMax, val);
    }
  }
  if (!r.observed()) r.observe(0.0, 0.0);
  r.detail = std::to_string(probes.size()) + " probes, " + std::to_string(violations) + " violations";
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Backward bound dist(Z(t),p)^2 <= c (T - t) for probes p in Z(T), c = 2m + 0.5.
inline TheoremCheckReport check_backward_ball(const SpacetimeTrack& track, std::size_t kT, const std::vector<Vec>& probes,
                                              double slack) {
  detail::Stopwatch sw;
  const int m = track.grid().dim() - 1;
  const double c = 2.0 * m + 0.5;
  const double T = track.samples.at(kT).time;
  TheoremCheckReport r;
  r.theoremId = TheoremId::ShrinkingBall;
  r.tolerance = slack;
  for (const auto& p : probes) {
    if (track_point_distance(track, kT, p).value > 0.0) continue;
    for (std::size_t k = 0; k <= kT; ++k) {
      const auto d = track_point_distance(track, k, p);
      if (d.empty) continue;
      const double t = track.samples[k].time;
      r.observe(c * (T - t) - d.value * d.value, t, p);
    }
  }
  if (!r.observed()) r.observe(0.0, T);
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// dist(Z(t),p) >= R - (2m/r + chi) t - 4h for t <= (R - r)/(2m/r + chi).
inline TheoremCheckReport check_finite_speed(const SpacetimeTrack& track, const Vec& p, double R, double r,
                                             double chi) {
  detail::Stopwatch sw;
  if (!(r > 0.0 && r < R)) throw Error(ErrorKind::Precondition, "finite speed needs 0 < r < R");
  const Grid& g = track.grid();
  const int m = g.dim() - 1;
  const double speed = finite_speed_bound(r, m) + chi;
  const double t0 = track.samples.front().time;
  const auto d0 = track_point_distance(track, 0, p);
  if (!d0.empty && d0.value <= R) throw Error(ErrorKind::Precondition, "probe must start farther than R from Z(0)");
  TheoremCheckReport out;
  out.theoremId = TheoremId::FiniteSpeed;
  out.tolerance = 4.0 * g.spacing();
  const double window = (R - r) / speed;
  for (std::size_t k = 0; k < track.size(); ++k) {
    const double t = track.samples[k].time - t0;
    if (t > window + 1e-12) break;
    const auto d = track_point_distance(track, k, p);
    if (d.empty) continue;
    out.series.push_back({t, d.value});
    out.observe(d.value - (R - speed * t), track.samples[k].time, p);
  }
  if (!out.observed()) out.observe(0.0, t0);
  std::ostringstream os;
  os << "speed bound " << speed << " over window " << window;
  out.detail = os.str();
  out.finalize();
  out.runtimeSeconds = sw.seconds();
  return out;
}

/// An empty initial set stays empty.
inline TheoremCheckReport check_compactness(const Grid& g, const AmbientField* X, const FlowParams& p) {
  detail::Stopwatch sw;
  const ScalarField u0 = signed_distance_from_mask(ClosedSetMask(g));
  FlowParams q = p;
  q.stopAtExtinction = false;
  const auto tr = evolve(u0, X, q);
  TheoremCheckReport r;
  r.theoremId = TheoremId::Compactness;
  r.tolerance = 0.0;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const auto n = tr.mask(k).count();
    r.observe(-static_cast<double>(n) * g.spacing(), tr.samples[k].time);
  }
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Semigroup: Hausdorff(F_{s+t}(C), F_t(F_s(C))) within 3h.
inline TheoremCheckReport check_semigroup(const ClosedSetMask& C, double s, double t, const AmbientField* X,
                                          const FlowParams& p) {
  detail::Stopwatch sw;
  const auto cf = compose_flows(C, s, t, X, p);
  TheoremCheckReport r;
  r.theoremId = TheoremId::Semigroup;
  r.tolerance = 3.0 * C.grid.spacing();
  const auto hd = hausdorff_distance(cf.direct, cf.composed);
  r.observe(-hd.value, s + t);
  r.series.push_back({s + t, hd.value});
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Extinction time against an expected value.
inline TheoremCheckReport check_extinction(const SpacetimeTrack& track, double expected, double tol) {
  TheoremCheckReport r;
  r.theoremId = TheoremId::Extinction;
  r.tolerance = tol;
  const auto T = extinction_time(track);
  if (!T) {
    r.observe(-std::numeric_limits<double>::infinity(), track.end_time());
    r.detail = "survived";
  } else {
    r.observe(-std::abs(*T - expected), *T);
    std::ostringstream os;
    os << std::setprecision(10) << "extinction " << *T;
    r.detail = os.str();
    r.series.push_back({*T, *T - expected});
  }
  r.finalize();
  return r;
}

/// Midsurface half gaps: dist(Y(t),M(t)) and dist(Z(t),M(t)) stay above e^{lambda t} eta / 2 - 4h,
/// where M is evolved from its own level set field (ZeroSet representation) and eta = dist(Y0,Z0) - 4h.
inline TheoremCheckReport check_midsurface_half_gap(const ScalarField& y0, const ScalarField& z0,
                                                    const ScalarField& m0, const AmbientField* X, const FlowParams& p) {
  detail::Stopwatch sw;
  const Grid& g = y0.grid;
  const double h = g.spacing();
  const double lambda = detail::lambda_for(X, g);
  FlowParams q = p;
  q.stopAtExtinction = false;
  const FlowPair fp = evolve_pair(y0, z0, X, q);
  q.representation = Representation::ZeroSet;
  const auto mt = evolve(m0, X, q);
  TheoremCheckReport r;
  r.theoremId = TheoremId::DistanceTheorem;
  r.tolerance = 4.0 * h;
  const double eta = track_gap(fp.y, 0, fp.z, 0).value - 4.0 * h;
  const double t0 = y0.time;
  for (std::size_t k = 0; k < std::min({fp.y.size(), fp.z.size(), mt.size()}); ++k) {
    const double t = fp.y.samples[k].time;
    const double bound = 0.5 * std::exp(lambda * (t - t0)) * eta;
    for (const auto* tr : {&fp.y, &fp.z}) {
      const auto d = track_gap(*tr, k, mt, k);
      if (d.empty) continue;
      r.observe(d.value - bound, t);
    }
  }
  if (!r.observed()) r.observe(0.0, t0);
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Flow against a moving barrier K (an exact solution, not necessarily strong):
/// dist(Z(t), K(t)) >= e^{lambda t} (d0 - 4h) - 4h.
inline TheoremCheckReport check_key_proposition(const SpacetimeTrack& track, const ImplicitBarrier& b,
                                                const AmbientField* X) {
  detail::Stopwatch sw;
  const Grid& g = track.grid();
  const double h = g.spacing();
  const double lambda = detail::lambda_for(X, g);
  TheoremCheckReport r;
  r.theoremId = TheoremId::KeyProposition;
  r.tolerance = 4.0 * h;
  std::optional<double> d0, t0;
  for (std::size_t k = 0; k < track.size(); ++k) {
    const double t = track.samples[k].time;
    if (!b.covers(t)) continue;
    const ClosedSetMask K = barrier_mask(b, g, t), Z = track.mask(k);
    const auto d = set_distance(K, Z);
    if (d.empty) continue;
    const double gap = masks_intersect(K, Z) ? -h : d.value;
    if (!d0) {
      if (gap <= 4.0 * h) throw Error(ErrorKind::Precondition, "barrier must start more than 4h away from the flow");
      d0 = gap;
      t0 = t;
    }
    r.series.push_back({t, gap});
    r.observe(gap - std::exp(lambda * (t - *t0)) * (*d0 - 4.0 * h), t);
  }
  if (!r.observed()) r.observe(0.0, track.startTime);
  std::ostringstream os;
  os << "barrier " << b.name << " lambda=" << lambda;
  r.detail = os.str();
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Arrival time of a disk/ball of radius r0 about c against (r0^2 - |x - c|^2) / (2m) on |x - c| <= evalRadius,
/// plus exact nesting of superlevel sets and thin level sets {u = t} (at most two cells thick).
inline TheoremCheckReport check_arrival_time(const SpacetimeTrack& track, const ClosedSetMask& Q0, const Vec& c,
                                             double r0, double evalRadius) {
  detail::Stopwatch sw;
  const Grid& g = track.grid();
  const double h = g.spacing();
  const int m = g.dim() - 1;
  const auto at = arrival_time(track, Q0);
  TheoremCheckReport r;
  r.theoremId = TheoremId::ArrivalTime;
  r.tolerance = 0.0;
  double worst = 0.0;
  Vec where;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Vec x = g.position(i);
    const double rr = (x - c).norm();
    if (rr > evalRadius) continue;
    const double e = std::abs(at.u[i] - (r0 * r0 - rr * rr) / (2.0 * m));
    if (!(e <= worst)) {
      worst = e;
      where = x;
    }
  }
  r.observe(3.0 * h - worst, 0.0, where);

  int nestingViolations = 0;
  double thickest = 0.0;
  const double T = track.end_time();
  ClosedSetMask prev = at.superlevel(0.0);
  for (int k = 1; k <= 40; ++k) {
    const double t = T * k / 41.0;
    const ClosedSetMask cur = at.superlevel(t);
    for (std::size_t i = 0; i < g.size(); ++i)
      if (cur.inside[i] && !prev.inside[i]) ++nestingViolations;
    prev = cur;
    const ClosedSetMask lvl = at.level(t);
    if (lvl.empty()) continue;
    // thickness: deepest level node measured from the nodes off the level set
    const auto off = distance_transform(mask_complement(lvl));
    for (const auto i : lvl.nodes()) thickest = std::max(thickest, off.field.values[i]);
  }
  if (nestingViolations > 0) r.observe(-h, 0.0);
  r.observe(2.0 * h - thickest, 0.0);
  std::ostringstream os;
  os << std::setprecision(6) << "max error " << worst << " (3h = " << 3.0 * h << "), nesting violations "
     << nestingViolations << ", level thickness " << thickest << " (2h = " << 2.0 * h << "), continuity C "
     << at.continuityConstant;
  r.detail = os.str();
  r.series.push_back({0.0, worst});
  r.finalize();
  r.runtimeSeconds = sw.seconds();
  return r;
}

/// Exactness of the barrier formulas on closed-form examples. One report per sub-check.
inline std::vector<TheoremCheckReport> check_barrier_calculus(int dim = 2, double perturbC = 1.0) {
  std::vector<TheoremCheckReport> out;
  const int m = dim - 1;
  const Vec o = Vec::Zero(dim);
  auto begin = [&](const char* label, double tol) {
    TheoremCheckReport r;
    r.theoremId = TheoremId::BarrierCalculus;
    r.label = label;
    r.tolerance = tol;
    return r;
  };

  {
    detail::Stopwatch sw;
    auto r = begin("exact-sphere-phi", 1e-10);
    double worst = 0.0;
    for (bool complement : {false, true}) {
      const auto b = exact_sphere(o, 0.0, -1.0, -0.02, complement);
      for (int s = 0; s < 24; ++s) {
        const double t = -1.0 + (0.98 * s) / 23.0;
        for (const auto& p : sample_boundary(b, t, 128, 0.3)) {
          const double phi = std::abs(eval_barrier(b, p, t).Phi);
          if (phi > worst) {
            worst = phi;
            r.witnessTime = t;
            r.witnessPoint = p;
          }
        }
      }
    }
    r.margin = -worst;
    std::ostringstream os;
    os << "max |Phi| " << worst;
    r.detail = os.str();
    r.finalize();
    r.runtimeSeconds = sw.seconds();
    out.push_back(r);
  }

  struct Expect {
    const char* label;
    ImplicitBarrier b;
    bool strong;
  };
  const double delta = 0.5;
  std::vector<Expect> cases = {
      {"classify-strong-ball", ball_barrier(o, delta, 2.0 * m + 1.0, 0.0, 0.95 * delta * delta / (2.0 * m + 1.0)), true},
      {"classify-exact-sphere", ball_barrier(o, delta, 2.0 * m, 0.0, 0.95 * delta * delta / (2.0 * m)), false},
      {"classify-expanding-ball", ball_barrier(o, delta, -1.0, 0.0, 0.5), false},
  };
  for (const auto& cse : cases) {
    detail::Stopwatch sw;
    auto r = begin(cse.label, 0.0);
    const auto cls = classify_strong(cse.b);
    const bool right = cls.strong == cse.strong;
    r.margin = right ? 0.0 : -1.0;
    r.witnessTime = cls.worstTime;
    r.witnessPoint = cls.worstPoint;
    std::ostringstream os;
    os << (cls.strong ? "strong" : "not-strong") << " (expected " << (cse.strong ? "strong" : "not-strong")
       << "), worst Phi " << cls.worstPhi;
    r.detail = os.str();
    r.finalize();
    r.runtimeSeconds = sw.seconds();
    out.push_back(r);
  }

  {
    // f = x1 static, touched at the origin; ratio dist(x, boundary K(0)) / |x - p|^2 as x -> p.
    detail::Stopwatch sw;
    Vec e1 = Vec::Zero(dim);
    e1[0] = 1.0;
    const auto pb = perturb_barrier(half_space(e1, 0.0, 0.0, -1.0, 0.0), o, perturbC);
    Vec tangent = Vec::Zero(dim);
    tangent[1] = 1.0;
    const double s = 0.02;
    const double ratio = separation_ratio(pb, tangent, s);
    auto r = begin("perturbation-ratio", 0.2 * perturbC);
    r.margin = -std::abs(ratio - perturbC);
    r.witnessPoint = o + s * tangent;
    std::ostringstream os;
    os << "ratio " << ratio << " at distance " << s << " (c = " << perturbC << ")";
    r.detail = os.str();
    r.finalize();
    r.runtimeSeconds = sw.seconds();
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Report output

inline nlohmann::json to_json(const TheoremCheckReport& r) {
  nlohmann::json j;
  j["theoremId"] = to_string(r.theoremId);
  j["label"] = r.label;
  j["passed"] = r.passed;
  j["margin"] = std::isfinite(r.margin) ? nlohmann::json(r.margin) : nlohmann::json(nullptr);
  j["tolerance"] = r.tolerance;
  nlohmann::json w;
  w["time"] = r.witnessTime;
  std::vector<double> pt(r.witnessPoint.data(), r.witnessPoint.data() + r.witnessPoint.size());
  w["point"] = pt;
  j["witness"] = w;
  if (!r.detail.empty()) j["detail"] = r.detail;
  return j;
}

/// JSON lines, one per report; runtimes follow on "#timing" lines so the rest is reproducible.
inline void write_reports(std::ostream& os, const std::vector<TheoremCheckReport>& reports) {
  for (const auto& r : reports) os << to_json(r).dump() << '\n';
  for (const auto& r : reports) {
    os << "#timing " << (r.label.empty() ? to_string(r.theoremId) : r.label) << ' ' << std::fixed
       << std::setprecision(3) << r.runtimeSeconds << '\n';
    os << std::defaultfloat;
  }
}

inline void write_summary(std::ostream& os, const std::vector<TheoremCheckReport>& reports) {
  os << std::left << std::setw(34) << "check" << std::setw(20) << "theorem" << std::setw(7) << "result"
     << std::right << std::setw(14) << "margin" << std::setw(12) << "tolerance" << '\n';
  for (const auto& r : reports) {
    os << std::left << std::setw(34) << (r.label.empty() ? "-" : r.label) << std::setw(20) << to_string(r.theoremId)
       << std::setw(7) << (r.passed ? "PASS" : "FAIL") << std::right << std::setw(14) << std::setprecision(5)
       << r.margin << std::setw(12) << r.tolerance << '\n';
  }
}

}  // namespace mcflab

#endif  // MCFLAB_HARNESS_HPP
