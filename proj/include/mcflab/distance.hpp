#ifndef MCFLAB_DISTANCE_HPP
#define MCFLAB_DISTANCE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <vector>

#include "mcflab/grid.hpp"

namespace mcflab {

/// Finite stand-in for dist(., empty set) = infinity.
inline double empty_sentinel(const Grid& g) { return 10.0 * g.diameter(); }

struct DistanceField {
  ScalarField field;
  bool setEmpty = false;
};

struct SetDistance {
  double value = 0.0;
  bool empty = false;  ///< one of the sets was empty; value holds the sentinel
};

namespace detail {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher), squared distances in index units.
inline void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -inf;
      z[1] = inf;
      continue;
    }
    auto meet = [&](int p) {
      return ((f[q] + static_cast<double>(q) * q) - (f[p] + static_cast<double>(p) * p)) / (2.0 * (q - p));
    };
    double s = meet(v[static_cast<std::size_t>(k)]);
    while (s <= z[static_cast<std::size_t>(k)]) {
      --k;
      s = meet(v[static_cast<std::size_t>(k)]);
    }
    ++k;
    v[static_cast<std::size_t>(k)] = q;
    z[static_cast<std::size_t>(k)] = s;
    z[static_cast<std::size_t>(k) + 1] = inf;
  }
  if (k < 0) {
    for (int q = 0; q < n; ++q) d[q] = inf;
    return;
  }
  int j = 0;
  for (int q = 0; q < n; ++q) {
    while (z[static_cast<std::size_t>(j) + 1] < q) ++j;
    const int p = v[static_cast<std::size_t>(j)];
    d[q] = static_cast<double>(q - p) * (q - p) + f[p];
  }
}

// Squared index-unit distance to the nodes of a mask, one separable pass per axis.
inline std::vector<double> squared_edt(const ClosedSetMask& mask) {
  const Grid& g = mask.grid;
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> d(g.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = mask.inside[i] ? 0.0 : inf;
  std::vector<double> line_in, line_out;
  std::vector<int> v;
  std::vector<double> z;
  const auto& n = g.counts();
  for (int axis = 0; axis < g.dim(); ++axis) {
    const int len = n[axis];
    const std::ptrdiff_t stride = g.stride(axis);
    line_in.resize(static_cast<std::size_t>(len));
    line_out.resize(static_cast<std::size_t>(len));
    for (std::size_t base = 0; base < g.size(); ++base) {
      if (g.coords(base)[axis] != 0) continue;
      for (int q = 0; q < len; ++q) line_in[q] = d[base + q * stride];
      edt_1d(line_in.data(), line_out.data(), len, v, z);
      for (int q = 0; q < len; ++q) d[base + q * stride] = line_out[q];
    }
  }
  return d;
}

}  // namespace detail

/// Exact Euclidean distance from every node to the node set of `mask`.
inline DistanceField distance_transform(const ClosedSetMask& mask) {
  DistanceField out{ScalarField(mask.grid), mask.empty()};
  if (out.setEmpty) {
    std::fill(out.field.values.begin(), out.field.values.end(), empty_sentinel(mask.grid));
    return out;
  }
  const auto sq = detail::squared_edt(mask);
  const double h = mask.grid.spacing();
  for (std::size_t i = 0; i < sq.size(); ++i) out.field.values[i] = h * std::sqrt(sq[i]);
  return out;
}

/// Distance from an arbitrary point to the node set of a mask.
inline SetDistance point_set_distance(const ClosedSetMask& mask, const Vec& p) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < mask.inside.size(); ++i) {
    if (!mask.inside[i]) continue;
    best = std::min(best, (mask.grid.position(i) - p).norm());
  }
  if (!std::isfinite(best)) return {empty_sentinel(mask.grid), true};
  return {best, false};
}

/// dist(a, b) as the minimum over nodes of a of the distance transform of b.
inline SetDistance set_distance(const ClosedSetMask& a, const ClosedSetMask& b) {
  require_same_grid(a.grid, b.grid, "set_distance");
  if (a.empty() || b.empty()) return {empty_sentinel(a.grid), true};
  const auto db = distance_transform(b);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.inside.size(); ++i) {
    if (a.inside[i]) best = std::min(best, db.field.values[i]);
  }
  return {best, false};
}

/// Hausdorff distance between node sets; 0 for two empty sets, sentinel if exactly one is empty.
inline SetDistance hausdorff_distance(const ClosedSetMask& a, const ClosedSetMask& b) {
  require_same_grid(a.grid, b.grid, "hausdorff_distance");
  const bool ea = a.empty(), eb = b.empty();
  if (ea && eb) return {0.0, false};
  if (ea || eb) return {empty_sentinel(a.grid), true};
  const auto da = distance_transform(a);
  const auto db = distance_transform(b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.inside.size(); ++i) {
    if (a.inside[i]) worst = std::max(worst, db.field.values[i]);
    if (b.inside[i]) worst = std::max(worst, da.field.values[i]);
  }
  return {worst, false};
}

/// Parabolic spacetime metric max(|x - y|, |s - t|^(1/2)).
inline double spacetime_distance(const Vec& x, double s, const Vec& y, double t) {
  return std::max((x - y).norm(), std::sqrt(std::abs(s - t)));
}

/// Signed distance rebuilt from a node set alone: interface placed half a cell outside the nodes.
inline ScalarField signed_distance_from_mask(const ClosedSetMask& mask) {
  ScalarField out(mask.grid);
  const double h = mask.grid.spacing();
  const auto to_inside = distance_transform(mask);
  const auto to_outside = distance_transform(mask_complement(mask));
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    if (mask.inside[i]) {
      out.values[i] = to_outside.setEmpty ? -to_outside.field.values[i] : -(to_outside.field.values[i] - 0.5 * h);
    } else {
      out.values[i] = to_inside.setEmpty ? to_inside.field.values[i] : to_inside.field.values[i] - 0.5 * h;
    }
  }
  return out;
}

/// Sub-cell crossing points of {u = level} found by linear interpolation along grid edges.
inline std::vector<Vec> interface_points(const ScalarField& u, double level = 0.0) {
  const Grid& g = u.grid;
  std::vector<Vec> pts;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto c = g.coords(i);
    const double a = u.values[i] - level;
    if (a == 0.0) {
      pts.push_back(g.position(i));
      continue;
    }
    for (int axis = 0; axis < g.dim(); ++axis) {
      if (c[axis] + 1 >= g.counts()[axis]) continue;
      const std::size_t j = i + static_cast<std::size_t>(g.stride(axis));
      const double b = u.values[j] - level;
      if (a * b < 0.0) {
        Vec p = g.position(i);
        p[axis] += g.spacing() * a / (a - b);
        pts.push_back(p);
      }
    }
  }
  return pts;
}

namespace detail {

struct PointBuckets {
  double cell;
  std::unordered_map<long long, std::vector<std::size_t>> buckets;
  const std::vector<Vec>* pts;

  static long long key(long x, long y, long z) {
    return (static_cast<long long>(x) * 73856093LL) ^ (static_cast<long long>(y) * 19349663LL) ^
           (static_cast<long long>(z) * 83492791LL);
  }

  PointBuckets(const std::vector<Vec>& p, double c) : cell(c), pts(&p) {
    for (std::size_t i = 0; i < p.size(); ++i) {
      const auto [x, y, z] = cell_of(p[i]);
      buckets[key(x, y, z)].push_back(i);
    }
  }

  [[nodiscard]] std::array<long, 3> cell_of(const Vec& p) const {
    std::array<long, 3> c{0, 0, 0};
    for (int a = 0; a < p.size(); ++a) c[a] = static_cast<long>(std::floor(p[a] / cell));
    return c;
  }

  // Nearest stored point, searching shells of buckets outward.
  [[nodiscard]] double nearest(const Vec& q, double giveUp) const {
    const auto c = cell_of(q);
    double best = std::numeric_limits<double>::infinity();
    const int dim = static_cast<int>(q.size());
    for (long r = 0;; ++r) {
      if ((r - 1) * cell > best || (r - 1) * cell > giveUp) break;
      for (long dx = -r; dx <= r; ++dx) {
        for (long dy = -r; dy <= r; ++dy) {
          for (long dz = (dim == 3 ? -r : 0); dz <= (dim == 3 ? r : 0); ++dz) {
            if (std::max({std::labs(dx), std::labs(dy), std::labs(dz)}) != r) continue;
            const auto it = buckets.find(key(c[0] + dx, c[1] + dy, c[2] + dz));
            if (it == buckets.end()) continue;
            for (const auto idx : it->second) best = std::min(best, ((*pts)[idx] - q).norm());
          }
        }
      }
    }
    return best;
  }
};

}  // namespace detail

/// Distance between the sub-cell interfaces {u = levelU} and {v = levelV}.
inline SetDistance interface_gap(const ScalarField& u, const ScalarField& v, double levelU = 0.0,
                                 double levelV = 0.0) {
  require_same_grid(u.grid, v.grid, "interface_gap");
  const auto pu = interface_points(u, levelU);
  const auto pv = interface_points(v, levelV);
  if (pu.empty() || pv.empty()) return {empty_sentinel(u.grid), true};
  const detail::PointBuckets buckets(pv, 4.0 * u.grid.spacing());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pu) best = std::min(best, buckets.nearest(p, best));
  return {best, false};
}

/// Kuratowski limsup of a sequence of spacetime tracks on a shared grid and time lattice.
///
/// A spacetime node (x, t_k) belongs to the result when some track in the tail n >= N/2 comes
/// within parabolic distance 2h of it. On a finite sequence the tail stands in for "infinitely many n".
inline std::vector<ClosedSetMask> kuratowski_limsup(const std::vector<SpacetimeTrack>& tracks) {
  if (tracks.size() < 2) throw Error(ErrorKind::Precondition, "kuratowski_limsup needs at least two tracks");
  const Grid& g = tracks.front().grid();
  const std::size_t K = tracks.front().size();
  for (const auto& tr : tracks) {
    require_same_grid(g, tr.grid(), "kuratowski_limsup");
    if (tr.size() != K) throw Error(ErrorKind::Precondition, "tracks must share a time lattice");
    for (std::size_t k = 0; k < K; ++k) {
      if (std::abs(tr.samples[k].time - tracks.front().samples[k].time) > 1e-12)
        throw Error(ErrorKind::Precondition, "tracks must share a time lattice");
    }
  }
  const double threshold = 2.0 * g.spacing();
  const std::size_t first = tracks.size() / 2;

  std::vector<ClosedSetMask> out(K, ClosedSetMask(g, tracks.front().representation));
  for (std::size_t n = first; n < tracks.size(); ++n) {
    std::vector<DistanceField> dist;
    dist.reserve(K);
    for (std::size_t j = 0; j < K; ++j) dist.push_back(distance_transform(tracks[n].mask(j)));
    for (std::size_t k = 0; k < K; ++k) {
      const double tk = tracks[n].samples[k].time;
      for (std::size_t j = 0; j < K; ++j) {
        const double dt = std::sqrt(std::abs(tracks[n].samples[j].time - tk));
        if (dt > threshold || dist[j].setEmpty) continue;
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (std::max(dist[j].field.values[i], dt) <= threshold) out[k].inside[i] = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace mcflab

#endif  // MCFLAB_DISTANCE_HPP
