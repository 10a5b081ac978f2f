#ifndef MCFLAB_GRID_HPP
#define MCFLAB_GRID_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcflab/errors.hpp"

namespace mcflab {

/// Point or vector in the ambient space (size 2 or 3, stack allocated).
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
/// Square matrix of ambient dimension.
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;

inline Vec make_vec(double x, double y) {
  Vec v(2);
  v << x, y;
  return v;
}

inline Vec make_vec(double x, double y, double z) {
  Vec v(3);
  v << x, y, z;
  return v;
}

/// Uniform Cartesian node lattice in 2 or 3 dimensions.
///
/// Node (i0, i1, i2) sits at origin + h * (i0, i1, i2). Storage is C order over
/// [i2][i1][i0], i.e. the first axis varies fastest.
class Grid {
 public:
  Grid() = default;

  Grid(int dim, Vec origin, double spacing, std::array<int, 3> counts)
      : dim_(dim), origin_(std::move(origin)), h_(spacing), counts_(counts) {
    if (dim_ != 2 && dim_ != 3) throw Error(ErrorKind::Precondition, "grid dimension must be 2 or 3");
    if (origin_.size() != dim_) throw Error(ErrorKind::Precondition, "grid origin has wrong dimension");
    if (!(h_ > 0.0) || !std::isfinite(h_)) throw Error(ErrorKind::Precondition, "grid spacing must be positive");
    if (dim_ == 2) counts_[2] = 1;
    for (int a = 0; a < dim_; ++a) {
      if (counts_[a] < 8) throw Error(ErrorKind::Precondition, "grid needs at least 8 nodes per axis");
    }
    strides_ = {1, static_cast<std::ptrdiff_t>(counts_[0]),
                static_cast<std::ptrdiff_t>(counts_[0]) * counts_[1]};
  }

  /// Grid with a node at the centre, covering [center - halfWidth, center + halfWidth] on every axis.
  static Grid centered(int dim, double halfWidth, double spacing, const Vec& center = Vec()) {
    const int n = static_cast<int>(std::ceil(halfWidth / spacing - 1e-9));
    Vec c = center.size() == dim ? center : Vec::Zero(dim);
    Vec origin = c - Vec::Constant(dim, n * spacing);
    return Grid(dim, origin, spacing, {2 * n + 1, 2 * n + 1, 2 * n + 1});
  }

  /// Grid covering the box [lower, upper] with nodes aligned to integer multiples of spacing.
  static Grid covering(const Vec& lower, const Vec& upper, double spacing) {
    const int dim = static_cast<int>(lower.size());
    std::array<int, 3> counts{1, 1, 1};
    Vec origin(dim);
    for (int a = 0; a < dim; ++a) {
      const auto lo = static_cast<long>(std::floor(lower[a] / spacing + 1e-9));
      const auto hi = static_cast<long>(std::ceil(upper[a] / spacing - 1e-9));
      origin[a] = static_cast<double>(lo) * spacing;
      counts[a] = static_cast<int>(hi - lo + 1);
    }
    return Grid(dim, origin, spacing, counts);
  }

  [[nodiscard]] int dim() const { return dim_; }
  [[nodiscard]] double spacing() const { return h_; }
  [[nodiscard]] const Vec& origin() const { return origin_; }
  [[nodiscard]] const std::array<int, 3>& counts() const { return counts_; }
  [[nodiscard]] std::ptrdiff_t stride(int axis) const { return strides_[axis]; }
  [[nodiscard]] std::size_t size() const {
    return static_cast<std::size_t>(counts_[0]) * counts_[1] * counts_[2];
  }

  [[nodiscard]] Vec extent() const {
    Vec e(dim_);
    for (int a = 0; a < dim_; ++a) e[a] = counts_[a] * h_;
    return e;
  }

  [[nodiscard]] Vec upper() const {
    Vec u(dim_);
    for (int a = 0; a < dim_; ++a) u[a] = origin_[a] + (counts_[a] - 1) * h_;
    return u;
  }

  [[nodiscard]] double diameter() const { return (upper() - origin_).norm(); }

  [[nodiscard]] std::size_t index(int i0, int i1, int i2 = 0) const {
    return static_cast<std::size_t>(i0 + strides_[1] * i1 + strides_[2] * i2);
  }

  [[nodiscard]] std::size_t index(const std::array<int, 3>& c) const { return index(c[0], c[1], c[2]); }

  [[nodiscard]] std::array<int, 3> coords(std::size_t idx) const {
    std::array<int, 3> c{0, 0, 0};
    c[0] = static_cast<int>(idx % counts_[0]);
    const std::size_t rest = idx / counts_[0];
    c[1] = static_cast<int>(rest % counts_[1]);
    c[2] = static_cast<int>(rest / counts_[1]);
    return c;
  }

  [[nodiscard]] Vec position(std::size_t idx) const {
    const auto c = coords(idx);
    Vec p(dim_);
    for (int a = 0; a < dim_; ++a) p[a] = origin_[a] + c[a] * h_;
    return p;
  }

  /// Nearest node to a point, clamped into the grid.
  [[nodiscard]] std::size_t nearest_node(const Vec& p) const {
    std::array<int, 3> c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      const long i = std::lround((p[a] - origin_[a]) / h_);
      c[a] = static_cast<int>(std::clamp<long>(i, 0, counts_[a] - 1));
    }
    return index(c);
  }

  [[nodiscard]] bool on_face(std::size_t idx) const {
    const auto c = coords(idx);
    for (int a = 0; a < dim_; ++a) {
      if (c[a] == 0 || c[a] == counts_[a] - 1) return true;
    }
    return false;
  }

  /// Distance from a node to the nearest box face.
  [[nodiscard]] double face_distance(std::size_t idx) const {
    const auto c = coords(idx);
    int m = counts_[0];
    for (int a = 0; a < dim_; ++a) m = std::min({m, c[a], counts_[a] - 1 - c[a]});
    return m * h_;
  }

  /// Calls fn(neighbourIndex, axis, direction) for every axis neighbour inside the grid.
  template <typename Fn>
  void for_each_neighbor(std::size_t idx, Fn&& fn) const {
    const auto c = coords(idx);
    for (int a = 0; a < dim_; ++a) {
      if (c[a] > 0) fn(idx - static_cast<std::size_t>(strides_[a]), a, -1);
      if (c[a] + 1 < counts_[a]) fn(idx + static_cast<std::size_t>(strides_[a]), a, +1);
    }
  }

  friend bool operator==(const Grid& a, const Grid& b) {
    return a.dim_ == b.dim_ && a.h_ == b.h_ && a.counts_ == b.counts_ && a.origin_ == b.origin_;
  }
  friend bool operator!=(const Grid& a, const Grid& b) { return !(a == b); }

 private:
  int dim_ = 2;
  Vec origin_ = Vec::Zero(2);
  double h_ = 1.0;
  std::array<int, 3> counts_{8, 8, 1};
  std::array<std::ptrdiff_t, 3> strides_{1, 8, 64};
};

inline void require_same_grid(const Grid& a, const Grid& b, const char* where) {
  if (a != b) throw Error(ErrorKind::GridMismatch, std::string(where) + ": fields live on different grids");
}

/// Grid-sampled real function u together with the time it describes.
struct ScalarField {
  Grid grid;
  std::vector<double> values;
  double time = 0.0;

  ScalarField() = default;
  explicit ScalarField(Grid g, double fill = 0.0, double t = 0.0)
      : grid(std::move(g)), values(grid.size(), fill), time(t) {}

  template <typename Fn>
  static ScalarField sample(const Grid& g, Fn&& fn, double t = 0.0) {
    ScalarField f(g, 0.0, t);
    for (std::size_t i = 0; i < g.size(); ++i) f.values[i] = fn(g.position(i));
    return f;
  }

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  [[nodiscard]] bool all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
  }
};

enum class Representation {
  Sublevel,  ///< Z = {u <= level}
  ZeroSet,   ///< Z = {u == level}, thickened to grid scale
};

/// Node set standing in for a closed subset of the ambient space.
struct ClosedSetMask {
  Grid grid;
  std::vector<std::uint8_t> inside;
  Representation representation = Representation::Sublevel;

  ClosedSetMask() = default;
  explicit ClosedSetMask(Grid g, Representation rep = Representation::Sublevel)
      : grid(std::move(g)), inside(grid.size(), 0), representation(rep) {}

  [[nodiscard]] std::size_t count() const {
    return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
  }
  [[nodiscard]] bool empty() const {
    return std::none_of(inside.begin(), inside.end(), [](std::uint8_t v) { return v != 0; });
  }
  [[nodiscard]] bool operator[](std::size_t i) const { return inside[i] != 0; }

  [[nodiscard]] std::vector<std::size_t> nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < inside.size(); ++i) {
      if (inside[i]) out.push_back(i);
    }
    return out;
  }

  template <typename Pred>
  static ClosedSetMask from_predicate(const Grid& g, Pred&& pred,
                                      Representation rep = Representation::Sublevel) {
    ClosedSetMask m(g, rep);
    for (std::size_t i = 0; i < g.size(); ++i) m.inside[i] = pred(g.position(i)) ? 1 : 0;
    return m;
  }
};

inline ClosedSetMask mask_union(const ClosedSetMask& a, const ClosedSetMask& b) {
  require_same_grid(a.grid, b.grid, "mask_union");
  ClosedSetMask out = a;
  for (std::size_t i = 0; i < out.inside.size(); ++i) out.inside[i] = (a.inside[i] | b.inside[i]);
  return out;
}

inline ClosedSetMask mask_intersection(const ClosedSetMask& a, const ClosedSetMask& b) {
  require_same_grid(a.grid, b.grid, "mask_intersection");
  ClosedSetMask out = a;
  for (std::size_t i = 0; i < out.inside.size(); ++i) out.inside[i] = (a.inside[i] & b.inside[i]);
  return out;
}

inline ClosedSetMask mask_complement(const ClosedSetMask& a) {
  ClosedSetMask out = a;
  for (auto& v : out.inside) v = v ? 0 : 1;
  return out;
}

inline bool masks_intersect(const ClosedSetMask& a, const ClosedSetMask& b) {
  require_same_grid(a.grid, b.grid, "masks_intersect");
  for (std::size_t i = 0; i < a.inside.size(); ++i) {
    if (a.inside[i] && b.inside[i]) return true;
  }
  return false;
}

namespace detail {
// Isolated sublevel nodes whose value is indistinguishable from the level are sign noise.
inline void drop_sign_noise(ClosedSetMask& m, const ScalarField& u, double level) {
  const double noise = 1e-9 * u.grid.spacing();
  for (std::size_t i = 0; i < m.inside.size(); ++i) {
    if (!m.inside[i] || u.values[i] - level < -noise) continue;
    bool lonely = true;
    u.grid.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (m.inside[j]) lonely = false;
    });
    if (lonely) m.inside[i] = 0;
  }
}
}  // namespace detail

/// Nodes with u <= level (sign tolerance 1e-12).
inline ClosedSetMask sublevel_mask(const ScalarField& u, double level = 0.0) {
  ClosedSetMask m(u.grid, Representation::Sublevel);
  for (std::size_t i = 0; i < u.values.size(); ++i) m.inside[i] = (u.values[i] <= level + 1e-12) ? 1 : 0;
  detail::drop_sign_noise(m, u, level);
  return m;
}

/// Nodes with |u - level| <= h, or where u - level changes sign across a grid edge.
inline ClosedSetMask zero_set_mask(const ScalarField& u, double level = 0.0) {
  const Grid& g = u.grid;
  const double h = g.spacing();
  ClosedSetMask m(g, Representation::ZeroSet);
  for (std::size_t i = 0; i < u.values.size(); ++i) {
    const double a = u.values[i] - level;
    if (std::abs(a) <= h) {
      m.inside[i] = 1;
      continue;
    }
    g.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (a * (u.values[j] - level) < 0.0) m.inside[i] = 1;
    });
  }
  return m;
}

inline ClosedSetMask extract_mask(const ScalarField& u, Representation rep, double level = 0.0) {
  return rep == Representation::Sublevel ? sublevel_mask(u, level) : zero_set_mask(u, level);
}

/// Nodes of the sublevel set {u <= level} that have a neighbour outside it.
inline ClosedSetMask boundary_mask(const ClosedSetMask& region) {
  ClosedSetMask out(region.grid, Representation::ZeroSet);
  for (std::size_t i = 0; i < region.inside.size(); ++i) {
    if (!region.inside[i]) continue;
    region.grid.for_each_neighbor(i, [&](std::size_t j, int, int) {
      if (!region.inside[j]) out.inside[i] = 1;
    });
  }
  return out;
}

/// Time-indexed family of fields; Z(t) is the extracted mask of each sample.
struct SpacetimeTrack {
  struct Sample {
    double time = 0.0;
    ScalarField field;
  };

  std::vector<Sample> samples;
  double startTime = 0.0;
  double timeStep = 0.0;  ///< nominal spacing between recorded samples
  Representation representation = Representation::Sublevel;
  double level = 0.0;

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] const Grid& grid() const { return samples.front().field.grid; }
  [[nodiscard]] double end_time() const { return samples.back().time; }

  [[nodiscard]] ClosedSetMask mask(std::size_t k) const {
    return extract_mask(samples[k].field, representation, level);
  }
  [[nodiscard]] ClosedSetMask mask(std::size_t k, Representation rep) const {
    return extract_mask(samples[k].field, rep, level);
  }

  /// Index of the last sample with time <= t (clamped to the first sample).
  [[nodiscard]] std::size_t sample_at_or_before(double t) const {
    std::size_t k = 0;
    while (k + 1 < samples.size() && samples[k + 1].time <= t + 1e-12) ++k;
    return k;
  }

  [[nodiscard]] bool times_increasing() const {
    for (std::size_t k = 1; k < samples.size(); ++k) {
      if (!(samples[k].time > samples[k - 1].time)) return false;
    }
    return !samples.empty() && samples.front().time == startTime;
  }
};

}  // namespace mcflab

#endif  // MCFLAB_GRID_HPP
