#ifndef MCFLAB_SCENARIO_HPP
#define MCFLAB_SCENARIO_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mcflab/barrier.hpp"
#include "mcflab/brakke.hpp"
#include "mcflab/distance.hpp"
#include "mcflab/errors.hpp"
#include "mcflab/field_io.hpp"
#include "mcflab/grid.hpp"
#include "mcflab/harness.hpp"
#include "mcflab/levelset.hpp"
#include "mcflab/separator.hpp"
#include "mcflab/shapes.hpp"

// Scenario files are JSON objects. Physical quantities carry their unit in the key name:
// lengths in box units (*_box_units), times in flow units (*_flow_units), rates per flow time (*_per_time).
namespace mcflab::scenario {

using nlohmann::json;

struct SetSpec {
  std::string name;
  json spec;
  SignedDistance sd;  ///< empty function for the empty set
};

struct Outputs {
  std::string reportPath;
  std::string csvPrefix;  ///< per-flow CSV files <prefix>_<label>.csv when set
  int dumpEvery = 0;      ///< field dumps every k steps (0 = none)
};

struct Scenario {
  std::string name;
  std::string description;
  std::string path;
  json doc;
  Grid grid;
  AmbientField field;
  FlowParams flow;
  std::map<std::string, SetSpec> sets;
  std::vector<json> checks;
  Outputs outputs;
  unsigned seed = 1;
  double lambda = 0.0;  ///< Ric^X lower bound over the box, recorded before the run

  [[nodiscard]] const AmbientField* transport() const { return field.is_zero() ? nullptr : &field; }
};

struct Overrides {
  std::optional<int> gridOverride;  ///< spacing becomes 1/N box units
  std::optional<int> dumpEvery;
  std::optional<std::string> reportPath;
  std::optional<unsigned> seed;
};

namespace detail {

inline std::string where(const std::string& ctx, const std::string& key) {
  return ctx.empty() ? key : ctx + "." + key;
}

inline const json& require(const json& j, const std::string& key, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key))
    throw Error(ErrorKind::Resolution, "missing key '" + where(ctx, key) + "'");
  return j.at(key);
}

inline double number(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must be a number");
  return v.get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& ctx) {
  return (j.is_object() && j.contains(key)) ? number(j, key, ctx) : fallback;
}

inline std::string text(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_string()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must be a string");
  return v.get<std::string>();
}

inline std::string text_or(const json& j, const std::string& key, const std::string& fallback, const std::string& ctx) {
  return (j.is_object() && j.contains(key)) ? text(j, key, ctx) : fallback;
}

inline bool flag_or(const json& j, const std::string& key, bool fallback, const std::string& ctx) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must be true or false");
  return j.at(key).get<bool>();
}

inline Vec vec(const json& j, const std::string& key, int dim, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array() || static_cast<int>(v.size()) != dim)
    throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must be an array of " + std::to_string(dim) + " numbers");
  Vec out(dim);
  for (int a = 0; a < dim; ++a) {
    if (!v[a].is_number()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must hold numbers");
    out[a] = v[a].get<double>();
  }
  return out;
}

inline Vec vec_or(const json& j, const std::string& key, int dim, const std::string& ctx) {
  return (j.is_object() && j.contains(key)) ? vec(j, key, dim, ctx) : Vec(Vec::Zero(dim));
}

inline std::vector<double> numbers(const json& j, const std::string& key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_array()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw Error(ErrorKind::Resolution, "'" + where(ctx, key) + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& textIn, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, textIn.size()); ++i) {
    if (textIn[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline Grid build_grid(const json& j, std::optional<int> override) {
  const std::string ctx = "grid";
  const json& g = require(j, "grid", "");
  const int dim = static_cast<int>(number(g, "dim", ctx));
  if (dim != 2 && dim != 3) throw Error(ErrorKind::Resolution, "grid.dim must be 2 or 3");
  double h = number(g, "spacing_box_units", ctx);
  if (override) {
    if (*override < 1) throw Error(ErrorKind::Precondition, "--grid-override needs a positive N");
    h = 1.0 / *override;
  }
  if (!(h > 0.0)) throw Error(ErrorKind::Resolution, "grid.spacing_box_units must be positive");
  Grid out;
  if (g.contains("half_width_box_units")) {
    out = Grid::centered(dim, number(g, "half_width_box_units", ctx), h, vec_or(g, "center_box_units", dim, ctx));
  } else {
    out = Grid::covering(vec(g, "lower_box_units", dim, ctx), vec(g, "upper_box_units", dim, ctx), h);
  }
  const double cap = number_or(g, "max_nodes", 2.5e7, ctx);
  if (static_cast<double>(out.size()) > cap) {
    std::ostringstream os;
    os << "grid has " << out.size() << " nodes, above the cap of " << cap;
    throw Error(ErrorKind::Resolution, os.str());
  }
  return out;
}

/// X_i = sum of coefficient * prod_k x_k^p_k over the terms with component i.
inline AmbientField polynomial_field(int dim, const json& terms, const std::string& ctx) {
  struct Term {
    int component;
    double coefficient;
    std::array<int, 3> powers;
  };
  std::vector<Term> ts;
  if (!terms.is_array()) throw Error(ErrorKind::Resolution, "'" + ctx + ".terms' must be an array");
  for (const auto& t : terms) {
    Term term{static_cast<int>(number(t, "component", ctx)), number(t, "coefficient", ctx), {0, 0, 0}};
    if (term.component < 0 || term.component >= dim) throw Error(ErrorKind::Resolution, "polynomial component out of range");
    const auto p = numbers(t, "powers", ctx);
    if (static_cast<int>(p.size()) != dim) throw Error(ErrorKind::Resolution, "polynomial powers need one entry per axis");
    for (int a = 0; a < dim; ++a) {
      if (p[a] < 0 || p[a] != std::floor(p[a])) throw Error(ErrorKind::Resolution, "polynomial powers must be whole numbers");
      term.powers[a] = static_cast<int>(p[a]);
    }
    ts.push_back(term);
  }
  AmbientField f;
  f.name = "polynomial";
  f.dim = dim;
  f.X = [=](const Vec& x) {
    Vec out = Vec::Zero(dim);
    for (const auto& t : ts) {
      double v = t.coefficient;
      for (int a = 0; a < dim; ++a) v *= std::pow(x[a], t.powers[a]);
      out[t.component] += v;
    }
    return out;
  };
  f.jac = [=](const Vec& x) {
    Mat J = Mat::Zero(dim, dim);
    for (const auto& t : ts) {
      for (int j = 0; j < dim; ++j) {
        if (t.powers[j] == 0) continue;
        double v = t.coefficient * t.powers[j];
        for (int a = 0; a < dim; ++a) v *= std::pow(x[a], a == j ? t.powers[a] - 1 : t.powers[a]);
        J(t.component, j) += v;
      }
    }
    return J;
  };
  return f;
}

inline AmbientField build_field(const json& j, int dim) {
  if (!j.contains("ambient_field")) return AmbientField::zero(dim);
  const std::string ctx = "ambient_field";
  const json& f = j.at("ambient_field");
  const std::string kind = text(f, "kind", ctx);
  if (kind == "zero") return AmbientField::zero(dim);
  if (kind == "constant") return AmbientField::constant(vec(f, "vector_box_units_per_time", dim, ctx));
  if (kind == "radial") return AmbientField::radial(dim, number(f, "kappa_per_time", ctx));
  if (kind == "rotation") return AmbientField::rotation(dim, number(f, "omega_per_time", ctx));
  if (kind == "shear") return AmbientField::shear(dim, number(f, "rate_per_time", ctx));
  if (kind == "polynomial") return polynomial_field(dim, require(f, "terms", ctx), ctx);
  throw Error(ErrorKind::Resolution, "unknown ambient field kind '" + kind + "'");
}

inline FlowParams build_flow(const json& j) {
  FlowParams p;
  if (!j.contains("flow")) return p;
  const std::string ctx = "flow";
  const json& f = j.at("flow");
  p.cfl = number_or(f, "cfl", p.cfl, ctx);
  p.reinitEvery = static_cast<int>(number_or(f, "reinit_every_steps", p.reinitEvery, ctx));
  p.bandWidth = number_or(f, "band_width_box_units", 0.0, ctx);
  p.epsReg = number_or(f, "eps_reg_box_units", 0.0, ctx);
  p.maxTime = number_or(f, "max_time_flow_units", 0.0, ctx);
  p.sampleInterval = number_or(f, "sample_interval_flow_units", 0.0, ctx);
  return p;
}

inline SignedDistance build_shape(const json& s, int dim, const std::string& ctx) {
  const std::string kind = text(s, "shape", ctx);
  if (kind == "empty") return {};
  if (kind == "ball") {
    const Vec c = vec_or(s, "center_box_units", dim, ctx);
    const double r = number(s, "radius_box_units", ctx);
    return flag_or(s, "complement", false, ctx) ? shapes::ball_complement(c, r) : shapes::ball(c, r);
  }
  if (kind == "annulus")
    return shapes::annulus(vec_or(s, "center_box_units", dim, ctx), number(s, "inner_radius_box_units", ctx),
                           number(s, "outer_radius_box_units", ctx));
  if (kind == "half_space")
    return shapes::half_space(vec(s, "normal", dim, ctx), number_or(s, "offset_box_units", 0.0, ctx));
  if (kind == "ellipse") {
    if (dim != 2) throw Error(ErrorKind::Resolution, "ellipse sets need a 2-D grid");
    const auto ax = numbers(s, "semi_axes_box_units", ctx);
    if (ax.size() != 2) throw Error(ErrorKind::Resolution, "ellipse needs two semi-axes");
    return shapes::ellipse(vec_or(s, "center_box_units", dim, ctx), ax[0], ax[1]);
  }
  if (kind == "polygon") {
    if (dim != 2) throw Error(ErrorKind::Resolution, "polygon sets need a 2-D grid");
    const json& v = require(s, "vertices_box_units", ctx);
    std::vector<Vec> pts;
    for (const auto& p : v) {
      if (!p.is_array() || p.size() != 2) throw Error(ErrorKind::Resolution, "polygon vertices are [x, y] pairs");
      pts.push_back(make_vec(p[0].get<double>(), p[1].get<double>()));
    }
    if (pts.size() < 3) throw Error(ErrorKind::Resolution, "polygon needs at least three vertices");
    return shapes::polygon(std::move(pts));
  }
  if (kind == "union") {
    const json& parts = require(s, "parts", ctx);
    std::vector<SignedDistance> sds;
    for (std::size_t k = 0; k < parts.size(); ++k) {
      auto p = build_shape(parts[k], dim, ctx + ".parts[" + std::to_string(k) + "]");
      if (p) sds.push_back(std::move(p));
    }
    if (sds.empty()) return {};
    return shapes::unite(std::move(sds));
  }
  throw Error(ErrorKind::Resolution, "unknown shape '" + kind + "' in " + ctx);
}

inline ImplicitBarrier build_barrier(const json& b, int dim, const std::string& ctx) {
  const std::string kind = text(b, "kind", ctx);
  const Vec c = vec_or(b, "center_box_units", dim, ctx);
  if (kind == "strong_ball") {
    return strong_shrinking_ball(c, number(b, "radius_box_units", ctx), number_or(b, "start_time_flow_units", 0.0, ctx),
                                 number_or(b, "extra_speed", 1.0, ctx), number_or(b, "lifetime_fraction", 0.95, ctx));
  }
  if (kind == "exact_sphere") {
    return exact_sphere(c, number(b, "extinction_time_flow_units", ctx), number(b, "start_time_flow_units", ctx),
                        number(b, "end_time_flow_units", ctx), flag_or(b, "complement", false, ctx));
  }
  if (kind == "ball") {
    return ball_barrier(c, number(b, "radius_box_units", ctx), number(b, "speed_constant", ctx),
                        number(b, "start_time_flow_units", ctx), number(b, "end_time_flow_units", ctx),
                        flag_or(b, "complement", false, ctx));
  }
  if (kind == "half_space") {
    return half_space(vec(b, "normal", dim, ctx), number_or(b, "offset_box_units", 0.0, ctx),
                      number_or(b, "speed_box_units_per_time", 0.0, ctx), number(b, "start_time_flow_units", ctx),
                      number(b, "end_time_flow_units", ctx));
  }
  throw Error(ErrorKind::Resolution, "unknown barrier kind '" + kind + "'");
}

}  // namespace detail

/// Parses and resolves a scenario. Parse errors carry line and column; unresolved names and
/// invalid values are Resolution errors.
inline Scenario parse_scenario(const std::string& content, const std::string& path, const Overrides& ov = {}) {
  Scenario s;
  s.path = path;
  try {
    s.doc = json::parse(content);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_column(content, e.byte == 0 ? 0 : e.byte - 1);
    std::ostringstream os;
    os << path << ":" << line << ":" << col << ": " << e.what();
    throw Error(ErrorKind::Parse, os.str());
  }
  if (!s.doc.is_object()) throw Error(ErrorKind::Parse, path + ":1:1: scenario must be a JSON object");
  const json& d = s.doc;
  s.name = detail::text(d, "name", "");
  s.description = detail::text_or(d, "description", "", "");
  s.grid = detail::build_grid(d, ov.gridOverride);
  const int dim = s.grid.dim();
  s.field = detail::build_field(d, dim);
  if (s.field.dim != dim) throw Error(ErrorKind::Resolution, "ambient field dimension differs from the grid");
  s.field.bound_on(s.grid);
  s.lambda = ricX_lower_bound(s.field, s.grid);
  s.flow = detail::build_flow(d);
  s.flow.validate(s.grid);
  if (d.contains("sets")) {
    if (!d.at("sets").is_object()) throw Error(ErrorKind::Resolution, "'sets' must be an object of named shapes");
    for (const auto& [name, spec] : d.at("sets").items()) {
      s.sets[name] = SetSpec{name, spec, detail::build_shape(spec, dim, "sets." + name)};
    }
  }
  const json& checks = detail::require(d, "checks", "");
  if (!checks.is_array() || checks.empty()) throw Error(ErrorKind::Resolution, "'checks' must be a nonempty array");
  for (std::size_t k = 0; k < checks.size(); ++k) {
    const std::string ctx = "checks[" + std::to_string(k) + "]";
    const std::string id = detail::text(checks[k], "id", ctx);
    if (!theorem_from_string(id)) throw Error(ErrorKind::Resolution, "unknown check id '" + id + "' in " + ctx);
    if (checks[k].contains("ambient_field")) (void)detail::build_field(checks[k], dim);
    // every set reference must resolve before anything runs
    for (const char* key : {"set", "y", "z", "x_set", "y_set"}) {
      if (!checks[k].contains(key)) continue;
      const std::string ref = detail::text(checks[k], key, ctx);
      if (!s.sets.count(ref)) throw Error(ErrorKind::Resolution, "unknown set '" + ref + "' in " + ctx);
    }
    if (checks[k].contains("sets")) {
      for (const auto& ref : checks[k].at("sets")) {
        if (!ref.is_string() || !s.sets.count(ref.get<std::string>()))
          throw Error(ErrorKind::Resolution, "unknown set in " + ctx + ".sets");
      }
    }
    s.checks.push_back(checks[k]);
  }
  const json out = d.contains("outputs") ? d.at("outputs") : json::object();
  s.outputs.reportPath = detail::text_or(out, "report_path", s.name + ".report.jsonl", "outputs");
  s.outputs.csvPrefix = detail::text_or(out, "csv_prefix", "", "outputs");
  s.outputs.dumpEvery = static_cast<int>(detail::number_or(out, "dump_every_steps", 0.0, "outputs"));
  s.seed = static_cast<unsigned>(detail::number_or(d, "seed", 1.0, ""));
  if (ov.dumpEvery) s.outputs.dumpEvery = *ov.dumpEvery;
  if (ov.reportPath) s.outputs.reportPath = *ov.reportPath;
  if (ov.seed) s.seed = *ov.seed;
  return s;
}

inline Scenario load_scenario(const std::string& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str(), path, ov);
}

/// "#scenario" header line with the derived bounds, recorded before any check runs.
inline std::string header_line(const Scenario& s) {
  std::ostringstream os;
  os.precision(12);
  os << "#scenario name=" << s.name << " field=" << s.field.name << " chi=" << s.field.boundSupNorm
     << " boundJac=" << s.field.boundJac << " lambda=" << s.lambda << " h=" << s.grid.spacing()
     << " seed=" << s.seed;
  return os.str();
}

// ---------------------------------------------------------------------------------------------
// Runner

class Runner {
 public:
  explicit Runner(const Scenario& s) : s_(s) {}

  std::vector<TheoremCheckReport> run() {
    std::vector<TheoremCheckReport> out;
    for (std::size_t k = 0; k < s_.checks.size(); ++k) {
      const json& c = s_.checks[k];
      const std::string ctx = "checks[" + std::to_string(k) + "]";
      // a check may carry its own ambient field; bounds are recomputed on the scenario grid
      field_ = c.contains("ambient_field") ? detail::build_field(c, s_.grid.dim()) : s_.field;
      if (field_.dim != s_.grid.dim()) throw Error(ErrorKind::Resolution, ctx + ": ambient field dimension differs from the grid");
      field_.bound_on(s_.grid);
      mcflab::detail::Stopwatch sw;
      auto reports = run_check(c, ctx);
      // single-report checks get the wall time of the whole check, flows included
      if (reports.size() == 1) reports.front().runtimeSeconds = sw.seconds();
      if (c.contains("ambient_field")) {
        std::ostringstream os;
        os << "field=" << field_.name << " chi=" << field_.boundSupNorm << " lambda=" << ricX_lower_bound(field_, s_.grid) << "; ";
        for (auto& r : reports) r.detail = os.str() + r.detail;
      }
      const std::string label = detail::text_or(c, "label", "", ctx);
      for (auto& r : reports) {
        if (r.label.empty()) r.label = label.empty() ? std::string(to_string(r.theoremId)) : label;
        else if (!label.empty()) r.label = label + "/" + r.label;
      }
      out.insert(out.end(), reports.begin(), reports.end());
    }
    return out;
  }

 private:
  const Scenario& s_;
  AmbientField field_;

  [[nodiscard]] const AmbientField* transport() const { return field_.is_zero() ? nullptr : &field_; }

  [[nodiscard]] const SetSpec& set(const json& c, const std::string& key, const std::string& ctx) const {
    return s_.sets.at(detail::text(c, key, ctx));
  }

  [[nodiscard]] ScalarField field_of(const SetSpec& st) const {
    if (!st.sd) return signed_distance_from_mask(ClosedSetMask(s_.grid));
    return sample_distance(s_.grid, st.sd);
  }

  [[nodiscard]] ClosedSetMask mask_of(const SetSpec& st) const {
    if (!st.sd) return ClosedSetMask(s_.grid);
    return shape_mask(s_.grid, st.sd);
  }

  [[nodiscard]] FlowParams flow_for(const json& c, const std::string& ctx) const {
    FlowParams p = s_.flow;
    p.maxTime = detail::number_or(c, "max_time_flow_units", p.maxTime, ctx);
    p.sampleInterval = detail::number_or(c, "sample_interval_flow_units", p.sampleInterval, ctx);
    if (!(p.maxTime > 0.0)) throw Error(ErrorKind::Resolution, ctx + " needs max_time_flow_units (here or in flow)");
    return p;
  }

  [[nodiscard]] std::string output_dir() const {
    const auto parent = std::filesystem::path(s_.outputs.reportPath).parent_path();
    return parent.empty() ? std::string(".") : parent.string();
  }

  /// evolve with the scenario's CSV and dump outputs attached.
  SpacetimeTrack run_flow(const ScalarField& u0, const FlowParams& p, const std::string& tag) const {
    const bool csv = !s_.outputs.csvPrefix.empty();
    const bool dumps = s_.outputs.dumpEvery > 0;
    if (!csv && !dumps) return evolve(u0, transport(), p);
    FlowLog log;
    std::string dumpDir;
    if (dumps) {
      dumpDir = output_dir() + "/" + s_.name + "_dumps";
      std::filesystem::create_directories(dumpDir);
      log.dumpEvery = s_.outputs.dumpEvery;
      log.dump = [&](const ScalarField& u, long step) {
        write_field(u, dumpDir + "/" + tag + "_step" + std::to_string(step) + ".bin");
      };
    }
    auto tr = evolve(u0, transport(), p, &log);
    if (csv) {
      const std::string path = s_.outputs.csvPrefix + "_" + tag + ".csv";
      std::ofstream os(path);
      if (!os) throw Error(ErrorKind::Io, "cannot write " + path);
      log.write_csv(os);
    }
    return tr;
  }

  std::vector<TheoremCheckReport> run_check(const json& c, const std::string& ctx) {
    const TheoremId id = *theorem_from_string(detail::text(c, "id", ctx));
    const AmbientField* X = transport();
    const Grid& g = s_.grid;
    switch (id) {
      case TheoremId::Extinction: return extinction(c, ctx);
      case TheoremId::ShrinkingBall: return shrinking_ball(c, ctx);
      case TheoremId::FiniteSpeed: {
        const auto& st = set(c, "set", ctx);
        const auto tr = run_flow(field_of(st), flow_for(c, ctx), st.name);
        return {check_finite_speed(tr, detail::vec(c, "probe_box_units", g.dim(), ctx),
                                   detail::number(c, "outer_radius_box_units", ctx),
                                   detail::number(c, "inner_radius_box_units", ctx), field_.boundSupNorm)};
      }
      case TheoremId::Avoidance:
        return {check_avoidance(field_of(set(c, "y", ctx)), field_of(set(c, "z", ctx)), X, flow_for(c, ctx))};
      case TheoremId::DistanceTheorem:
      case TheoremId::LongTime: {
        auto r = check_exponential_distance(field_of(set(c, "y", ctx)), field_of(set(c, "z", ctx)), X, flow_for(c, ctx));
        r.theoremId = id;
        return {r};
      }
      case TheoremId::KeyProposition: {
        const auto& st = set(c, "set", ctx);
        const auto tr = run_flow(field_of(st), flow_for(c, ctx), st.name);
        return {check_key_proposition(tr, detail::build_barrier(detail::require(c, "barrier", ctx), g.dim(), ctx + ".barrier"), X)};
      }
      case TheoremId::StrongBarrierEquiv: {
        const auto& st = set(c, "set", ctx);
        FlowParams p = flow_for(c, ctx);
        p.stopAtExtinction = false;
        const auto tr = run_flow(field_of(st), p, st.name);
        const auto b = detail::build_barrier(detail::require(c, "barrier", ctx), g.dim(), ctx + ".barrier");
        if (detail::text_or(c, "mode", "strong", ctx) == "contact") return {check_weak_barrier_contact(tr, b, X)};
        return {check_strong_barrier_avoidance(tr, b, X)};
      }
      case TheoremId::BoundaryFlow:
        return {check_boundary_flow(field_of(set(c, "set", ctx)), X, flow_for(c, ctx),
                                    static_cast<int>(detail::number_or(c, "panel_size", 6, ctx)), s_.seed)};
      case TheoremId::Semigroup:
        return {check_semigroup(mask_of(set(c, "set", ctx)), detail::number(c, "s_flow_units", ctx),
                                detail::number(c, "t_flow_units", ctx), X, s_.flow)};
      case TheoremId::Containment: {
        auto res = check_containment_levels(field_of(set(c, "set", ctx)), detail::numbers(c, "levels_box_units", ctx), X,
                                            flow_for(c, ctx));
        return {res.report};
      }
      case TheoremId::ArrivalTime: {
        const auto& st = set(c, "set", ctx);
        if (detail::text(st.spec, "shape", "sets." + st.name) != "ball")
          throw Error(ErrorKind::Resolution, ctx + ": the arrival-time oracle needs a ball");
        const Vec center = detail::vec_or(st.spec, "center_box_units", g.dim(), "sets." + st.name);
        const double r0 = detail::number(st.spec, "radius_box_units", "sets." + st.name);
        const ScalarField u0 = field_of(st);
        const auto tr = run_flow(u0, flow_for(c, ctx), st.name);
        return {check_arrival_time(tr, sublevel_mask(u0), center, r0,
                                   detail::number(c, "evaluation_radius_box_units", ctx))};
      }
      case TheoremId::Compactness: return {check_compactness(g, X, flow_for(c, ctx))};
      case TheoremId::BrakkeInequality: return brakke(c, ctx);
      case TheoremId::Separator: return separator(c, ctx);
      case TheoremId::BarrierCalculus:
        return check_barrier_calculus(g.dim(), detail::number_or(c, "perturbation_constant", 1.0, ctx));
      case TheoremId::KuratowskiLimit: return kuratowski(c, ctx);
    }
    throw Error(ErrorKind::Resolution, "unsupported check in " + ctx);
  }

  std::vector<TheoremCheckReport> extinction(const json& c, const std::string& ctx) {
    const auto& st = set(c, "set", ctx);
    const double expected = detail::number(c, "expected_time_flow_units", ctx);
    const double tol = detail::number(c, "tolerance_flow_units", ctx);
    FlowParams p = flow_for(c, ctx);
    mcflab::detail::Stopwatch sw;
    const auto tr = run_flow(field_of(st), p, st.name);
    auto r = check_extinction(tr, expected, tol);
    r.runtimeSeconds = sw.seconds();
    std::vector<TheoremCheckReport> out{r};
    if (detail::flag_or(c, "grid_halving", false, ctx)) {
      // same scenario on the grid with twice the spacing; the error must drop by >= 1.5x on refinement
      mcflab::detail::Stopwatch sw2;
      const Grid& g = s_.grid;
      Vec lo = g.origin(), hi = g.origin();
      for (int a = 0; a < g.dim(); ++a) hi[a] += (g.counts()[a] - 1) * g.spacing();
      const Grid coarse = Grid::covering(lo, hi, 2.0 * g.spacing());
      const auto trc = evolve(sample_distance(coarse, st.sd), transport(), p);
      const auto Tf = extinction_time(tr), Tc = extinction_time(trc);
      TheoremCheckReport q;
      q.theoremId = TheoremId::Extinction;
      q.label = "grid-halving";
      q.tolerance = 0.0;
      std::ostringstream os;
      if (Tf && Tc) {
        const double ef = std::abs(*Tf - expected), ec = std::abs(*Tc - expected);
        const double ratio = ec / std::max(ef, 1e-15);
        q.margin = ratio - 1.5;
        os << std::setprecision(6) << "error " << ec << " at h=" << coarse.spacing() << ", " << ef << " at h=" << g.spacing()
           << ", ratio " << ratio;
      } else {
        q.margin = -1.5;
        os << "a run survived";
      }
      q.detail = os.str();
      q.finalize();
      q.runtimeSeconds = sw2.seconds();
      out.push_back(q);
    }
    return out;
  }

  std::vector<TheoremCheckReport> shrinking_ball(const json& c, const std::string& ctx) {
    const Grid& g = s_.grid;
    const int probes = static_cast<int>(detail::number_or(c, "probes", 20, ctx));
    const double slack = detail::number_or(c, "slack_box_units", 4.0 * g.spacing(), ctx);
    const double probeRadius = detail::number_or(c, "probe_radius_box_units", 1.0, ctx);
    const json& names = detail::require(c, "sets", ctx);
    std::mt19937 rng(s_.seed);
    std::uniform_real_distribution<double> U(-probeRadius, probeRadius);
    std::vector<TheoremCheckReport> out;
    for (const auto& n : names) {
      const auto& st = s_.sets.at(n.get<std::string>());
      FlowParams p = flow_for(c, ctx);
      p.stopAtExtinction = false;
      const auto tr = run_flow(field_of(st), p, st.name);
      std::vector<Vec> pts;
      for (int k = 0; k < probes; ++k) {
        Vec x(g.dim());
        for (int a = 0; a < g.dim(); ++a) x[a] = U(rng);
        pts.push_back(x);
      }
      auto r = check_shrinking_ball(tr, pts, p.band(g), slack);
      r.label = st.name;
      out.push_back(r);
    }
    return out;
  }

  static PolygonalCurve curve_from(const json& j, int verticesScale, const std::string& ctx) {
    const std::string kind = detail::text(j, "shape", ctx);
    const int n = static_cast<int>(detail::number(j, "vertices", ctx)) * verticesScale;
    const Vec c = detail::vec_or(j, "center_box_units", 2, ctx);
    const Point2 p(c[0], c[1]);
    if (kind == "circle") return PolygonalCurve::circle(p, detail::number(j, "radius_box_units", ctx), n);
    if (kind == "ellipse") {
      const auto ax = detail::numbers(j, "semi_axes_box_units", ctx);
      if (ax.size() != 2) throw Error(ErrorKind::Resolution, "ellipse needs two semi-axes");
      return PolygonalCurve::ellipse(p, ax[0], ax[1], n);
    }
    throw Error(ErrorKind::Resolution, "unknown curve shape '" + kind + "'");
  }

  static TestFunction test_function_from(const json& j, const std::string& ctx) {
    const std::string kind = detail::text(j, "kind", ctx);
    const Vec c = detail::vec_or(j, "center_box_units", 2, ctx);
    const Point2 p(c[0], c[1]);
    if (kind == "bump")
      return TestFunction::bump(p, detail::number(j, "radius_box_units", ctx), detail::number_or(j, "amplitude", 1.0, ctx),
                                detail::number_or(j, "growth_per_time", 0.0, ctx));
    if (kind == "plateau")
      return TestFunction::plateau(p, detail::number(j, "inner_radius_box_units", ctx),
                                   detail::number(j, "outer_radius_box_units", ctx));
    throw Error(ErrorKind::Resolution, "unknown test function '" + kind + "'");
  }

  std::vector<TheoremCheckReport> brakke(const json& c, const std::string& ctx) {
    if (s_.grid.dim() != 2) throw Error(ErrorKind::Resolution, "Brakke checks run on 2-D scenarios");
    const AmbientField* X = transport();
    const json& cj = detail::require(c, "curve", ctx);
    const double dt = detail::number(c, "dt_flow_units", ctx);
    const int steps = static_cast<int>(detail::number(c, "steps", ctx));
    const auto c0 = curve_from(cj, 1, ctx + ".curve");
    const auto track = curve_flow(c0, X, dt, steps);
    if (!s_.outputs.csvPrefix.empty()) {
      std::ofstream os(s_.outputs.csvPrefix + "_curve.csv");
      if (!os) throw Error(ErrorKind::Io, "cannot write curve CSV");
      write_curve_track(os, track);
    }
    std::vector<TheoremCheckReport> out;
    const json& fns = detail::require(c, "test_functions", ctx);
    const int refineSteps = static_cast<int>(detail::number_or(c, "refinement_steps", 0, ctx));
    for (std::size_t k = 0; k < fns.size(); ++k) {
      const std::string fctx = ctx + ".test_functions[" + std::to_string(k) + "]";
      const auto f = test_function_from(fns[k], fctx);
      const std::string tag = f.name + "#" + std::to_string(k);
      auto res = check_brakke_inequality(track, X, f);
      res.report.label = "inequality/" + tag;
      out.push_back(res.report);
      TheoremCheckReport forms;
      forms.theoremId = TheoremId::BrakkeInequality;
      forms.label = "forms-agree/" + tag;
      forms.tolerance = 0.0;
      forms.margin = res.formsAgree ? 0.01 - std::min(res.formDisagreement, 0.01) : -res.formDisagreement;
      std::ostringstream os;
      os << "worst relative disagreement " << res.formDisagreement << " (1% with 1e-6 floor)";
      forms.detail = os.str();
      forms.finalize();
      out.push_back(forms);
      if (refineSteps > 0) {
        auto ref = check_brakke_refinement(c0, curve_from(cj, 2, ctx + ".curve"), X, f, dt, refineSteps);
        ref.label = "refinement/" + tag;
        out.push_back(ref);
      }
    }
    if (detail::flag_or(c, "support_check", false, ctx)) {
      auto r = check_support_is_weak_flow(track, X, s_.grid, 6, s_.seed);
      r.label = "support-weak-flow";
      out.push_back(r);
    }
    return out;
  }

  std::vector<TheoremCheckReport> separator(const json& c, const std::string& ctx) {
    const auto& xs = set(c, "x_set", ctx);
    const auto& ys = set(c, "y_set", ctx);
    if (!xs.sd || !ys.sd) throw Error(ErrorKind::Precondition, "separator needs two nonempty sets");
    mcflab::detail::Stopwatch sw;
    auto chk = check_separator(mask_of(xs), mask_of(ys), &xs.sd, &ys.sd,
                               detail::number_or(c, "max_angle_degrees", 15.0, ctx));
    auto out = chk.reports;
    if (c.contains("annulus_profile")) {
      const json& a = c.at("annulus_profile");
      const std::string actx = ctx + ".annulus_profile";
      const auto& last = chk.sweep.back();
      auto r = check_annulus_profile(chk.finalProblem, last.solution, detail::vec_or(a, "center_box_units", s_.grid.dim(), actx),
                                     detail::number(a, "x_radius_box_units", actx), detail::number(a, "y_radius_box_units", actx));
      r.runtimeSeconds = sw.seconds();
      out.push_back(r);
    }
    if (!s_.outputs.csvPrefix.empty() || s_.outputs.dumpEvery > 0) {
      const auto& M = chk.sweep.back().result.M;
      ScalarField mf(M.grid);
      for (std::size_t i = 0; i < M.inside.size(); ++i) mf.values[i] = M.inside[i] ? 1.0 : 0.0;
      std::filesystem::create_directories(output_dir());
      write_field(mf, output_dir() + "/" + s_.name + "_separator_mask.bin");
    }
    if (c.contains("midsurface_flow")) {
      // restart the flow from the separator and check both half gaps
      const json& m = c.at("midsurface_flow");
      const auto& last = chk.sweep.back();
      const ScalarField m0 = signed_distance_from_mask(sublevel_mask(last.solution.h, last.result.level));
      FlowParams p = s_.flow;
      p.maxTime = detail::number(m, "max_time_flow_units", ctx + ".midsurface_flow");
      p.sampleInterval = detail::number_or(m, "sample_interval_flow_units", 0.0, ctx + ".midsurface_flow");
      auto r = check_midsurface_half_gap(field_of(xs), field_of(ys), m0, transport(), p);
      r.label = "midsurface-half-gap";
      out.push_back(r);
    }
    return out;
  }

  std::vector<TheoremCheckReport> kuratowski(const json& c, const std::string& ctx) {
    // analytic shrinking circles with extinction times T_n; the limsup must contain the limit's last point
    mcflab::detail::Stopwatch sw;
    const Grid& g = s_.grid;
    const int m = g.dim() - 1;
    const auto times = detail::numbers(c, "extinction_times_flow_units", ctx);
    const double limitT = detail::number(c, "limit_extinction_time_flow_units", ctx);
    const double t0 = detail::number(c, "window_start_flow_units", ctx);
    const int samples = static_cast<int>(detail::number(c, "samples", ctx));
    const Vec center = detail::vec_or(c, "center_box_units", g.dim(), ctx);
    if (samples < 2 || !(t0 < limitT)) throw Error(ErrorKind::Precondition, "kuratowski window needs samples >= 2 and start < limit");
    auto track_for = [&](double T) {
      SpacetimeTrack tr;
      tr.startTime = t0;
      tr.timeStep = (limitT - t0) / (samples - 1);
      for (int k = 0; k < samples; ++k) {
        const double t = t0 + (limitT - t0) * k / (samples - 1);
        const double rho2 = 2.0 * m * (T - t);
        // a circle with extinction time T; the single point at t = T, nothing afterwards
        ScalarField f = ScalarField::sample(
            g, [&](const Vec& x) { return rho2 >= 0.0 ? (x - center).norm() - std::sqrt(rho2) : empty_sentinel(g); }, t);
        tr.samples.push_back({t, f});
      }
      return tr;
    };
    std::vector<SpacetimeTrack> tracks;
    for (double T : times) tracks.push_back(track_for(T));
    const auto lim = kuratowski_limsup(tracks);
    const auto d = point_set_distance(lim.back(), center);
    TheoremCheckReport r;
    r.theoremId = TheoremId::KuratowskiLimit;
    r.tolerance = 0.0;
    r.margin = d.empty ? -1.0 : 2.0 * g.spacing() - d.value;
    r.witnessTime = limitT;
    r.witnessPoint = center;
    std::ostringstream os;
    os << "distance from the limit point to the limsup at t=" << limitT << ": " << (d.empty ? -1.0 : d.value);
    r.detail = os.str();
    r.finalize();
    r.runtimeSeconds = sw.seconds();
    return {r};
  }
};

inline std::vector<TheoremCheckReport> run_scenario(const Scenario& s) { return Runner(s).run(); }

/// Report file: header line, JSON records, then "#timing" lines.
inline void write_report_file(const Scenario& s, const std::vector<TheoremCheckReport>& reports,
                              const std::string& errorText = "") {
  const auto parent = std::filesystem::path(s.outputs.reportPath).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream os(s.outputs.reportPath);
  if (!os) throw Error(ErrorKind::Io, "cannot write report " + s.outputs.reportPath);
  os << header_line(s) << '\n';
  write_reports(os, reports);
  if (!errorText.empty()) os << "#error " << errorText << '\n';
}


struct CheckDescription {
  const char* statement;
  const char* hypotheses;
  const char* tolerance;
};

/// Static text for `describe`.
inline CheckDescription describe_check(TheoremId id) {
  switch (id) {
    case TheoremId::ShrinkingBall:
      return {"For a weak set flow Z and any point p, min(eps, dist(Z(t), p))^2 + (2m + 0.5) t is nondecreasing in t.",
              "Z a weak flow in R^(m+1) under mean curvature plus transport; eps at most the narrow band width.",
              "Nondecreasing up to slack 4h between consecutive samples; probes drawn from --seed."};
    case TheoremId::FiniteSpeed:
      return {"If dist(Z(0), p) >= R then dist(Z(t), p) >= R - (2m/r + chi) t on the window where the bound exceeds r.",
              "chi bounds |X| on the box; r < R fixed.",
              "Lower bound minus 4h, checked at every recorded sample in the window."};
    case TheoremId::Compactness:
      return {"The empty set flows to the empty set and bounded sets stay bounded.",
              "Any ambient field with finite chi.",
              "Exact (no node may enter)."};
    case TheoremId::KeyProposition:
      return {"A weak flow and a strong barrier drift apart no faster than e^(lambda t) shrinks their gap.",
              "Strong barrier disjoint from the flow at the start time; lambda from the Ric^X lower bound.",
              "Gap minus e^(lambda t)(d0 - 4h), allowed down to -4h. Start gaps at or below 4h are rejected."};
    case TheoremId::DistanceTheorem:
      return {"dist(Y(t), Z(t)) >= e^(lambda t) eta for two weak flows starting eta apart.",
              "Y(0), Z(0) disjoint closed sets, one of them compact; lambda a lower bound on Ric^X over the box.",
              "Measured gap >= e^(lambda t)(d0 - 4h) - 4h at every sample."};
    case TheoremId::LongTime:
      return {"The exponential distance bound holds on the whole recorded time interval.",
              "As for DistanceTheorem; the run length comes from max_time_flow_units.",
              "Measured gap >= e^(lambda t)(d0 - 4h) - 4h at every sample."};
    case TheoremId::Avoidance:
      return {"Two weak flows that start disjoint stay disjoint.",
              "Y(0), Z(0) disjoint closed sets, one of them compact. Overlapping starts are a precondition error.",
              "Gap stays >= -4h (one stencil of interface blur on each side)."};
    case TheoremId::StrongBarrierEquiv:
      return {"A closed spacetime set is a weak flow iff it avoids every strong barrier it starts disjoint from.",
              "Barrier regular and strong on its time interval (checked with classify_strong).",
              "Strong mode: no contact, slack 4h. Contact mode: weak barriers may touch, reported as a witness."};
    case TheoremId::BoundaryFlow:
      return {"The boundary of the biggest flow of a region is itself a weak flow.",
              "Region the closure of its interior; a panel of at least 6 strong barriers seeded away from the boundary.",
              "Zero contacts between the boundary track and any panel barrier."};
    case TheoremId::Semigroup:
      return {"F_(s+t)(C) = F_t(F_s(C)) for the biggest flow F.",
              "C closed; s, t > 0.",
              "Hausdorff distance of the two results <= 3h."};
    case TheoremId::Containment:
      return {"Level sets {u = a} of one level set solution are weak flows, pairwise disjoint, and the zero sublevel is the biggest flow.",
              "u0 a signed distance; levels distinct.",
              "Pairwise disjoint at every sample; zero level within one cell (h sqrt(dim)) of a direct run."};
    case TheoremId::Extinction:
      return {"A round sphere of radius r0 in R^(m+1) vanishes at r0^2 / (2m).",
              "No transport. Optional grid halving compares against a run at twice the spacing.",
              "Absolute time tolerance from the scenario; halving must cut the error by at least 1.5x."};
    case TheoremId::ArrivalTime:
      return {"For a mean-convex start the arrival time u solves the level set equation; {u >= t} is the flow at time t.",
              "Initial set a ball, so u = (r0^2 - |x - c|^2) / (2m) inside.",
              "max |u - exact| <= 3h on the evaluation disk; superlevel sets nested exactly; {u = t} at most 2 cells thick."};
    case TheoremId::BrakkeInequality:
      return {"d/dt of the phi-weighted length is at most -int phi H^2 + int grad phi . H + transport terms.",
              "Polygonal curve under curve-shortening plus transport; smooth compactly supported phi.",
              "lhs <= rhs + 5% relative (1e-6 floor); two rhs forms agree within 1%; refinement consistency on a halved mesh."};
    case TheoremId::Separator:
      return {"Disjoint X, Y are separated by a level set M of a harmonic function with dist(X, M) = dist(Y, M) = r.",
              "X, Y closed and disjoint with positive distance 2r.",
              "Flood-fill separation exact; distances within 3h; normal angle <= 15 degrees; annulus profile within 2%."};
    case TheoremId::BarrierCalculus:
      return {"The shrinking sphere is an exact barrier; perturbed barriers separate quadratically at rate c; classify_strong is right on known cases.",
              "Barrier functions smooth with nonzero gradient on the boundary.",
              "|Phi| <= 1e-10; separation ratio within 20% of c; classification exact."};
    case TheoremId::KuratowskiLimit:
      return {"The Kuratowski limit of weak flows is a weak flow; a sequence of spheres vanishing at T_n -> T contains the point at time T.",
              "Tracks share grid and time lattice; the tail n >= N/2 stands in for infinitely many n.",
              "Limit point within 2h of the computed limsup."};
  }
  throw Error(ErrorKind::Resolution, "unknown check id");
}

}  // namespace mcflab::scenario

#endif  // MCFLAB_SCENARIO_HPP
