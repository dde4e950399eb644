#include "triform/case.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "triform/errors.hpp"
#include "triform/expr.hpp"
#include "triform/fem.hpp"
#include "triform/msh_io.hpp"
#include "triform/oracles.hpp"
#include "triform/post.hpp"

namespace triform {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw InvalidArgument(where + ": " + what);
}

/// Strict object access: every key must be consumed explicitly; keys
/// starting with '_' and the documentation keys are always allowed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where)
      : j_(&j), where_(std::move(where)) {
    if (!j.is_object()) fail(where_, "must be a JSON object");
  }

  bool has(const std::string& key) {
    seen_.push_back(key);
    return j_->contains(key);
  }

  const json& get(const std::string& key) {
    if (!has(key)) fail(where_, "missing required key '" + key + "'");
    return (*j_)[key];
  }

  double number(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number()) fail(where_, "'" + key + "' must be a number");
    return v.get<double>();
  }

  double number_or(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    return number(key);
  }

  int integer(const std::string& key) {
    const json& v = get(key);
    if (!v.is_number_integer()) fail(where_, "'" + key + "' must be an integer");
    return v.get<int>();
  }

  int integer_or(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    return integer(key);
  }

  std::string text(const std::string& key) {
    const json& v = get(key);
    if (!v.is_string()) fail(where_, "'" + key + "' must be a string");
    return v.get<std::string>();
  }

  std::string text_or(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    return text(key);
  }

  /// Rejects keys that were never asked for (typo guard).
  void finish() {
    for (auto it = j_->begin(); it != j_->end(); ++it) {
      const std::string& k = it.key();
      if (!k.empty() && k.front() == '_') continue;
      if (k == "notes" || k == "comment") continue;
      if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
        fail(where_, "unknown key '" + k + "'");
    }
  }

  const json& raw() const { return *j_; }
  const std::string& where() const { return where_; }

 private:
  const json* j_;
  std::string where_;
  std::vector<std::string> seen_;
};

int field_index(const std::string& name, const std::string& where) {
  if (name == "p") return 0;
  if (name == "vx") return 1;
  if (name == "vy") return 2;
  if (name == "vz") return 3;
  fail(where, "field must be one of p, vx, vy, vz (got '" + name + "')");
}

int kind_dim(const std::string& kind) { return kind == "pipe3d" ? 3 : 2; }

void parse_mesh(ObjectReader& r, CaseConfig& cfg) {
  cfg.mesh_type = r.text("type");
  if (cfg.mesh_type == "rect") {
    cfg.nx = r.integer("nx");
    cfg.ny = r.integer("ny");
    cfg.lx = r.number("lx");
    cfg.ly = r.number("ly");
    if (cfg.nx < 1 || cfg.ny < 1) fail(r.where(), "nx, ny must be >= 1");
    if (!(cfg.lx > 0.0) || !(cfg.ly > 0.0))
      fail(r.where(), "lx, ly must be > 0");
    if (r.has("tags")) {
      ObjectReader t(r.get("tags"), r.where() + ".tags");
      cfg.rect_tags.left = t.integer_or("left", cfg.rect_tags.left);
      cfg.rect_tags.right = t.integer_or("right", cfg.rect_tags.right);
      cfg.rect_tags.bottom = t.integer_or("bottom", cfg.rect_tags.bottom);
      cfg.rect_tags.top = t.integer_or("top", cfg.rect_tags.top);
      t.finish();
    }
  } else if (cfg.mesh_type == "pipe") {
    cfg.n_axial = r.integer("n_axial");
    cfg.n_radial = r.integer("n_radial");
    cfg.length = r.number("length");
    cfg.diameter = r.number("diameter");
    if (cfg.n_axial < 1 || cfg.n_radial < 1)
      fail(r.where(), "n_axial, n_radial must be >= 1");
    if (!(cfg.length > 0.0) || !(cfg.diameter > 0.0))
      fail(r.where(), "length, diameter must be > 0");
    if (r.has("tags")) {
      ObjectReader t(r.get("tags"), r.where() + ".tags");
      cfg.pipe_tags.inlet = t.integer_or("inlet", cfg.pipe_tags.inlet);
      cfg.pipe_tags.outlet = t.integer_or("outlet", cfg.pipe_tags.outlet);
      cfg.pipe_tags.wall = t.integer_or("wall", cfg.pipe_tags.wall);
      t.finish();
    }
  } else if (cfg.mesh_type == "msh") {
    cfg.msh_path = cfg.base_dir / r.text("path");
  } else {
    fail(r.where(), "type must be rect, pipe or msh");
  }
  r.finish();
}

void parse_material(ObjectReader& r, CaseConfig& cfg) {
  cfg.material.rho = r.number("rho");
  cfg.material.mu = r.number("mu");
  cfg.material.lam = r.number("lambda");
  r.finish();
  check_material(cfg.material);
}

void parse_bcs(const json& arr, CaseConfig& cfg) {
  if (!arr.is_array()) fail("bcs", "must be an array");
  const int dim = kind_dim(cfg.kind);
  int i = 0;
  for (const json& item : arr) {
    std::ostringstream where;
    where << "bcs[" << i++ << "]";
    ObjectReader r(item, where.str());
    BoundaryCondition bc;
    bc.tag = r.integer("region");
    bc.field = field_index(r.text("field"), where.str());
    if (bc.field > dim)
      fail(where.str(), "field vz is only meaningful for 3D cases");
    bc.priority = r.integer_or("priority", 0);
    const std::string source = r.text("value");
    Expr expr;
    try {
      expr = Expr::parse(source);
    } catch (const InvalidArgument& e) {
      fail(where.str() + ".value", e.what());
    }
    bc.value = [expr](const Point& x, double t) { return expr.eval(x, t); };
    r.finish();
    cfg.bcs.push_back(std::move(bc));
    cfg.bc_sources.push_back(source);
  }
}

void parse_solver(ObjectReader& r, CaseConfig& cfg) {
  SolverConfig& s = cfg.solver;
  s.dt = r.number("dt");
  s.t_end = r.number("t_end");
  if (!(s.dt > 0.0)) fail(r.where(), "dt must be > 0");
  if (s.t_end < 0.0) fail(r.where(), "t_end must be >= 0");
  s.newton_tol = r.number_or("newton_tol", 0.0);
  s.newton_max_iter = r.integer_or("newton_max_iter", 25);
  if (s.newton_max_iter < 1) fail(r.where(), "newton_max_iter must be >= 1");
  const std::string lin = r.text_or("linear_solver", "direct");
  if (lin == "direct") {
    s.linear.kind = LinearSolverKind::DirectLU;
  } else if (lin == "bicgstab") {
    s.linear.kind = LinearSolverKind::BiCGStab;
  } else {
    fail(r.where(), "linear_solver must be direct or bicgstab");
  }
  s.ramp.t_ramp = r.number_or("ramp", 0.0);
  if (s.ramp.t_ramp < 0.0) fail(r.where(), "ramp must be >= 0");
  s.steady_tol = r.number_or("steady_tol", 0.0);
  if (s.steady_tol < 0.0) fail(r.where(), "steady_tol must be >= 0");
  if (r.has("gauge")) {
    const json& g = r.get("gauge");
    if (g.is_string()) {
      const auto mode = g.get<std::string>();
      if (mode == "auto") {
        s.gauge.mode = GaugeMode::Auto;
      } else if (mode == "off") {
        s.gauge.mode = GaugeMode::Off;
      } else {
        fail(r.where(), "gauge must be \"auto\", \"off\", a node index, or "
                        "{\"node\": n, \"value\": v}");
      }
    } else if (g.is_number_integer()) {
      s.gauge.mode = GaugeMode::Node;
      s.gauge.node = g.get<int>();
    } else if (g.is_object()) {
      ObjectReader gr(g, r.where() + ".gauge");
      s.gauge.mode = GaugeMode::Node;
      s.gauge.node = gr.integer("node");
      s.gauge.value = gr.number_or("value", 0.0);
      gr.finish();
    } else {
      fail(r.where(), "gauge must be \"auto\", \"off\", a node index, or "
                      "{\"node\": n, \"value\": v}");
    }
  }
  r.finish();
}

void parse_output(ObjectReader& r, CaseConfig& cfg) {
  OutputSpec& o = cfg.output;
  o.vtk_every = r.integer_or("vtk_every", 0);
  if (o.vtk_every < 0) fail(r.where(), "vtk_every must be >= 0");
  if (r.has("probes")) {
    const json& arr = r.get("probes");
    if (!arr.is_array()) fail(r.where(), "'probes' must be an array");
    int i = 0;
    for (const json& item : arr) {
      std::ostringstream where;
      where << r.where() << ".probes[" << i++ << "]";
      ObjectReader p(item, where.str());
      ProbeSpec probe;
      probe.name = p.text("name");
      const json& at = p.get("at");
      if (!at.is_array() || at.size() < 2 || at.size() > 3)
        fail(where.str(), "'at' must be [x, y] or [x, y, z]");
      for (std::size_t c = 0; c < at.size(); ++c) {
        if (!at[c].is_number())
          fail(where.str(), "'at' entries must be numbers");
        probe.at[static_cast<int>(c)] = at[c].get<double>();
      }
      p.finish();
      o.probes.push_back(std::move(probe));
    }
  }
  if (r.has("forces")) {
    ObjectReader f(r.get("forces"), r.where() + ".forces");
    o.forces = true;
    o.force.region = f.integer("region");
    o.force.v_mean = f.number_or("v_mean", 1.0);
    o.force.length = f.number_or("length", 1.0);
    if (!(o.force.v_mean > 0.0) || !(o.force.length > 0.0))
      fail(r.where() + ".forces", "v_mean and length must be > 0");
    f.finish();
  }
  r.finish();
}

void parse_oracle(ObjectReader& r, CaseConfig& cfg) {
  OracleSpec& o = cfg.oracle;
  o.type = r.text("type");
  if (o.type == "poiseuille_plane") {
    o.dpdx = r.number("dpdx");
    if (o.dpdx == 0.0) fail(r.where(), "dpdx must be nonzero");
  } else if (o.type == "poiseuille_pipe") {
    o.dpdz = r.number("dpdz");
    if (o.dpdz == 0.0) fail(r.where(), "dpdz must be nonzero");
    if (r.has("transient")) {
      const json& v = r.get("transient");
      if (!v.is_boolean()) fail(r.where(), "'transient' must be a boolean");
      o.transient = v.get<bool>();
    }
    o.n_terms = r.integer_or("n_terms", 50);
    if (o.n_terms < 1) fail(r.where(), "n_terms must be >= 1");
  } else if (o.type == "ghia") {
    o.u_table = cfg.base_dir / r.text("u_table");
    o.v_table = cfg.base_dir / r.text("v_table");
    o.lid_speed = r.number("lid_speed");
    if (!(o.lid_speed > 0.0)) fail(r.where(), "lid_speed must be > 0");
  } else if (o.type == "shedding") {
    o.diameter = r.number("diameter");
    o.v_ref = r.number_or("v_ref", 1.0);
    o.window = r.number_or("window", 0.5);
    if (!(o.diameter > 0.0) || !(o.v_ref > 0.0))
      fail(r.where(), "diameter and v_ref must be > 0");
    if (!(o.window > 0.0) || o.window > 1.0)
      fail(r.where(), "window must be in (0, 1]");
  } else if (o.type == "trig_mms") {
    o.velocity_amplitude = r.number_or("velocity_amplitude", 1.0);
    o.pressure_amplitude = r.number_or("pressure_amplitude", 1.0);
  } else {
    fail(r.where(),
         "type must be poiseuille_plane, poiseuille_pipe, ghia, shedding or "
         "trig_mms");
  }
  r.finish();
}

constexpr const char* kKinds[] = {"channel2d", "pipe3d", "cavity2d",
                                  "cylinder2d", "mms"};

double refine_dim(double v, int level) {
  return v;  // lengths are unchanged by refinement
  (void)level;
}

int refine_count(int n, int level) { return n << level; }

/// Material including the manufactured forcing for mms cases.
MaterialParams case_material(const CaseConfig& cfg) {
  MaterialParams mat = cfg.material;
  if (cfg.oracle.type == "trig_mms") {
    mat.g = mms_forcing(trig_mms_2d(cfg.oracle.velocity_amplitude,
                                    cfg.oracle.pressure_amplitude),
                        mat);
  }
  return mat;
}

std::string step_filename(const std::string& name, int step) {
  std::ostringstream s;
  s << name << '_' << std::setw(6) << std::setfill('0') << step << ".vtk";
  return s.str();
}

double max_velocity_magnitude(const FieldState& state, const Mesh& mesh) {
  const int nf = 1 + mesh.dim;
  double best = 0.0;
  for (std::size_t n = 0; n < mesh.n_nodes(); ++n) {
    double m2 = 0.0;
    for (int c = 1; c <= mesh.dim; ++c) {
      const double v = state.values[static_cast<std::int64_t>(n) * nf + c];
      m2 += v * v;
    }
    best = std::max(best, m2);
  }
  return std::sqrt(best);
}

/// Least-squares fit v = a + b r^2 over (r_i, v_i); returns R^2.
double parabola_r2(const std::vector<double>& r, const std::vector<double>& v) {
  const std::size_t n = r.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = r[i] * r[i];
    sx += x;
    sy += v[i];
    sxx += x * x;
    sxy += x * v[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  const double b = (n * sxy - sx * sy) / denom;
  const double a = (sy - b * sx) / n;
  double ss_res = 0, ss_tot = 0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < n; ++i) {
    const double fit = a + b * r[i] * r[i];
    ss_res += (v[i] - fit) * (v[i] - fit);
    ss_tot += (v[i] - mean) * (v[i] - mean);
  }
  if (ss_tot == 0.0) return 0.0;
  return 1.0 - ss_res / ss_tot;
}

struct ShedStats {
  int n_periods = 0;
  double mean_period = 0.0;
  double max_period_dev = 0.0;  // max |T_i - mean| / mean
  double amplitude = 0.0;       // (max - min)/2 of c_L in the window
  double strouhal = 0.0;
  double c_d_mean = 0.0, c_d_min = 0.0, c_d_max = 0.0;
  double c_l_min = 0.0, c_l_max = 0.0;
};

ShedStats shedding_stats(const std::vector<ForceCoefficients>& series,
                         const OracleSpec& o) {
  ShedStats s;
  if (series.size() < 4) return s;
  const std::size_t begin =
      static_cast<std::size_t>((1.0 - o.window) * series.size());
  const auto first = series.begin() + static_cast<std::ptrdiff_t>(begin);
  if (series.end() - first < 4) return s;

  s.c_l_min = s.c_l_max = first->c_L;
  s.c_d_min = s.c_d_max = first->c_D;
  double c_d_sum = 0.0;
  std::size_t count = 0;
  for (auto it = first; it != series.end(); ++it) {
    s.c_l_min = std::min(s.c_l_min, it->c_L);
    s.c_l_max = std::max(s.c_l_max, it->c_L);
    s.c_d_min = std::min(s.c_d_min, it->c_D);
    s.c_d_max = std::max(s.c_d_max, it->c_D);
    c_d_sum += it->c_D;
    ++count;
  }
  s.c_d_mean = c_d_sum / static_cast<double>(count);
  s.amplitude = 0.5 * (s.c_l_max - s.c_l_min);

  // zero-upcrossings of c_L about its window mean
  double mean_cl = 0.0;
  for (auto it = first; it != series.end(); ++it) mean_cl += it->c_L;
  mean_cl /= static_cast<double>(count);
  std::vector<double> crossings;
  for (auto it = first + 1; it != series.end(); ++it) {
    const double a = (it - 1)->c_L - mean_cl;
    const double b = it->c_L - mean_cl;
    if (a < 0.0 && b >= 0.0) {
      const double f = a / (a - b);
      crossings.push_back((it - 1)->time + f * (it->time - (it - 1)->time));
    }
  }
  if (crossings.size() >= 2) {
    std::vector<double> periods;
    for (std::size_t i = 1; i < crossings.size(); ++i)
      periods.push_back(crossings[i] - crossings[i - 1]);
    double sum = 0.0;
    for (double p : periods) sum += p;
    s.n_periods = static_cast<int>(periods.size());
    s.mean_period = sum / static_cast<double>(periods.size());
    for (double p : periods)
      s.max_period_dev = std::max(
          s.max_period_dev, std::abs(p - s.mean_period) / s.mean_period);
    if (s.mean_period > 0.0)
      s.strouhal = o.diameter / (s.mean_period * o.v_ref);
  }
  return s;
}

}  // namespace

CaseConfig load_case(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open case file: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }

  CaseConfig cfg;
  cfg.base_dir = path.has_parent_path() ? path.parent_path()
                                        : std::filesystem::path(".");
  ObjectReader root(j, path.filename().string());
  cfg.name = root.text_or("name", path.stem().string());
  cfg.kind = root.text("kind");
  if (std::find(std::begin(kKinds), std::end(kKinds), cfg.kind) ==
      std::end(kKinds))
    fail("kind", "must be channel2d, pipe3d, cavity2d, cylinder2d or mms");
  cfg.notes = root.text_or("notes", "");

  ObjectReader mesh(root.get("mesh"), "mesh");
  parse_mesh(mesh, cfg);
  ObjectReader material(root.get("material"), "material");
  parse_material(material, cfg);
  parse_bcs(root.get("bcs"), cfg);
  ObjectReader solver(root.get("solver"), "solver");
  parse_solver(solver, cfg);
  if (root.has("output")) {
    ObjectReader output(root.get("output"), "output");
    parse_output(output, cfg);
  }
  if (root.has("oracle")) {
    ObjectReader oracle(root.get("oracle"), "oracle");
    parse_oracle(oracle, cfg);
  }
  root.finish();

  if (cfg.kind == "mms" && cfg.oracle.type != "trig_mms")
    fail("oracle", "mms cases require the trig_mms oracle");
  if (cfg.kind == "pipe3d" && cfg.mesh_type == "rect")
    fail("mesh", "pipe3d cases need a pipe or msh mesh");
  if (cfg.kind != "pipe3d" && cfg.mesh_type == "pipe")
    fail("mesh", "only pipe3d cases may use the pipe generator");
  return cfg;
}

Mesh build_case_mesh(const CaseConfig& cfg, int level) {
  if (level < 0) throw InvalidArgument("refinement level must be >= 0");
  if (cfg.mesh_type == "rect")
    return gen_rect(refine_count(cfg.nx, level), refine_count(cfg.ny, level),
                    refine_dim(cfg.lx, level), refine_dim(cfg.ly, level),
                    cfg.rect_tags);
  if (cfg.mesh_type == "pipe")
    return gen_pipe(refine_count(cfg.n_axial, level),
                    refine_count(cfg.n_radial, level), cfg.length,
                    cfg.diameter, cfg.pipe_tags);
  if (level > 0)
    throw InvalidArgument("meshes loaded from MSH files cannot be refined");
  return read_msh2(cfg.msh_path.string());
}

double case_mesh_spacing(const CaseConfig& cfg, int level) {
  const double scale = 1.0 / static_cast<double>(1 << level);
  if (cfg.mesh_type == "rect")
    return scale * std::min(cfg.lx / cfg.nx, cfg.ly / cfg.ny);
  if (cfg.mesh_type == "pipe")
    return scale * cfg.diameter / (2.0 * cfg.n_radial);
  // MSH input: shortest edge of the loaded mesh
  const Mesh mesh = build_case_mesh(cfg, 0);
  double best = std::numeric_limits<double>::max();
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto cell = mesh.cell_nodes(c);
    const int nv = mesh.dim + 1;
    for (int a = 0; a < nv; ++a)
      for (int b = a + 1; b < nv; ++b) {
        double d2 = 0.0;
        for (int k = 0; k < 3; ++k) {
          const double d = mesh.nodes[cell[a]][k] - mesh.nodes[cell[b]][k];
          d2 += d * d;
        }
        best = std::min(best, d2);
      }
  }
  return std::sqrt(best);
}

ValidationReport validate_case(const std::filesystem::path& path) {
  ValidationReport report;
  auto error = [&report](const std::string& m) {
    report.ok = false;
    report.errors.push_back(m);
  };

  CaseConfig cfg;
  try {
    cfg = load_case(path);
  } catch (const Error& e) {
    error(e.what());
    return report;
  }

  Mesh mesh;
  try {
    mesh = build_case_mesh(cfg);
  } catch (const Error& e) {
    error(std::string("mesh: ") + e.what());
    return report;
  }

  for (std::size_t i = 0; i < cfg.bcs.size(); ++i) {
    try {
      region_nodes(mesh, cfg.bcs[i].tag);
    } catch (const UnknownRegion&) {
      std::ostringstream m;
      m << "bcs[" << i << "]: region " << cfg.bcs[i].tag
        << " does not exist in the mesh";
      error(m.str());
    }
  }
  if (cfg.output.forces) {
    try {
      region_nodes(mesh, cfg.output.force.region);
    } catch (const UnknownRegion&) {
      std::ostringstream m;
      m << "output.forces: region " << cfg.output.force.region
        << " does not exist in the mesh";
      error(m.str());
    }
  }

  // pressure-gauge solvability (the constraint builder raises
  // SingularSystem when the pressure level is undetermined)
  try {
    const DofMap dofmap = build_dofmap(mesh);
    build_constraints(mesh, dofmap, cfg.bcs, cfg.solver.gauge);
  } catch (const Error& e) {
    error(std::string("constraints: ") + e.what());
  }

  if (cfg.oracle.type == "ghia") {
    for (const auto& table : {cfg.oracle.u_table, cfg.oracle.v_table}) {
      try {
        load_reference_table(table);
      } catch (const Error& e) {
        error(std::string("oracle: ") + e.what());
      }
    }
  }
  if (cfg.oracle.type == "shedding" && !cfg.output.forces)
    error("oracle: the shedding oracle needs the output.forces block");
  if (cfg.oracle.type == "trig_mms") {
    try {
      case_material(cfg);  // runs the divergence-free lattice check
    } catch (const Error& e) {
      error(std::string("oracle: ") + e.what());
    }
  }

  // plausibility warnings (never clear `ok`)
  if (cfg.material.lam < cfg.material.mu)
    report.warnings.push_back(
        "material: lambda < mu; the divergence penalty is weak and "
        "incompressibility may be poorly enforced");
  if (cfg.solver.dt > cfg.solver.t_end && cfg.solver.t_end > 0.0)
    report.warnings.push_back("solver: dt exceeds t_end; no step will run");
  if (cfg.solver.ramp.t_ramp > cfg.solver.t_end)
    report.warnings.push_back(
        "solver: the BC ramp is longer than the simulated time");
  return report;
}

RunArtifacts run_case(const CaseConfig& cfg,
                      const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  const Mesh mesh = build_case_mesh(cfg);
  const MaterialParams mat = case_material(cfg);
  SolverConfig solver = cfg.solver;
  if (solver.n_threads < 1) solver.n_threads = 1;
  FlowProblem problem(mesh, mat, cfg.bcs, solver);

  std::ofstream probes;
  if (!cfg.output.probes.empty()) {
    probes.open(out_dir / "probes.tsv");
    probes << std::setprecision(17) << "# t";
    for (const ProbeSpec& p : cfg.output.probes) {
      probes << '\t' << p.name << ".p";
      for (int c = 0; c < mesh.dim; ++c)
        probes << '\t' << p.name << ".v" << static_cast<char>('x' + c);
    }
    probes << '\n';
  }
  std::ofstream forces;
  if (cfg.output.forces) {
    forces.open(out_dir / "forces.tsv");
    forces << std::setprecision(17) << "# t\tc_D\tc_L\n";
  }

  std::vector<ForceCoefficients> force_series;
  const auto callback = [&](int step, const FieldState& state,
                            const NewtonReport&) {
    if (probes.is_open()) {
      probes << state.time;
      for (const ProbeSpec& p : cfg.output.probes) {
        probes << '\t' << eval_pressure(state, mesh, p.at);
        const auto v = eval_velocity(state, mesh, p.at);
        for (int c = 0; c < mesh.dim; ++c) probes << '\t' << v[c];
      }
      probes << '\n';
    }
    if (cfg.output.forces) {
      ForceCoefficients f =
          drag_lift(state, mesh, mat, cfg.output.force.region,
                    cfg.output.force.v_mean, cfg.output.force.length);
      f.time = state.time;
      force_series.push_back(f);
      forces << state.time << '\t' << f.c_D << '\t' << f.c_L << '\n';
    }
    if (cfg.output.vtk_every > 0 && step % cfg.output.vtk_every == 0)
      write_vtk(state, mesh, out_dir / step_filename(cfg.name, step));
  };

  FlowProblem::MarchResult march = problem.time_march(callback);
  const FieldState& state = march.state;
  write_vtk(state, mesh, out_dir / (cfg.name + "_final.vtk"));

  RunArtifacts art;
  art.completed = march.completed;
  art.reached_steady = march.reached_steady;
  art.failure = march.failure;

  ordered_json& s = art.summary;
  s["case"] = cfg.name;
  s["kind"] = cfg.kind;
  s["completed"] = march.completed;
  if (!march.failure.empty()) s["failure"] = march.failure;
  s["steps"] = march.steps_taken;
  s["final_time"] = state.time;
  s["reached_steady"] = march.reached_steady;
  s["nodes"] = mesh.n_nodes();
  s["cells"] = mesh.n_cells();
  s["dofs"] = problem.dofmap().total_dofs();

  ordered_json newton;
  int total_iters = 0, max_iters = 0;
  bool all_converged = !march.reports.empty();
  for (const NewtonReport& r : march.reports) {
    total_iters += r.iterations;
    max_iters = std::max(max_iters, r.iterations);
    all_converged = all_converged && r.converged;
  }
  newton["total_iterations"] = total_iters;
  newton["max_iterations"] = max_iters;
  newton["all_converged"] = all_converged;
  newton["final_increment"] =
      march.reports.empty() || march.reports.back().increment_norms.empty()
          ? 0.0
          : march.reports.back().increment_norms.back();
  s["newton"] = newton;

  s["div_norm"] = div_norm(state, mesh);
  s["v_max"] = max_velocity_magnitude(state, mesh);
  s["pressure_gradient_energy"] = pressure_gradient_energy(state, mesh);

  const OracleSpec& o = cfg.oracle;
  if (o.type == "poiseuille_plane") {
    const double h = cfg.ly;
    const auto exact_v = [&](const Point& x, double) {
      return std::array<double, 3>{
          plane_poiseuille(x[1], h, o.dpdx, cfg.material.mu), 0.0, 0.0};
    };
    const auto exact_p = [&](const Point& x, double) {
      return o.dpdx * (x[0] - cfg.lx);  // zero at the outlet
    };
    const Point center{cfg.lx / 2.0, cfg.ly / 2.0, 0.0};
    const double computed = eval_velocity(state, mesh, center)[0];
    const double exact = plane_poiseuille(h / 2.0, h, o.dpdx, cfg.material.mu);
    ordered_json oracle;
    oracle["type"] = o.type;
    oracle["centerline_value"] = computed;
    oracle["centerline_exact"] = exact;
    oracle["centerline_rel_error"] = std::abs(computed - exact) / std::abs(exact);
    oracle["l2_velocity_error"] = l2_error(state, mesh, exact_v);
    oracle["l2_pressure_error"] = l2_error(state, mesh, exact_p);
    s["oracle"] = oracle;
  } else if (o.type == "poiseuille_pipe") {
    PipeSpec spec;
    spec.a = cfg.diameter / 2.0;
    spec.L = cfg.length;
    spec.dpdz = o.dpdz;
    spec.params = cfg.material;
    const BesselTable table = j0_roots(o.n_terms);
    const auto exact_at = [&](double r, double t) {
      return o.transient ? pipe_transient(r, t, spec, table)
                         : pipe_steady(r, spec);
    };
    const auto exact_v = [&](const Point& x, double t) {
      const double r = std::hypot(x[0], x[1]);
      return std::array<double, 3>{0.0, 0.0, exact_at(std::min(r, spec.a), t)};
    };
    const Point center{0.0, 0.0, cfg.length / 2.0};
    const auto v_center = eval_velocity(state, mesh, center);
    const double exact = exact_at(0.0, state.time);

    // max axial nodal velocity, for the Reynolds number
    const int nf = 1 + mesh.dim;
    double vz_max = 0.0;
    for (std::size_t n = 0; n < mesh.n_nodes(); ++n)
      vz_max = std::max(
          vz_max, state.values[static_cast<std::int64_t>(n) * nf + 3]);

    // radial profile across the mid-length diameter
    const double rr = 0.98 * spec.a;
    const auto line =
        sample_line(state, mesh, Point{-rr, 0.0, cfg.length / 2.0},
                    Point{rr, 0.0, cfg.length / 2.0}, 41);
    std::vector<double> radii, vz;
    for (const LineSample& smp : line) {
      radii.push_back(smp.x[0]);
      vz.push_back(smp.velocity[2]);
    }

    ordered_json oracle;
    oracle["type"] = o.type;
    oracle["reynolds"] = reynolds_pipe(vz_max, cfg.diameter, cfg.material);
    oracle["centerline_value"] = v_center[2];
    oracle["centerline_exact"] = exact;
    oracle["centerline_rel_error"] =
        std::abs(v_center[2] - exact) / std::abs(exact);
    oracle["profile_r2"] = parabola_r2(radii, vz);
    oracle["l2_velocity_error"] = l2_error(state, mesh, exact_v);
    s["oracle"] = oracle;
  } else if (o.type == "ghia") {
    const ReferenceTable u_table = load_reference_table(o.u_table);
    const ReferenceTable v_table = load_reference_table(o.v_table);
    std::vector<double> u_samples, v_samples;
    for (double y : u_table.coords)
      u_samples.push_back(
          eval_velocity(state, mesh,
                        Point{cfg.lx / 2.0, y * cfg.ly, 0.0})[0] /
          o.lid_speed);
    for (double x : v_table.coords)
      v_samples.push_back(
          eval_velocity(state, mesh,
                        Point{x * cfg.lx, cfg.ly / 2.0, 0.0})[1] /
          o.lid_speed);
    ordered_json oracle;
    oracle["type"] = o.type;
    oracle["ghia_rms_u"] = ghia_compare(u_samples, u_table);
    oracle["ghia_rms_v"] = ghia_compare(v_samples, v_table);
    oracle["u_table"] = u_table.provenance;
    oracle["v_table"] = v_table.provenance;
    s["oracle"] = oracle;
  } else if (o.type == "shedding") {
    const ShedStats st = shedding_stats(force_series, o);
    ordered_json oracle;
    oracle["type"] = o.type;
    oracle["n_periods"] = st.n_periods;
    oracle["mean_period"] = st.mean_period;
    oracle["max_period_dev"] = st.max_period_dev;
    oracle["amplitude"] = st.amplitude;
    oracle["strouhal"] = st.strouhal;
    oracle["c_D_mean"] = st.c_d_mean;
    oracle["c_D_min"] = st.c_d_min;
    oracle["c_D_max"] = st.c_d_max;
    oracle["c_L_min"] = st.c_l_min;
    oracle["c_L_max"] = st.c_l_max;
    s["oracle"] = oracle;
  } else if (o.type == "trig_mms") {
    const ManufacturedSolution ms =
        trig_mms_2d(o.velocity_amplitude, o.pressure_amplitude);
    ordered_json oracle;
    oracle["type"] = o.type;
    oracle["l2_velocity_error"] = l2_error(state, mesh, ms.velocity);
    oracle["l2_pressure_error"] = l2_error(state, mesh, ms.pressure);
    s["oracle"] = oracle;
  }

  std::ofstream summary(out_dir / "summary.json");
  if (!summary) throw Error("cannot write " + (out_dir / "summary.json").string());
  summary << s.dump(2) << '\n';
  return art;
}

ConvergenceReport convergence_study(const CaseConfig& cfg, int levels,
                                    const std::string& mode,
                                    const std::filesystem::path& out_dir) {
  if (levels < 1) throw InvalidArgument("levels must be >= 1");
  if (mode != "space" && mode != "time")
    throw InvalidArgument("mode must be space or time");
  const std::string& type = cfg.oracle.type;
  if (type != "poiseuille_plane" && type != "poiseuille_pipe" &&
      type != "trig_mms")
    throw InvalidArgument(
        "convergence study needs an exact reference (poiseuille_plane, "
        "poiseuille_pipe or trig_mms oracle); this case has none");
  if (mode == "space" && cfg.mesh_type == "msh")
    throw InvalidArgument(
        "space refinement needs a generated mesh (rect or pipe)");

  std::filesystem::create_directories(out_dir);
  const MaterialParams mat = case_material(cfg);

  ConvergenceReport report;
  report.mode = mode;

  for (int level = 0; level < levels; ++level) {
    const int mesh_level = (mode == "space") ? level : 0;
    const Mesh mesh = build_case_mesh(cfg, mesh_level);
    SolverConfig solver = cfg.solver;
    if (mode == "time") {
      solver.dt = cfg.solver.dt / static_cast<double>(1 << level);
      solver.steady_tol = 0.0;  // compare at exactly t_end
    }
    FlowProblem problem(mesh, mat, cfg.bcs, solver);
    FlowProblem::MarchResult march = problem.time_march();
    if (!march.completed)
      throw NonConvergence("level " + std::to_string(level) + ": " +
                           march.failure);
    const FieldState& state = march.state;

    ConvergenceRow row;
    row.level = level;
    row.h = case_mesh_spacing(cfg, mesh_level);
    row.dt = solver.dt;
    row.dofs = problem.dofmap().total_dofs();

    if (type == "poiseuille_plane") {
      const double h = cfg.ly;
      row.l2_velocity = l2_error(state, mesh, [&](const Point& x, double) {
        return std::array<double, 3>{
            plane_poiseuille(x[1], h, cfg.oracle.dpdx, cfg.material.mu), 0.0,
            0.0};
      });
      row.l2_pressure = l2_error(state, mesh, [&](const Point& x, double) {
        return cfg.oracle.dpdx * (x[0] - cfg.lx);
      });
      const double exact =
          plane_poiseuille(h / 2.0, h, cfg.oracle.dpdx, cfg.material.mu);
      const double computed =
          eval_velocity(state, mesh, Point{cfg.lx / 2.0, cfg.ly / 2.0, 0.0})[0];
      row.centerline = std::abs(computed - exact) / std::abs(exact);
    } else if (type == "poiseuille_pipe") {
      PipeSpec spec;
      spec.a = cfg.diameter / 2.0;
      spec.L = cfg.length;
      spec.dpdz = cfg.oracle.dpdz;
      spec.params = cfg.material;
      const BesselTable table = j0_roots(cfg.oracle.n_terms);
      const auto exact_at = [&](double r, double t) {
        return cfg.oracle.transient ? pipe_transient(r, t, spec, table)
                                    : pipe_steady(r, spec);
      };
      row.l2_velocity = l2_error(state, mesh, [&](const Point& x, double t) {
        const double r = std::min(std::hypot(x[0], x[1]), spec.a);
        return std::array<double, 3>{0.0, 0.0, exact_at(r, t)};
      });
      row.l2_pressure = 0.0;  // the transient pressure field is not tabulated
      const double exact = exact_at(0.0, state.time);
      const double computed =
          eval_velocity(state, mesh, Point{0.0, 0.0, cfg.length / 2.0})[2];
      row.centerline = std::abs(computed - exact) / std::abs(exact);
    } else {  // trig_mms
      const ManufacturedSolution ms = trig_mms_2d(
          cfg.oracle.velocity_amplitude, cfg.oracle.pressure_amplitude);
      row.l2_velocity = l2_error(state, mesh, ms.velocity);
      row.l2_pressure = l2_error(state, mesh, ms.pressure);
      const Point center{cfg.lx / 2.0, cfg.ly / 2.0, 0.0};
      const auto exact = ms.velocity(center, state.time);
      const auto computed = eval_velocity(state, mesh, center);
      double en = 0.0, ee = 0.0;
      for (int c = 0; c < 3; ++c) {
        en += (computed[c] - exact[c]) * (computed[c] - exact[c]);
        ee += exact[c] * exact[c];
      }
      row.centerline = ee > 0.0 ? std::sqrt(en / ee) : std::sqrt(en);
    }
    report.rows.push_back(row);
  }

  for (std::size_t i = 1; i < report.rows.size(); ++i) {
    const ConvergenceRow& a = report.rows[i - 1];
    const ConvergenceRow& b = report.rows[i];
    if (!(b.l2_velocity < a.l2_velocity)) report.monotone_velocity = false;
    if (!(b.l2_pressure < a.l2_pressure)) report.monotone_pressure = false;
    if (!(b.centerline < a.centerline)) report.monotone_centerline = false;
  }

  ordered_json doc;
  doc["case"] = cfg.name;
  doc["mode"] = mode;
  doc["monotone_velocity"] = report.monotone_velocity;
  doc["monotone_pressure"] = report.monotone_pressure;
  doc["monotone_centerline"] = report.monotone_centerline;
  doc["rows"] = ordered_json::array();
  for (const ConvergenceRow& r : report.rows) {
    ordered_json row;
    row["level"] = r.level;
    row["h"] = r.h;
    row["dt"] = r.dt;
    row["dofs"] = r.dofs;
    row["l2_velocity_error"] = r.l2_velocity;
    row["l2_pressure_error"] = r.l2_pressure;
    row["centerline_error"] = r.centerline;
    doc["rows"].push_back(row);
  }
  std::ofstream js(out_dir / "convergence.json");
  if (!js) throw Error("cannot write " + (out_dir / "convergence.json").string());
  js << doc.dump(2) << '\n';

  std::ofstream tsv(out_dir / "convergence.tsv");
  tsv << std::setprecision(17)
      << "# level\th\tdt\tdofs\tl2_velocity\tl2_pressure\tcenterline\n";
  for (const ConvergenceRow& r : report.rows)
    tsv << r.level << '\t' << r.h << '\t' << r.dt << '\t' << r.dofs << '\t'
        << r.l2_velocity << '\t' << r.l2_pressure << '\t' << r.centerline
        << '\n';
  return report;
}

}  // namespace triform
