#include "triform/post.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "triform/errors.hpp"
#include "triform/fem.hpp"

namespace triform {

namespace {

struct CellField {
  int nn;                      // nodes per cell
  double p[4];                 // nodal pressures
  double v[4][3];              // nodal velocities
  std::array<int, 4> nodes{};  // global ids
};

CellField gather(const FieldState& state, const Mesh& mesh, std::size_t c) {
  const int nf = 1 + mesh.dim;
  CellField f{};
  f.nn = mesh.nodes_per_cell();
  auto nn = mesh.cell_nodes(c);
  for (int a = 0; a < f.nn; ++a) {
    f.nodes[a] = nn[a];
    const std::int64_t base = static_cast<std::int64_t>(nn[a]) * nf;
    f.p[a] = state.values[base];
    for (int j = 0; j < mesh.dim; ++j) f.v[a][j] = state.values[base + 1 + j];
  }
  return f;
}

template <typename PerPoint>
double quadrature_l2(const FieldState& state, const Mesh& mesh,
                     PerPoint&& sq_error) {
  const QuadratureRule quad = quadrature(mesh.dim, 3);
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellField f = gather(state, mesh, c);
    const CellGeometry geom = cell_geometry(mesh, c);
    const double jac = geom.volume / quad.reference_measure();
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const double* phi = quad.points[q].data();
      Point xq{0.0, 0.0, 0.0};
      for (int a = 0; a < f.nn; ++a)
        for (int d = 0; d < 3; ++d) xq[d] += phi[a] * mesh.nodes[f.nodes[a]][d];
      total += quad.weights[q] * jac * sq_error(f, phi, xq);
    }
  }
  return std::sqrt(total);
}

}  // namespace

double l2_error(const FieldState& state, const Mesh& mesh,
                const std::function<double(const Point&, double)>& exact) {
  const double t = state.time;
  return quadrature_l2(
      state, mesh, [&](const CellField& f, const double* phi, const Point& x) {
        double ph = 0.0;
        for (int a = 0; a < f.nn; ++a) ph += phi[a] * f.p[a];
        const double e = ph - exact(x, t);
        return e * e;
      });
}

double l2_error(
    const FieldState& state, const Mesh& mesh,
    const std::function<std::array<double, 3>(const Point&, double)>& exact) {
  const double t = state.time;
  return quadrature_l2(
      state, mesh, [&](const CellField& f, const double* phi, const Point& x) {
        const auto ve = exact(x, t);
        double sq = 0.0;
        for (int j = 0; j < mesh.dim; ++j) {
          double vh = 0.0;
          for (int a = 0; a < f.nn; ++a) vh += phi[a] * f.v[a][j];
          const double e = vh - ve[j];
          sq += e * e;
        }
        return sq;
      });
}

double div_norm(const FieldState& state, const Mesh& mesh) {
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellField f = gather(state, mesh, c);
    const CellGeometry geom = cell_geometry(mesh, c);
    double div = 0.0;
    for (int a = 0; a < f.nn; ++a)
      for (int i = 0; i < mesh.dim; ++i) div += f.v[a][i] * geom.grad_phi[a][i];
    total += geom.volume * div * div;
  }
  return std::sqrt(total);
}

double pressure_gradient_energy(const FieldState& state, const Mesh& mesh) {
  double total = 0.0;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellField f = gather(state, mesh, c);
    const CellGeometry geom = cell_geometry(mesh, c);
    double g2 = 0.0;
    for (int i = 0; i < mesh.dim; ++i) {
      double gi = 0.0;
      for (int a = 0; a < f.nn; ++a) gi += f.p[a] * geom.grad_phi[a][i];
      g2 += gi * gi;
    }
    total += geom.volume * g2;
  }
  return total;
}

ForceCoefficients drag_lift(const FieldState& state, const Mesh& mesh,
                            const MaterialParams& params, int obstacle_tag,
                            double v_mean, double ell) {
  if (!(v_mean > 0.0) || !(ell > 0.0))
    throw InvalidArgument("drag/lift normalization must be positive");
  const std::vector<int> obstacle = region_nodes(mesh, obstacle_tag);
  std::vector<char> on(mesh.n_nodes(), 0);
  for (int n : obstacle) on[n] = 1;

  const QuadratureRule quad = quadrature(mesh.dim, 3);
  const double nu = params.mu / params.rho;
  double integral[2] = {0.0, 0.0};  // drag (x), lift (y)

  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const CellField f = gather(state, mesh, c);
    bool touches = false;
    for (int a = 0; a < f.nn; ++a) touches = touches || on[f.nodes[a]];
    if (!touches) continue;  // indicator support is one element layer

    const CellGeometry geom = cell_geometry(mesh, c);
    const auto& G = geom.grad_phi;
    double chi[4];
    double gchi[3] = {0.0, 0.0, 0.0};
    for (int a = 0; a < f.nn; ++a) {
      chi[a] = on[f.nodes[a]] ? 1.0 : 0.0;
      for (int i = 0; i < mesh.dim; ++i) gchi[i] += chi[a] * G[a][i];
    }
    std::array<std::array<double, 3>, 3> gv{};
    for (int a = 0; a < f.nn; ++a)
      for (int j = 0; j < mesh.dim; ++j)
        for (int i = 0; i < mesh.dim; ++i) gv[j][i] += f.v[a][j] * G[a][i];

    const double jac = geom.volume / quad.reference_measure();
    for (std::size_t q = 0; q < quad.points.size(); ++q) {
      const double w = quad.weights[q] * jac;
      const double* phi = quad.points[q].data();
      double chi_q = 0.0, p_q = 0.0, v_q[3] = {0.0, 0.0, 0.0};
      for (int a = 0; a < f.nn; ++a) {
        chi_q += phi[a] * chi[a];
        p_q += phi[a] * f.p[a];
        for (int j = 0; j < mesh.dim; ++j) v_q[j] += phi[a] * f.v[a][j];
      }
      for (int k = 0; k < 2; ++k) {
        // w puts the indicator in component k: w_{k,i} = gchi_i
        double viscous = 0.0, convective = 0.0;
        for (int i = 0; i < mesh.dim; ++i) {
          viscous += gv[k][i] * gchi[i];
          convective += v_q[i] * gv[k][i];
        }
        integral[k] +=
            w * (nu * viscous + convective * chi_q - p_q * gchi[k]);
      }
    }
  }

  const double scale = -2.0 / (v_mean * v_mean * ell);
  return {scale * integral[0], scale * integral[1], state.time};
}

namespace {

/// Barycentric coordinates of x in cell c; the smallest one tells how
/// far outside the cell x lies (>= 0 means inside).
std::array<double, 4> barycentric(const Mesh& mesh, std::size_t c,
                                  const Point& x) {
  const CellGeometry geom = cell_geometry(mesh, c);
  const Point& x0 = mesh.nodes[mesh.cell_nodes(c)[0]];
  std::array<double, 4> lam{};
  double rest = 0.0;
  for (int a = 1; a < mesh.nodes_per_cell(); ++a) {
    double l = 0.0;
    for (int d = 0; d < 3; ++d) l += geom.grad_phi[a][d] * (x[d] - x0[d]);
    lam[a] = l;
    rest += l;
  }
  lam[0] = 1.0 - rest;
  return lam;
}

std::pair<std::size_t, std::array<double, 4>> locate(const Mesh& mesh,
                                                     const Point& x) {
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    const auto lam = barycentric(mesh, c, x);
    double low = lam[0];
    for (int a = 1; a < mesh.nodes_per_cell(); ++a) low = std::min(low, lam[a]);
    if (low >= -1e-9) return {c, lam};
  }
  std::ostringstream msg;
  msg << "point (" << x[0] << ", " << x[1] << ", " << x[2]
      << ") lies outside the mesh";
  throw OutOfDomain(msg.str());
}

}  // namespace

double eval_pressure(const FieldState& state, const Mesh& mesh,
                     const Point& x) {
  const auto [c, lam] = locate(mesh, x);
  const CellField f = gather(state, mesh, c);
  double p = 0.0;
  for (int a = 0; a < f.nn; ++a) p += lam[a] * f.p[a];
  return p;
}

std::array<double, 3> eval_velocity(const FieldState& state, const Mesh& mesh,
                                    const Point& x) {
  const auto [c, lam] = locate(mesh, x);
  const CellField f = gather(state, mesh, c);
  std::array<double, 3> v{0.0, 0.0, 0.0};
  for (int a = 0; a < f.nn; ++a)
    for (int j = 0; j < mesh.dim; ++j) v[j] += lam[a] * f.v[a][j];
  return v;
}

std::vector<LineSample> sample_line(const FieldState& state, const Mesh& mesh,
                                    const Point& a, const Point& b, int n) {
  if (n < 2) throw InvalidArgument("sample_line needs at least 2 samples");
  std::vector<LineSample> out(n);
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    Point x;
    for (int d = 0; d < 3; ++d) x[d] = (1.0 - s) * a[d] + s * b[d];
    out[k].x = x;
    out[k].pressure = eval_pressure(state, mesh, x);
    out[k].velocity = eval_velocity(state, mesh, x);
  }
  return out;
}

ReferenceTable load_reference_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open reference table " + path.string());
  ReferenceTable table;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    std::string comment =
        hash == std::string::npos ? "" : line.substr(hash + 1);
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double coord, value;
    if (row >> coord >> value) {
      header = false;
      table.coords.push_back(coord);
      table.values.push_back(value);
    } else if (header && !comment.empty()) {
      if (!table.provenance.empty()) table.provenance += '\n';
      table.provenance += comment;
    }
  }
  if (table.coords.empty())
    throw Error("reference table " + path.string() + " has no rows");
  for (std::size_t i = 0; i < table.coords.size(); ++i) {
    if (table.coords[i] < 0.0 || table.coords[i] > 1.0)
      throw Error("reference table coordinate outside [0,1]");
    if (i > 0 && table.coords[i] <= table.coords[i - 1])
      throw Error("reference table coordinates must increase");
  }
  return table;
}

double ghia_compare(std::span<const double> samples,
                    const ReferenceTable& table) {
  if (samples.size() != table.values.size())
    throw InvalidArgument("sample count does not match the table");
  if (table.values.empty()) throw InvalidArgument("empty reference table");
  double sq = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - table.values[i];
    sq += d * d;
  }
  return std::sqrt(sq / samples.size());
}

void write_vtk(const FieldState& state, const Mesh& mesh,
               const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << "# vtk DataFile Version 3.0\n";
  out << "triform snapshot t=" << state.time << "\n";
  out << "ASCII\nDATASET UNSTRUCTURED_GRID\n";

  out << "POINTS " << mesh.n_nodes() << " double\n";
  for (const Point& x : mesh.nodes)
    out << x[0] << " " << x[1] << " " << x[2] << "\n";

  const int npc = mesh.nodes_per_cell();
  out << "CELLS " << mesh.n_cells() << " " << mesh.n_cells() * (npc + 1)
      << "\n";
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    out << npc;
    for (int n : mesh.cell_nodes(c)) out << " " << n;
    out << "\n";
  }
  out << "CELL_TYPES " << mesh.n_cells() << "\n";
  const int vtk_type = mesh.dim == 2 ? 5 : 10;
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) out << vtk_type << "\n";

  const int nf = 1 + mesh.dim;
  out << "POINT_DATA " << mesh.n_nodes() << "\n";
  out << "SCALARS pressure double 1\nLOOKUP_TABLE default\n";
  for (std::size_t n = 0; n < mesh.n_nodes(); ++n)
    out << state.values[static_cast<std::int64_t>(n) * nf] << "\n";
  out << "VECTORS velocity double\n";
  for (std::size_t n = 0; n < mesh.n_nodes(); ++n) {
    const std::int64_t base = static_cast<std::int64_t>(n) * nf;
    out << state.values[base + 1] << " " << state.values[base + 2] << " "
        << (mesh.dim == 3 ? state.values[base + 3] : 0.0) << "\n";
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace triform
