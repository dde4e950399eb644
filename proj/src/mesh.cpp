#include "triform/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "triform/errors.hpp"

namespace triform {

namespace {

std::array<double, 3> sub(const Point& a, const Point& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}

double max_edge_sq(const Mesh& mesh, std::span<const int> nn) {
  double m = 0.0;
  for (std::size_t a = 0; a < nn.size(); ++a)
    for (std::size_t b = a + 1; b < nn.size(); ++b) {
      auto e = sub(mesh.nodes[nn[a]], mesh.nodes[nn[b]]);
      m = std::max(m, e[0] * e[0] + e[1] * e[1] + e[2] * e[2]);
    }
  return m;
}

std::array<int, 3> canonical_face(std::span<const int> nodes) {
  std::array<int, 3> key{-1, -1, -1};
  for (std::size_t i = 0; i < nodes.size(); ++i) key[i] = nodes[i];
  std::sort(key.begin(), key.begin() + nodes.size());
  return key;
}

}  // namespace

double signed_cell_volume(const Mesh& mesh, std::size_t cell) {
  auto nn = mesh.cell_nodes(cell);
  const Point& p0 = mesh.nodes[nn[0]];
  if (mesh.dim == 2) {
    auto e1 = sub(mesh.nodes[nn[1]], p0);
    auto e2 = sub(mesh.nodes[nn[2]], p0);
    return 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]);
  }
  auto e1 = sub(mesh.nodes[nn[1]], p0);
  auto e2 = sub(mesh.nodes[nn[2]], p0);
  auto e3 = sub(mesh.nodes[nn[3]], p0);
  double det = e1[0] * (e2[1] * e3[2] - e2[2] * e3[1]) -
               e1[1] * (e2[0] * e3[2] - e2[2] * e3[0]) +
               e1[2] * (e2[0] * e3[1] - e2[1] * e3[0]);
  return det / 6.0;
}

CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell) {
  auto nn = mesh.cell_nodes(cell);
  const Point& p0 = mesh.nodes[nn[0]];
  CellGeometry g;
  const double scale = std::pow(max_edge_sq(mesh, nn), 0.5 * mesh.dim);

  if (mesh.dim == 2) {
    auto e1 = sub(mesh.nodes[nn[1]], p0);
    auto e2 = sub(mesh.nodes[nn[2]], p0);
    double det = e1[0] * e2[1] - e1[1] * e2[0];
    if (std::abs(det) <= 1e-12 * scale)
      throw DegenerateCell("cell " + std::to_string(cell) +
                           " has (near-)zero area");
    if (det < 0.0)
      throw MalformedMesh("cell " + std::to_string(cell) +
                          " has negative orientation; run fix_orientation");
    g.volume = 0.5 * det;
    g.grad_phi[1] = {e2[1] / det, -e2[0] / det, 0.0};
    g.grad_phi[2] = {-e1[1] / det, e1[0] / det, 0.0};
    for (int c = 0; c < 2; ++c)
      g.grad_phi[0][c] = -g.grad_phi[1][c] - g.grad_phi[2][c];
    return g;
  }

  auto e1 = sub(mesh.nodes[nn[1]], p0);
  auto e2 = sub(mesh.nodes[nn[2]], p0);
  auto e3 = sub(mesh.nodes[nn[3]], p0);
  auto cross = [](const std::array<double, 3>& a, const std::array<double, 3>& b) {
    return std::array<double, 3>{a[1] * b[2] - a[2] * b[1],
                                 a[2] * b[0] - a[0] * b[2],
                                 a[0] * b[1] - a[1] * b[0]};
  };
  auto c23 = cross(e2, e3);
  auto c31 = cross(e3, e1);
  auto c12 = cross(e1, e2);
  double det = e1[0] * c23[0] + e1[1] * c23[1] + e1[2] * c23[2];
  if (std::abs(det) <= 1e-12 * scale)
    throw DegenerateCell("cell " + std::to_string(cell) +
                         " has (near-)zero volume");
  if (det < 0.0)
    throw MalformedMesh("cell " + std::to_string(cell) +
                        " has negative orientation; run fix_orientation");
  g.volume = det / 6.0;
  for (int c = 0; c < 3; ++c) {
    g.grad_phi[1][c] = c23[c] / det;
    g.grad_phi[2][c] = c31[c] / det;
    g.grad_phi[3][c] = c12[c] / det;
    g.grad_phi[0][c] = -g.grad_phi[1][c] - g.grad_phi[2][c] - g.grad_phi[3][c];
  }
  return g;
}

void fix_orientation(Mesh& mesh) {
  const int npc = mesh.nodes_per_cell();
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    double v = signed_cell_volume(mesh, c);
    double scale = std::pow(max_edge_sq(mesh, mesh.cell_nodes(c)), 0.5 * mesh.dim);
    if (std::abs(v) <= 1e-12 * scale)
      throw DegenerateCell("cell " + std::to_string(c) + " is degenerate");
    if (v < 0.0)
      std::swap(mesh.cells[c * npc + npc - 2], mesh.cells[c * npc + npc - 1]);
  }
}

std::vector<BoundaryFace> boundary_faces(const Mesh& mesh) {
  // face key -> (#adjacent cells, face as first seen)
  std::map<std::array<int, 3>, std::pair<int, BoundaryFace>> faces;
  const int npc = mesh.nodes_per_cell();
  std::array<int, 3> fn{-1, -1, -1};
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    auto nn = mesh.cell_nodes(c);
    for (int skip = 0; skip < npc; ++skip) {
      int k = 0;
      for (int a = 0; a < npc; ++a)
        if (a != skip) fn[k++] = nn[a];
      auto key = canonical_face({fn.data(), static_cast<std::size_t>(mesh.dim)});
      auto [it, inserted] = faces.try_emplace(key, 0, BoundaryFace{fn, c});
      it->second.first += 1;
    }
  }
  std::vector<BoundaryFace> out;
  for (const auto& [key, v] : faces)
    if (v.first == 1) out.push_back(v.second);
  return out;
}

std::vector<int> region_nodes(const Mesh& mesh, int tag) {
  std::vector<int> found;
  bool seen = false;
  for (std::size_t f = 0; f < mesh.n_facets(); ++f) {
    if (mesh.facet_tags[f] != tag) continue;
    seen = true;
    for (int n : mesh.facet_nodes(f)) found.push_back(n);
  }
  if (!seen)
    throw UnknownRegion("no boundary facet carries tag " +
                        std::to_string(tag));
  std::sort(found.begin(), found.end());
  found.erase(std::unique(found.begin(), found.end()), found.end());
  return found;
}

void validate(const Mesh& mesh) {
  if (mesh.dim != 2 && mesh.dim != 3)
    throw MalformedMesh("mesh dimension must be 2 or 3");
  const int n = static_cast<int>(mesh.n_nodes());
  for (int id : mesh.cells)
    if (id < 0 || id >= n) throw MalformedMesh("cell node index out of range");
  for (int id : mesh.facets)
    if (id < 0 || id >= n) throw MalformedMesh("facet node index out of range");
  if (mesh.facet_tags.size() * mesh.dim != mesh.facets.size())
    throw MalformedMesh("facet/tag count mismatch");

  for (std::size_t c = 0; c < mesh.n_cells(); ++c)
    if (signed_cell_volume(mesh, c) <= 0.0)
      throw MalformedMesh("cell " + std::to_string(c) +
                          " has non-positive volume");

  // Tagged facets must coincide with the set of boundary faces, one tag each.
  std::map<std::array<int, 3>, int> boundary;
  for (const auto& f : boundary_faces(mesh))
    boundary[canonical_face({f.nodes.data(), static_cast<std::size_t>(mesh.dim)})] = 0;
  for (std::size_t f = 0; f < mesh.n_facets(); ++f) {
    auto key = canonical_face(mesh.facet_nodes(f));
    auto it = boundary.find(key);
    if (it == boundary.end())
      throw MalformedMesh("facet " + std::to_string(f) +
                          " is not a boundary face of exactly one cell");
    if (++it->second > 1)
      throw MalformedMesh("facet " + std::to_string(f) + " is tagged twice");
  }
  for (const auto& [key, count] : boundary)
    if (count == 0)
      throw MalformedMesh("untagged boundary face found; facet tags must "
                          "cover the whole boundary");
}

Mesh gen_rect(int nx, int ny, double Lx, double Ly, const RectTags& tags) {
  if (nx < 1 || ny < 1) throw InvalidArgument("gen_rect: cell counts must be >= 1");
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw InvalidArgument("gen_rect: side lengths must be positive");

  Mesh mesh;
  mesh.dim = 2;
  const int nxn = nx + 1, nyn = ny + 1;
  mesh.nodes.reserve(static_cast<std::size_t>(nxn) * nyn);
  for (int j = 0; j < nyn; ++j)
    for (int i = 0; i < nxn; ++i)
      mesh.nodes.push_back({Lx * i / nx, Ly * j / ny, 0.0});

  auto id = [nxn](int i, int j) { return j * nxn + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int n00 = id(i, j), n10 = id(i + 1, j), n01 = id(i, j + 1),
          n11 = id(i + 1, j + 1);
      mesh.cells.insert(mesh.cells.end(), {n00, n10, n11});
      mesh.cells.insert(mesh.cells.end(), {n00, n11, n01});
    }

  auto add_facet = [&mesh](int a, int b, int tag) {
    mesh.facets.insert(mesh.facets.end(), {a, b});
    mesh.facet_tags.push_back(tag);
  };
  for (int i = 0; i < nx; ++i) {
    add_facet(id(i, 0), id(i + 1, 0), tags.bottom);
    add_facet(id(i, ny), id(i + 1, ny), tags.top);
  }
  for (int j = 0; j < ny; ++j) {
    add_facet(id(0, j), id(0, j + 1), tags.left);
    add_facet(id(nx, j), id(nx, j + 1), tags.right);
  }
  fix_orientation(mesh);
  return mesh;
}

Mesh gen_pipe(int n_axial, int n_radial, double L, double D,
              const PipeTags& tags) {
  if (n_axial < 1 || n_radial < 1)
    throw InvalidArgument("gen_pipe: cell counts must be >= 1");
  if (!(L > 0.0) || !(D > 0.0))
    throw InvalidArgument("gen_pipe: length and diameter must be positive");

  Mesh mesh;
  mesh.dim = 3;
  const int m = n_radial;
  const int s = 2 * m + 1;  // nodes per side of the cross-section grid
  const double a = 0.5 * D;

  // Transfinite square->disk map; the grid boundary lands exactly on the
  // circle r = a.
  for (int k = 0; k <= n_axial; ++k) {
    double z = L * k / n_axial;
    for (int j = 0; j < s; ++j) {
      double v = -1.0 + static_cast<double>(j) / m;
      for (int i = 0; i < s; ++i) {
        double u = -1.0 + static_cast<double>(i) / m;
        double x = a * u * std::sqrt(1.0 - 0.5 * v * v);
        double y = a * v * std::sqrt(1.0 - 0.5 * u * u);
        mesh.nodes.push_back({x, y, z});
      }
    }
  }

  auto id = [s](int i, int j, int k) { return (k * s + j) * s + i; };
  // Kuhn subdivision: one tet per axis permutation, conforming across
  // shared hex faces.
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                  {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (int k = 0; k < n_axial; ++k)
    for (int j = 0; j < 2 * m; ++j)
      for (int i = 0; i < 2 * m; ++i)
        for (const auto& perm : perms) {
          std::array<int, 3> d{0, 0, 0};
          mesh.cells.push_back(id(i, j, k));
          for (int step = 0; step < 3; ++step) {
            d[perm[step]] = 1;
            mesh.cells.push_back(id(i + d[0], j + d[1], k + d[2]));
          }
        }
  fix_orientation(mesh);

  const double dz = L / n_axial;
  for (const auto& f : boundary_faces(mesh)) {
    double zmin = 1e300, zmax = -1e300;
    for (int c = 0; c < 3; ++c) {
      double z = mesh.nodes[f.nodes[c]][2];
      zmin = std::min(zmin, z);
      zmax = std::max(zmax, z);
    }
    int tag = tags.wall;
    if (zmax < 0.5 * dz)
      tag = tags.inlet;
    else if (zmin > L - 0.5 * dz)
      tag = tags.outlet;
    mesh.facets.insert(mesh.facets.end(), f.nodes.begin(), f.nodes.begin() + 3);
    mesh.facet_tags.push_back(tag);
  }
  return mesh;
}

}  // namespace triform
