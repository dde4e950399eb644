#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace triform {

using Point = std::array<double, 3>;  // z unused in 2D

/// Simplicial mesh (triangles in 2D, tetrahedra in 3D) with tagged
/// boundary facets. Immutable after construction; cells store positive
/// orientation (fix_orientation() is applied by all builders).
struct Mesh {
  int dim = 0;                    // 2 or 3
  std::vector<Point> nodes;
  std::vector<int> cells;         // (dim+1) node indices per cell
  std::vector<int> facets;        // dim node indices per boundary facet
  std::vector<int> facet_tags;    // one region id per facet

  int nodes_per_cell() const { return dim + 1; }
  int nodes_per_facet() const { return dim; }
  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_cells() const { return cells.size() / (dim + 1); }
  std::size_t n_facets() const { return facet_tags.size(); }

  std::span<const int> cell_nodes(std::size_t c) const {
    return {cells.data() + c * (dim + 1), static_cast<std::size_t>(dim + 1)};
  }
  std::span<const int> facet_nodes(std::size_t f) const {
    return {facets.data() + f * dim, static_cast<std::size_t>(dim)};
  }
};

/// Per-cell P1 geometry: measure and the (constant) shape-function
/// gradients. grad_phi[a] belongs to local node a of the cell.
struct CellGeometry {
  double volume = 0.0;
  std::array<std::array<double, 3>, 4> grad_phi{};  // [local node][component]
};

/// Exact simplex measure and P1 gradients for one cell.
/// Throws DegenerateCell on (numerically) zero volume.
CellGeometry cell_geometry(const Mesh& mesh, std::size_t cell);

/// Signed simplex volume straight from coordinates (used internally and
/// by orientation fixing; positive for correctly oriented cells).
double signed_cell_volume(const Mesh& mesh, std::size_t cell);

/// Reorders the nodes of negatively oriented cells in place (swaps the
/// last two nodes). Degenerate cells are reported via DegenerateCell.
void fix_orientation(Mesh& mesh);

/// Checks all Mesh invariants: positive volumes, node indices in range,
/// each facet a face of exactly one cell, and the tagged facets covering
/// the complete domain boundary. Throws MalformedMesh on violation.
void validate(const Mesh& mesh);

/// One face of a cell that lies on the domain boundary.
struct BoundaryFace {
  std::array<int, 3> nodes;  // dim entries used
  std::size_t cell;          // the unique adjacent cell
};

/// All cell faces that are shared by exactly one cell, i.e. the domain
/// boundary, in a deterministic order.
std::vector<BoundaryFace> boundary_faces(const Mesh& mesh);

/// All nodes lying on facets carrying the given tag, ascending and
/// unique. Tags that occur nowhere raise UnknownRegion.
std::vector<int> region_nodes(const Mesh& mesh, int tag);

struct RectTags {
  int left = 1;
  int right = 2;
  int bottom = 3;
  int top = 4;
};

/// Structured triangulation of [0,Lx] x [0,Ly]: nx*ny quads, each split
/// into two triangles. Sides carry the given tags; corners belong to
/// both adjacent side facets.
Mesh gen_rect(int nx, int ny, double Lx, double Ly, const RectTags& tags = {});

struct PipeTags {
  int inlet = 1;   // z = 0
  int outlet = 2;  // z = L
  int wall = 3;
};

/// Tetrahedral mesh of a circular pipe of diameter D and length L along
/// z. The cross-section is a transfinite mapping of a structured
/// (2*n_radial+1)^2 grid onto the disk; the extruded hexahedra are split
/// into six tets each (face-conforming subdivision).
Mesh gen_pipe(int n_axial, int n_radial, double L, double D,
              const PipeTags& tags = {});

}  // namespace triform
