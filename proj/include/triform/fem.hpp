#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "triform/mesh.hpp"

namespace triform {

/// Interleaved nodal layout over the primitives {p, v_1, .., v_dim}:
/// dof(node, field) = node*(1+dim) + field with field 0 = pressure.
struct DofMap {
  int n_nodes = 0;
  int dim = 0;

  int n_fields() const { return 1 + dim; }
  std::int64_t total_dofs() const {
    return static_cast<std::int64_t>(n_nodes) * n_fields();
  }
  std::int64_t dof(int node, int field) const {
    return static_cast<std::int64_t>(node) * n_fields() + field;
  }
};

DofMap build_dofmap(const Mesh& mesh);

/// Symmetric simplex rule in barycentric coordinates; weights sum to the
/// reference measure (1/2 triangle, 1/6 tet).
struct QuadratureRule {
  int dim = 0;
  int degree = 0;
  std::vector<std::array<double, 4>> points;  // barycentric, dim+1 used
  std::vector<double> weights;

  double reference_measure() const { return dim == 2 ? 0.5 : 1.0 / 6.0; }
};

/// Standard rules: triangle 1/3/4 points, tet 1/4/5 points for degrees
/// 1/2/3. Other degrees -> InvalidArgument.
QuadratureRule quadrature(int dim, int degree);

/// Square sparse matrix (CSR) plus the residual vector it was assembled
/// with. The pattern is fixed at construction (node-adjacency blocks);
/// assembly only overwrites values.
struct SparseSystem {
  std::int64_t n = 0;
  std::vector<std::int64_t> row_ptr;
  std::vector<int> col_idx;           // sorted within each row
  std::vector<double> values;
  Eigen::VectorXd residual;

  void zero() {
    std::fill(values.begin(), values.end(), 0.0);
    residual.setZero();
  }

  /// Index of (row, col) in values; -1 if outside the pattern.
  std::int64_t find(std::int64_t row, std::int64_t col) const;

  void add(std::int64_t row, std::int64_t col, double v);
};

/// Allocates the CSR pattern from mesh connectivity: one (1+dim)^2 block
/// per pair of nodes sharing a cell (including each node with itself).
SparseSystem build_sparse_system(const Mesh& mesh, const DofMap& dofmap);

/// Adds a local element matrix/vector into the global system.
/// local_matrix is row-major of size cell_dofs.size()^2; either span may
/// be empty to skip that part. Throws PatternViolation for entries
/// outside the pattern.
void scatter_add(SparseSystem& system, std::span<const std::int64_t> cell_dofs,
                 std::span<const double> local_matrix,
                 std::span<const double> local_vector);

/// Canonical cell processing order: cells sorted by their sorted node
/// ids. Assembling in this order makes the accumulated values independent
/// of the order cells are stored in.
std::vector<std::size_t> assembly_order(const Mesh& mesh);

}  // namespace triform
