#include "triform/fem.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "triform/errors.hpp"

namespace triform {

DofMap build_dofmap(const Mesh& mesh) {
  return DofMap{static_cast<int>(mesh.n_nodes()), mesh.dim};
}

QuadratureRule quadrature(int dim, int degree) {
  if (dim != 2 && dim != 3) throw InvalidArgument("quadrature: dim must be 2 or 3");
  if (degree < 1 || degree > 3)
    throw InvalidArgument("quadrature: degree " + std::to_string(degree) +
                          " not supported (1..3)");
  QuadratureRule rule;
  rule.dim = dim;
  rule.degree = degree;
  if (dim == 2) {
    if (degree == 1) {
      rule.points = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 0}};
      rule.weights = {0.5};
    } else if (degree == 2) {
      rule.points = {{2.0 / 3, 1.0 / 6, 1.0 / 6, 0},
                     {1.0 / 6, 2.0 / 3, 1.0 / 6, 0},
                     {1.0 / 6, 1.0 / 6, 2.0 / 3, 0}};
      rule.weights = {1.0 / 6, 1.0 / 6, 1.0 / 6};
    } else {
      rule.points = {{1.0 / 3, 1.0 / 3, 1.0 / 3, 0},
                     {0.6, 0.2, 0.2, 0},
                     {0.2, 0.6, 0.2, 0},
                     {0.2, 0.2, 0.6, 0}};
      rule.weights = {-27.0 / 96, 25.0 / 96, 25.0 / 96, 25.0 / 96};
    }
  } else {
    if (degree == 1) {
      rule.points = {{0.25, 0.25, 0.25, 0.25}};
      rule.weights = {1.0 / 6};
    } else if (degree == 2) {
      const double a = 0.5854101966249685;  // (5 + 3*sqrt(5)) / 20
      const double b = 0.1381966011250105;
      rule.points = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
      rule.weights = {1.0 / 24, 1.0 / 24, 1.0 / 24, 1.0 / 24};
    } else {
      rule.points = {{0.25, 0.25, 0.25, 0.25},
                     {0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6},
                     {1.0 / 6, 0.5, 1.0 / 6, 1.0 / 6},
                     {1.0 / 6, 1.0 / 6, 0.5, 1.0 / 6},
                     {1.0 / 6, 1.0 / 6, 1.0 / 6, 0.5}};
      rule.weights = {-2.0 / 15, 3.0 / 40, 3.0 / 40, 3.0 / 40, 3.0 / 40};
    }
  }
  return rule;
}

std::int64_t SparseSystem::find(std::int64_t row, std::int64_t col) const {
  const int c = static_cast<int>(col);
  auto first = col_idx.begin() + row_ptr[row];
  auto last = col_idx.begin() + row_ptr[row + 1];
  auto it = std::lower_bound(first, last, c);
  if (it == last || *it != c) return -1;
  return it - col_idx.begin();
}

void SparseSystem::add(std::int64_t row, std::int64_t col, double v) {
  std::int64_t k = find(row, col);
  if (k < 0)
    throw PatternViolation("entry (" + std::to_string(row) + "," +
                           std::to_string(col) + ") outside sparsity pattern");
  values[k] += v;
}

SparseSystem build_sparse_system(const Mesh& mesh, const DofMap& dofmap) {
  const int nf = dofmap.n_fields();
  const int npc = mesh.nodes_per_cell();

  // node adjacency (including self), sorted and unique per node
  std::vector<std::vector<int>> adj(mesh.n_nodes());
  for (std::size_t i = 0; i < mesh.n_nodes(); ++i) adj[i].push_back(static_cast<int>(i));
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    auto nn = mesh.cell_nodes(c);
    for (int a = 0; a < npc; ++a)
      for (int b = 0; b < npc; ++b)
        if (a != b) adj[nn[a]].push_back(nn[b]);
  }
  for (auto& row : adj) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
  }

  SparseSystem sys;
  sys.n = dofmap.total_dofs();
  sys.row_ptr.resize(sys.n + 1, 0);
  for (std::size_t node = 0; node < adj.size(); ++node) {
    std::int64_t per_row = static_cast<std::int64_t>(adj[node].size()) * nf;
    for (int f = 0; f < nf; ++f)
      sys.row_ptr[dofmap.dof(static_cast<int>(node), f) + 1] = per_row;
  }
  std::partial_sum(sys.row_ptr.begin(), sys.row_ptr.end(), sys.row_ptr.begin());

  sys.col_idx.resize(sys.row_ptr.back());
  for (std::size_t node = 0; node < adj.size(); ++node)
    for (int f = 0; f < nf; ++f) {
      std::int64_t k = sys.row_ptr[dofmap.dof(static_cast<int>(node), f)];
      for (int nb : adj[node])
        for (int g = 0; g < nf; ++g)
          sys.col_idx[k++] = static_cast<int>(dofmap.dof(nb, g));
    }

  sys.values.assign(sys.col_idx.size(), 0.0);
  sys.residual = Eigen::VectorXd::Zero(sys.n);
  return sys;
}

void scatter_add(SparseSystem& system, std::span<const std::int64_t> cell_dofs,
                 std::span<const double> local_matrix,
                 std::span<const double> local_vector) {
  const std::size_t n = cell_dofs.size();
  if (!local_vector.empty())
    for (std::size_t i = 0; i < n; ++i)
      system.residual[cell_dofs[i]] += local_vector[i];
  if (!local_matrix.empty())
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        system.add(cell_dofs[i], cell_dofs[j], local_matrix[i * n + j]);
}

std::vector<std::size_t> assembly_order(const Mesh& mesh) {
  const int npc = mesh.nodes_per_cell();
  std::vector<std::array<int, 4>> keys(mesh.n_cells(), {-1, -1, -1, -1});
  for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
    auto nn = mesh.cell_nodes(c);
    for (int a = 0; a < npc; ++a) keys[c][a] = nn[a];
    std::sort(keys[c].begin(), keys[c].begin() + npc);
  }
  std::vector<std::size_t> order(mesh.n_cells());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&keys](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  return order;
}

}  // namespace triform
