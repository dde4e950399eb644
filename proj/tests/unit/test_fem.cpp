#include <cmath>
#include <vector>

#include "doctest.h"
#include "triform/errors.hpp"
#include "triform/fem.hpp"
#include "triform/mesh.hpp"

using namespace triform;

namespace {

double factorial(int n) { return n <= 1 ? 1.0 : n * factorial(n - 1); }

// Exact monomial integrals over the reference simplex:
//   triangle: int x^a y^b = a! b! / (a+b+2)!
//   tet:      int x^a y^b z^c = a! b! c! / (a+b+c+3)!
double exact_tri(int a, int b) {
  return factorial(a) * factorial(b) / factorial(a + b + 2);
}
double exact_tet(int a, int b, int c) {
  return factorial(a) * factorial(b) * factorial(c) /
         factorial(a + b + c + 3);
}

// Quadrature of x^a y^b z^c using barycentric points on the reference
// simplex where (x, y, z) = (lambda_1, lambda_2, lambda_3).
double quad_monomial(const QuadratureRule& q, int a, int b, int c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const auto& p = q.points[k];
    sum += q.weights[k] * std::pow(p[1], a) * std::pow(p[2], b) *
           (q.dim == 3 ? std::pow(p[3], c) : 1.0);
  }
  return sum;
}

}  // namespace

TEST_SUITE_BEGIN("fem");

TEST_CASE("dof layout is interleaved node-major") {
  DofMap map{10, 2};
  CHECK(map.n_fields() == 3);
  CHECK(map.total_dofs() == 30);
  CHECK(map.dof(0, 0) == 0);
  CHECK(map.dof(0, 2) == 2);
  CHECK(map.dof(4, 1) == 13);

  DofMap map3{7, 3};
  CHECK(map3.total_dofs() == 28);
  CHECK(map3.dof(6, 3) == 27);
}

TEST_CASE("quadrature weights sum to the reference measure") {
  for (int dim : {2, 3})
    for (int degree : {1, 2, 3}) {
      const auto q = quadrature(dim, degree);
      double w = 0.0;
      for (double wi : q.weights) w += wi;
      CHECK(w == doctest::Approx(q.reference_measure()).epsilon(1e-14));
      for (const auto& p : q.points) {
        double s = 0.0;
        for (int i = 0; i <= dim; ++i) {
          s += p[i];
          CHECK(p[i] >= 0.0);
          CHECK(p[i] <= 1.0);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  CHECK_THROWS_AS(quadrature(2, 4), InvalidArgument);
  CHECK_THROWS_AS(quadrature(1, 2), InvalidArgument);
}

TEST_CASE("degree-3 triangle rule integrates cubics exactly") {
  const auto q = quadrature(2, 3);
  CHECK(q.points.size() == 4);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b)
      CHECK(quad_monomial(q, a, b, 0) ==
            doctest::Approx(exact_tri(a, b)).epsilon(1e-13));
}

TEST_CASE("degree-3 tet rule integrates cubics exactly") {
  const auto q = quadrature(3, 3);
  CHECK(q.points.size() == 5);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; a + b <= 3; ++b)
      for (int c = 0; a + b + c <= 3; ++c)
        CHECK(quad_monomial(q, a, b, c) ==
              doctest::Approx(exact_tet(a, b, c)).epsilon(1e-13));
}

TEST_CASE("lower-degree rules are exact to their degree") {
  CHECK(quad_monomial(quadrature(2, 1), 1, 0, 0) ==
        doctest::Approx(exact_tri(1, 0)).epsilon(1e-14));
  CHECK(quad_monomial(quadrature(2, 2), 1, 1, 0) ==
        doctest::Approx(exact_tri(1, 1)).epsilon(1e-14));
  CHECK(quad_monomial(quadrature(3, 2), 0, 1, 1) ==
        doctest::Approx(exact_tet(0, 1, 1)).epsilon(1e-14));
}

TEST_CASE("sparse pattern follows node adjacency") {
  // two triangles sharing the diagonal 0-2: nodes 1 and 3 never share a
  // cell, so their blocks are outside the pattern
  Mesh m;
  m.dim = 2;
  m.nodes = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.cells = {0, 1, 2, 0, 2, 3};
  const DofMap map = build_dofmap(m);
  SparseSystem sys = build_sparse_system(m, map);
  CHECK(sys.n == 12);
  CHECK(sys.residual.size() == 12);

  CHECK(sys.find(map.dof(0, 0), map.dof(2, 2)) >= 0);
  CHECK(sys.find(map.dof(1, 1), map.dof(1, 2)) >= 0);
  CHECK(sys.find(map.dof(1, 0), map.dof(3, 0)) == -1);
  CHECK(sys.find(map.dof(3, 2), map.dof(1, 1)) == -1);

  // block structure: every field pair of adjacent nodes is present
  for (int f = 0; f < 3; ++f)
    for (int g = 0; g < 3; ++g)
      CHECK(sys.find(map.dof(0, f), map.dof(2, g)) >= 0);
}

TEST_CASE("scatter_add accumulates and guards the pattern") {
  Mesh m;
  m.dim = 2;
  m.nodes = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  m.cells = {0, 1, 2, 0, 2, 3};
  const DofMap map = build_dofmap(m);
  SparseSystem sys = build_sparse_system(m, map);
  sys.zero();

  const std::vector<std::int64_t> dofs = {map.dof(0, 0), map.dof(2, 1)};
  const std::vector<double> mat = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> vec = {5.0, 6.0};
  scatter_add(sys, dofs, mat, vec);
  scatter_add(sys, dofs, mat, vec);

  CHECK(sys.values[sys.find(dofs[0], dofs[0])] == doctest::Approx(2.0));
  CHECK(sys.values[sys.find(dofs[0], dofs[1])] == doctest::Approx(4.0));
  CHECK(sys.values[sys.find(dofs[1], dofs[0])] == doctest::Approx(6.0));
  CHECK(sys.values[sys.find(dofs[1], dofs[1])] == doctest::Approx(8.0));
  CHECK(sys.residual[dofs[0]] == doctest::Approx(10.0));
  CHECK(sys.residual[dofs[1]] == doctest::Approx(12.0));

  const std::vector<std::int64_t> outside = {map.dof(1, 0), map.dof(3, 0)};
  CHECK_THROWS_AS(scatter_add(sys, outside, mat, vec), PatternViolation);
}

TEST_CASE("assembly order is independent of cell storage order") {
  Mesh m = gen_rect(3, 3, 1.0, 1.0);
  auto order = assembly_order(m);
  CHECK(order.size() == m.n_cells());

  // reverse the cell storage; the canonical sequence of node sets must
  // not change
  Mesh rev = m;
  const int npc = 3;
  for (std::size_t c = 0; c < m.n_cells(); ++c)
    for (int a = 0; a < npc; ++a)
      rev.cells[c * npc + a] = m.cells[(m.n_cells() - 1 - c) * npc + a];
  auto order_rev = assembly_order(rev);
  for (std::size_t k = 0; k < order.size(); ++k) {
    auto a = m.cell_nodes(order[k]);
    auto b = rev.cell_nodes(order_rev[k]);
    CHECK(std::vector<int>(a.begin(), a.end()) ==
          std::vector<int>(b.begin(), b.end()));
  }
}

TEST_SUITE_END();
