#include <sstream>

#include "doctest.h"
#include "triform/errors.hpp"
#include "triform/msh_io.hpp"

using namespace triform;

namespace {

// unit square, two triangles, four tagged boundary lines; node ids are
// deliberately sparse to exercise the id remapping
const char* kSquareMsh = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
10 0 0 0
20 1 0 0
30 1 1 0
40 0 1 0
$EndNodes
$Elements
6
1 2 2 3 1 10 20 30
2 2 2 3 1 10 30 40
3 1 2 5 9 10 20
4 1 2 6 9 20 30
5 1 2 7 9 30 40
6 1 2 8 9 40 10
$EndElements
)";

const char* kTetMsh = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Comment
anything in here is skipped
$EndComment
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
5
1 4 2 7 1 1 2 3 4
2 2 2 1 1 1 3 2
3 2 2 1 1 1 2 4
4 2 2 1 1 2 3 4
5 2 2 1 1 1 4 3
$EndElements
)";

}  // namespace

TEST_SUITE_BEGIN("msh_io");

TEST_CASE("parses a 2D square with tagged sides") {
  std::istringstream in(kSquareMsh);
  Mesh m = parse_msh2(in);
  CHECK(m.dim == 2);
  CHECK(m.n_nodes() == 4);
  CHECK(m.n_cells() == 2);
  CHECK(m.n_facets() == 4);
  CHECK(m.nodes[0][0] == doctest::Approx(0.0));
  CHECK(m.nodes[2][0] == doctest::Approx(1.0));
  CHECK(m.nodes[2][1] == doctest::Approx(1.0));
  // physical tags carried through (first tag of each line element)
  CHECK(m.facet_tags == std::vector<int>{5, 6, 7, 8});
  CHECK_NOTHROW(validate(m));
}

TEST_CASE("parses a tetrahedron and skips unknown sections") {
  std::istringstream in(kTetMsh);
  Mesh m = parse_msh2(in);
  CHECK(m.dim == 3);
  CHECK(m.n_nodes() == 4);
  CHECK(m.n_cells() == 1);
  CHECK(m.n_facets() == 4);
  CHECK(signed_cell_volume(m, 0) > 0.0);
  CHECK_NOTHROW(validate(m));
}

TEST_CASE("2D meshes may contain line elements without harm") {
  // lines become facets; a mesh of triangles plus lines is 2D
  std::istringstream in(kSquareMsh);
  Mesh m = parse_msh2(in);
  CHECK(m.nodes_per_facet() == 2);
}

TEST_CASE("wrong version is refused") {
  std::istringstream in("$MeshFormat\n2.1 0 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(parse_msh2(in), UnsupportedFormat);
}

TEST_CASE("binary flag is refused") {
  std::istringstream in("$MeshFormat\n2.2 1 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(parse_msh2(in), UnsupportedFormat);
}

TEST_CASE("unsupported element types are loud") {
  const char* quad = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
1
1 3 2 1 1 1 2 3 4
$EndElements
)";
  std::istringstream in(quad);
  CHECK_THROWS_AS(parse_msh2(in), UnsupportedElement);
}

TEST_CASE("dangling node references are loud") {
  const char* bad = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
1
1 2 2 1 1 1 2 99
$EndElements
)";
  std::istringstream in(bad);
  CHECK_THROWS_AS(parse_msh2(in), MalformedMesh);
}

TEST_CASE("clockwise cells in the file come out positively oriented") {
  const char* cw = R"($MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
3
1 0 0 0
2 1 0 0
3 0 1 0
$EndNodes
$Elements
4
1 2 2 1 1 1 3 2
2 1 2 1 1 1 2
3 1 2 1 1 2 3
4 1 2 1 1 3 1
$EndElements
)";
  std::istringstream in(cw);
  Mesh m = parse_msh2(in);
  CHECK(signed_cell_volume(m, 0) > 0.0);
}

TEST_SUITE_END();
