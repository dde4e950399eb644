#pragma once

#include <iosfwd>
#include <string>

#include "triform/mesh.hpp"

namespace triform {

/// Parses the MSH 2.2 ASCII subset: $MeshFormat ("2.2 0 8"), $Nodes and
/// $Elements; unknown sections are skipped. Volume cells come from
/// element type 2 (triangle) or 4 (tet), boundary facets from type 1
/// (line, 2D) or 2 (triangle, 3D) and carry their first (physical) tag.
/// The returned mesh is orientation-fixed and fully validated.
Mesh parse_msh2(std::istream& in);

/// Convenience wrapper; throws MalformedMesh if the file cannot be read.
Mesh read_msh2(const std::string& path);

}  // namespace triform
