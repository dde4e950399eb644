#include "triform/msh_io.hpp"

#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "triform/errors.hpp"

namespace triform {

namespace {

std::string next_nonempty_line(std::istream& in) {
  std::string line;
  while (std::getline(in, line)) {
    // strip trailing CR from files written on other platforms
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (!line.empty()) return line;
  }
  return {};
}

void skip_section(std::istream& in, const std::string& name) {
  const std::string end = "$End" + name.substr(1);
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
      line.pop_back();
    if (line == end) return;
  }
  throw MalformedMesh("unterminated section " + name);
}

struct RawElement {
  int type = 0;
  int tag = 0;
  std::vector<int> nodes;  // file-local node ids
};

}  // namespace

Mesh parse_msh2(std::istream& in) {
  std::vector<double> xyz;
  std::vector<int> node_ids;
  std::vector<RawElement> lines, tris, tets;
  bool saw_format = false, saw_nodes = false, saw_elements = false;

  std::string header;
  while (!(header = next_nonempty_line(in)).empty()) {
    if (header == "$MeshFormat") {
      std::string body = next_nonempty_line(in);
      std::istringstream fs(body);
      std::string version;
      int file_type = -1, data_size = -1;
      fs >> version >> file_type >> data_size;
      if (version != "2.2")
        throw UnsupportedFormat("MSH version " + version +
                                " not supported (expected 2.2)");
      if (file_type != 0 || data_size != 8)
        throw UnsupportedFormat("only ASCII MSH 2.2 with 8-byte reals is read");
      if (next_nonempty_line(in) != "$EndMeshFormat")
        throw MalformedMesh("missing $EndMeshFormat");
      saw_format = true;
    } else if (header == "$Nodes") {
      if (!saw_format) throw MalformedMesh("$Nodes before $MeshFormat");
      std::size_t count = 0;
      std::istringstream(next_nonempty_line(in)) >> count;
      node_ids.reserve(count);
      xyz.reserve(3 * count);
      for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(next_nonempty_line(in));
        int id;
        double x, y, z;
        if (!(ls >> id >> x >> y >> z))
          throw MalformedMesh("malformed node record");
        node_ids.push_back(id);
        xyz.insert(xyz.end(), {x, y, z});
      }
      if (next_nonempty_line(in) != "$EndNodes")
        throw MalformedMesh("missing $EndNodes");
      saw_nodes = true;
    } else if (header == "$Elements") {
      if (!saw_nodes) throw MalformedMesh("$Elements before $Nodes");
      std::size_t count = 0;
      std::istringstream(next_nonempty_line(in)) >> count;
      for (std::size_t i = 0; i < count; ++i) {
        std::istringstream ls(next_nonempty_line(in));
        int id, type, ntags;
        if (!(ls >> id >> type >> ntags))
          throw MalformedMesh("malformed element record");
        RawElement el;
        el.type = type;
        for (int k = 0; k < ntags; ++k) {
          int tag;
          if (!(ls >> tag)) throw MalformedMesh("malformed element tags");
          if (k == 0) el.tag = tag;  // first tag = physical tag
        }
        int nn;
        switch (type) {
          case 1: nn = 2; break;   // line
          case 2: nn = 3; break;   // triangle
          case 4: nn = 4; break;   // tetrahedron
          case 15: nn = 1; break;  // point, ignored below
          default:
            throw UnsupportedElement("element type " + std::to_string(type) +
                                     " not supported");
        }
        el.nodes.resize(nn);
        for (int k = 0; k < nn; ++k)
          if (!(ls >> el.nodes[k]))
            throw MalformedMesh("element with too few nodes");
        if (type == 1) lines.push_back(std::move(el));
        else if (type == 2) tris.push_back(std::move(el));
        else if (type == 4) tets.push_back(std::move(el));
      }
      if (next_nonempty_line(in) != "$EndElements")
        throw MalformedMesh("missing $EndElements");
      saw_elements = true;
    } else if (!header.empty() && header[0] == '$') {
      skip_section(in, header);
    } else {
      throw MalformedMesh("unexpected content: " + header);
    }
  }
  if (!saw_format || !saw_nodes || !saw_elements)
    throw MalformedMesh("missing $MeshFormat, $Nodes or $Elements section");

  Mesh mesh;
  mesh.nodes.resize(node_ids.size());
  std::unordered_map<int, int> id_map;
  id_map.reserve(node_ids.size());
  for (std::size_t i = 0; i < node_ids.size(); ++i) {
    id_map[node_ids[i]] = static_cast<int>(i);
    mesh.nodes[i] = {xyz[3 * i], xyz[3 * i + 1], xyz[3 * i + 2]};
  }
  auto remap = [&id_map](int file_id) {
    auto it = id_map.find(file_id);
    if (it == id_map.end())
      throw MalformedMesh("element references unknown node " +
                          std::to_string(file_id));
    return it->second;
  };

  const std::vector<RawElement>* cells_src;
  const std::vector<RawElement>* facets_src;
  if (!tets.empty()) {
    mesh.dim = 3;
    cells_src = &tets;
    facets_src = &tris;  // in 3D triangles are boundary facets
  } else if (!tris.empty()) {
    mesh.dim = 2;
    cells_src = &tris;
    facets_src = &lines;
  } else {
    throw MalformedMesh("no volume elements (triangles or tets) in file");
  }
  for (const auto& el : *cells_src)
    for (int id : el.nodes) mesh.cells.push_back(remap(id));
  for (const auto& el : *facets_src) {
    for (int id : el.nodes) mesh.facets.push_back(remap(id));
    mesh.facet_tags.push_back(el.tag);
  }

  fix_orientation(mesh);
  validate(mesh);
  return mesh;
}

Mesh read_msh2(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MalformedMesh("cannot open mesh file: " + path);
  return parse_msh2(in);
}

}  // namespace triform
