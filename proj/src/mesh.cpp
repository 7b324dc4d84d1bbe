#include "stabfem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace stabfem {

namespace {

constexpr int kEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

double signed_area(Vec2 a, Vec2 b, Vec2 c) { return 0.5 * cross(b - a, c - a); }

Vec2 node_position(const std::array<Vec2, 3>& v, const Barycentric& l) {
  return {l[0] * v[0].x + l[1] * v[1].x + l[2] * v[2].x,
          l[0] * v[0].y + l[1] * v[1].y + l[2] * v[2].y};
}

using Key = std::pair<long long, long long>;

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    return std::hash<long long>()(k.first * 1000003LL ^ k.second);
  }
};

/// Snaps coordinates to an integer lattice, wrapping periodic directions.
class CoordinateKeys {
 public:
  CoordinateKeys(const TriMesh& mesh, double quantum) : mesh_(mesh) {
    if (mesh.periodic) {
      kx_ = std::max(1LL, std::llround(mesh.period.x / quantum));
      ky_ = std::max(1LL, std::llround(mesh.period.y / quantum));
      qx_ = mesh.period.x / kx_;
      qy_ = mesh.period.y / ky_;
    } else {
      qx_ = qy_ = quantum;
    }
  }
  Key operator()(Vec2 p) const {
    long long ix = std::llround((p.x - mesh_.origin.x) / qx_);
    long long iy = std::llround((p.y - mesh_.origin.y) / qy_);
    if (mesh_.periodic) {
      ix = ((ix % kx_) + kx_) % kx_;
      iy = ((iy % ky_) + ky_) % ky_;
    }
    return {ix, iy};
  }
  Vec2 canonical(Vec2 p) const {
    if (!mesh_.periodic) return p;
    const Key k = (*this)(p);
    return {mesh_.origin.x + k.first * qx_, mesh_.origin.y + k.second * qy_};
  }
  Shift shift(Vec2 p) const {
    if (!mesh_.periodic) return {0, 0};
    const Vec2 c = canonical(p);
    return {static_cast<int>(std::lround((p.x - c.x) / mesh_.period.x)),
            static_cast<int>(std::lround((p.y - c.y) / mesh_.period.y))};
  }

 private:
  const TriMesh& mesh_;
  long long kx_ = 1, ky_ = 1;
  double qx_ = 1.0, qy_ = 1.0;
};

double min_edge_length(const TriMesh& mesh) {
  double h = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto v = mesh.cell_vertices(c);
    for (const auto& e : kEdges) h = std::min(h, norm(v[e[1]] - v[e[0]]));
  }
  return h;
}

/// Strips comments and splits a line into tokens.
std::vector<std::string> tokens_of(const std::string& line) {
  std::string body = line.substr(0, line.find('#'));
  std::istringstream ss(body);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected a number, got '" + s + "'", line);
  }
}

long long to_int(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("expected an integer, got '" + s + "'", line);
  }
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}
  /// Next non-empty tokenized line; empty result at end of input.
  std::vector<std::string> next() {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      auto t = tokens_of(line);
      if (!t.empty()) return t;
    }
    return {};
  }
  int line() const { return line_; }

 private:
  std::istream& in_;
  int line_ = 0;
};

void check_and_orient(TriMesh& mesh, const std::vector<int>& lines) {
  for (int c = 0; c < mesh.num_cells(); ++c) {
    auto& t = mesh.triangles[c];
    const double a = signed_area(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    const double scale = std::max({norm(mesh.vertices[t[1]] - mesh.vertices[t[0]]),
                                   norm(mesh.vertices[t[2]] - mesh.vertices[t[0]]), 1e-300});
    if (!(std::abs(a) > 1e-14 * scale * scale))
      throw ParseError("degenerate triangle " + std::to_string(c),
                       lines.empty() ? 0 : lines[c]);
    if (a < 0) std::swap(t[1], t[2]);
  }
}

}  // namespace

double TriMesh::area(int c) const {
  const auto v = cell_vertices(c);
  return signed_area(v[0], v[1], v[2]);
}

double TriMesh::diameter(int c) const {
  const auto v = cell_vertices(c);
  double h = 0.0;
  for (const auto& e : kEdges) h = std::max(h, norm(v[e[1]] - v[e[0]]));
  return h;
}

TriMesh structured_mesh(Pattern pattern, int nx, int ny, Vec2 size, bool periodic, Vec2 origin) {
  if (nx < 1 || ny < 1 || !(size.x > 0) || !(size.y > 0))
    throw InvalidArgument("structured_mesh: need nx, ny >= 1 and a positive box");
  TriMesh mesh;
  mesh.origin = origin;
  mesh.period = size;
  mesh.periodic = periodic;
  const double hx = size.x / nx, hy = size.y / ny;
  mesh.cell_size = std::max(hx, hy);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.push_back({origin.x + i * hx, origin.y + j * hy});
  auto v = [&](int i, int j) { return j * (nx + 1) + i; };
  const int centers = static_cast<int>(mesh.vertices.size());
  if (pattern == Pattern::X)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        mesh.vertices.push_back({origin.x + (i + 0.5) * hx, origin.y + (j + 0.5) * hy});
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int a = v(i, j), b = v(i + 1, j), c = v(i + 1, j + 1), d = v(i, j + 1);
      if (pattern == Pattern::X) {
        const int m = centers + j * nx + i;
        mesh.triangles.push_back({a, b, m});
        mesh.triangles.push_back({b, c, m});
        mesh.triangles.push_back({c, d, m});
        mesh.triangles.push_back({d, a, m});
      } else {
        mesh.triangles.push_back({a, b, c});
        mesh.triangles.push_back({a, c, d});
      }
    }
  return mesh;
}

void orient_counter_clockwise(TriMesh& mesh) { check_and_orient(mesh, {}); }

TriMesh read_native_mesh(std::istream& in) {
  LineReader reader(in);
  auto t = reader.next();
  if (t.size() != 2 || t[0] != "trimesh" || t[1] != "1")
    throw ParseError("expected header 'trimesh 1'", reader.line());
  t = reader.next();
  if (t.size() != 2 || t[0] != "nodes") throw ParseError("expected 'nodes N'", reader.line());
  const long long n = to_int(t[1], reader.line());
  if (n < 3) throw ParseError("need at least 3 nodes", reader.line());
  TriMesh mesh;
  for (long long i = 0; i < n; ++i) {
    t = reader.next();
    if (t.size() != 2) throw ParseError("expected 'x y'", reader.line());
    mesh.vertices.push_back({to_double(t[0], reader.line()), to_double(t[1], reader.line())});
  }
  t = reader.next();
  if (t.size() != 2 || t[0] != "triangles")
    throw ParseError("expected 'triangles M'", reader.line());
  const long long m = to_int(t[1], reader.line());
  if (m < 1) throw ParseError("need at least one triangle", reader.line());
  std::vector<int> lines;
  for (long long c = 0; c < m; ++c) {
    t = reader.next();
    if (t.size() != 3) throw ParseError("expected 'i j k'", reader.line());
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      const long long idx = to_int(t[k], reader.line());
      if (idx < 0 || idx >= n)
        throw ParseError("node index " + t[k] + " out of range", reader.line());
      tri[k] = static_cast<int>(idx);
    }
    mesh.triangles.push_back(tri);
    lines.push_back(reader.line());
  }
  if (!reader.next().empty()) throw ParseError("trailing data after triangles", reader.line());
  check_and_orient(mesh, lines);
  return mesh;
}

TriMesh read_gmsh_mesh(std::istream& in, std::vector<std::string>* warnings) {
  LineReader reader(in);
  TriMesh mesh;
  std::unordered_map<long long, int> node_index;
  std::vector<std::array<long long, 3>> raw_triangles;
  std::vector<int> lines;
  std::map<long long, long long> skipped;
  bool have_nodes = false, have_elements = false;
  for (auto t = reader.next(); !t.empty(); t = reader.next()) {
    if (t[0] == "$MeshFormat") {
      t = reader.next();
      if (t.size() < 2) throw ParseError("malformed $MeshFormat", reader.line());
      const double version = to_double(t[0], reader.line());
      if (version < 2.0 || version >= 3.0)
        throw ParseError("unsupported gmsh version " + t[0] + " (need 2.x)", reader.line());
      if (t[1] != "0") throw ParseError("binary gmsh files are not supported", reader.line());
      t = reader.next();
      if (t.empty() || t[0] != "$EndMeshFormat")
        throw ParseError("expected $EndMeshFormat", reader.line());
    } else if (t[0] == "$Nodes") {
      t = reader.next();
      if (t.size() != 1) throw ParseError("expected node count", reader.line());
      const long long n = to_int(t[0], reader.line());
      for (long long i = 0; i < n; ++i) {
        t = reader.next();
        if (t.size() < 3) throw ParseError("expected 'id x y [z]'", reader.line());
        const long long id = to_int(t[0], reader.line());
        if (node_index.count(id)) throw ParseError("duplicate node id " + t[0], reader.line());
        node_index[id] = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back({to_double(t[1], reader.line()), to_double(t[2], reader.line())});
      }
      t = reader.next();
      if (t.empty() || t[0] != "$EndNodes") throw ParseError("expected $EndNodes", reader.line());
      have_nodes = true;
    } else if (t[0] == "$Elements") {
      t = reader.next();
      if (t.size() != 1) throw ParseError("expected element count", reader.line());
      const long long n = to_int(t[0], reader.line());
      for (long long i = 0; i < n; ++i) {
        t = reader.next();
        if (t.size() < 3) throw ParseError("malformed element line", reader.line());
        const long long type = to_int(t[1], reader.line());
        const long long ntags = to_int(t[2], reader.line());
        if (ntags < 0 || static_cast<long long>(t.size()) < 3 + ntags)
          throw ParseError("malformed element tags", reader.line());
        if (type != 2) {
          ++skipped[type];
          continue;
        }
        if (static_cast<long long>(t.size()) != 3 + ntags + 3)
          throw ParseError("triangle needs 3 node ids", reader.line());
        std::array<long long, 3> ids{};
        for (int k = 0; k < 3; ++k) ids[k] = to_int(t[3 + ntags + k], reader.line());
        raw_triangles.push_back(ids);
        lines.push_back(reader.line());
      }
      t = reader.next();
      if (t.empty() || t[0] != "$EndElements")
        throw ParseError("expected $EndElements", reader.line());
      have_elements = true;
    } else if (t[0].size() > 1 && t[0][0] == '$') {
      const std::string end = "$End" + t[0].substr(1);
      for (t = reader.next(); !t.empty() && t[0] != end; t = reader.next()) {
      }
      if (t.empty()) throw ParseError("unterminated section " + end, reader.line());
    } else {
      throw ParseError("unexpected content '" + t[0] + "'", reader.line());
    }
  }
  if (!have_nodes || !have_elements)
    throw ParseError("missing $Nodes or $Elements section", reader.line());
  for (std::size_t c = 0; c < raw_triangles.size(); ++c) {
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      auto it = node_index.find(raw_triangles[c][k]);
      if (it == node_index.end())
        throw ParseError("unknown node id " + std::to_string(raw_triangles[c][k]), lines[c]);
      tri[k] = it->second;
    }
    mesh.triangles.push_back(tri);
  }
  if (mesh.triangles.empty()) throw ParseError("no triangles in file", reader.line());
  if (warnings)
    for (const auto& [type, count] : skipped)
      warnings->push_back("skipped " + std::to_string(count) + " gmsh elements of type " +
                          std::to_string(type));
  check_and_orient(mesh, lines);
  return mesh;
}

TriMesh read_mesh_file(const std::string& path, std::vector<std::string>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mesh file '" + path + "'");
  std::string first;
  std::streampos start = in.tellg();
  while (std::getline(in, first)) {
    if (!tokens_of(first).empty()) break;
  }
  in.clear();
  in.seekg(start);
  try {
    if (first.find("$MeshFormat") != std::string::npos) return read_gmsh_mesh(in, warnings);
    return read_native_mesh(in);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what(), e.line());
  }
}

void write_native_mesh(std::ostream& out, const TriMesh& mesh) {
  out.precision(17);
  out << "trimesh 1\nnodes " << mesh.vertices.size() << "\n";
  for (const auto& v : mesh.vertices) out << v.x << " " << v.y << "\n";
  out << "triangles " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) out << t[0] << " " << t[1] << " " << t[2] << "\n";
}

DofMap build_dof_map(const TriMesh& mesh, const ReferenceElement& element) {
  if (mesh.triangles.empty()) throw InvalidArgument("build_dof_map: empty mesh");
  const double quantum = 1e-7 * min_edge_length(mesh);
  const CoordinateKeys keys(mesh, quantum);
  const int nc = mesh.num_cells();
  const int nloc = element.size();

  std::vector<std::vector<Vec2>> positions(nc, std::vector<Vec2>(nloc));
  for (int c = 0; c < nc; ++c) {
    const auto v = mesh.cell_vertices(c);
    for (int i = 0; i < nloc; ++i) positions[c][i] = node_position(v, element.nodes[i]);
  }

  DofMap map;
  std::unordered_map<Key, int, KeyHash> id_of;
  auto assign = [&](Vec2 p) {
    const Key k = keys(p);
    auto [it, inserted] = id_of.emplace(k, map.ndofs);
    if (inserted) {
      map.dof_coords.push_back(keys.canonical(p));
      ++map.ndofs;
    }
    return it->second;
  };

  std::vector<char> used(mesh.vertices.size(), 0);
  for (const auto& t : mesh.triangles)
    for (int k : t) used[k] = 1;
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v)
    if (used[v]) assign(mesh.vertices[v]);
  map.n_vertex_dofs = map.ndofs;

  struct EdgeInfo {
    int a, b;
    Key mid;
    std::vector<BoundaryEdge> users;
  };
  std::map<Key, EdgeInfo> edges;
  for (int c = 0; c < nc; ++c) {
    for (int e = 0; e < 3; ++e) {
      const Vec2 pa = positions[c][kEdges[e][0]], pb = positions[c][kEdges[e][1]];
      const Key mid = keys(0.5 * (pa + pb));
      auto it = edges.find(mid);
      if (it == edges.end()) {
        int a = id_of.at(keys(pa)), b = id_of.at(keys(pb));
        it = edges.emplace(mid, EdgeInfo{std::min(a, b), std::max(a, b), mid, {}}).first;
      }
      it->second.users.push_back({c, e});
      if (it->second.users.size() > 2)
        throw InvalidArgument("non-manifold edge shared by more than two triangles (cell " +
                              std::to_string(c) + ")");
    }
  }
  std::vector<const EdgeInfo*> sorted;
  for (const auto& [k, info] : edges) sorted.push_back(&info);
  std::sort(sorted.begin(), sorted.end(), [](const EdgeInfo* x, const EdgeInfo* y) {
    return std::tie(x->a, x->b, x->mid) < std::tie(y->a, y->b, y->mid);
  });
  for (const EdgeInfo* info : sorted) {
    const auto [c, e] = info->users.front();
    std::vector<int> nodes = element.edge_nodes[e];
    const int first = id_of.at(keys(positions[c][nodes.front()]));
    if (first != info->a) std::reverse(nodes.begin(), nodes.end());
    for (std::size_t k = 1; k + 1 < nodes.size(); ++k) assign(positions[c][nodes[k]]);
  }
  map.n_edge_dofs = map.ndofs - map.n_vertex_dofs;
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < nloc; ++i)
      if (element.kinds[i] == NodeKind::Interior) assign(positions[c][i]);
  map.n_interior_dofs = map.ndofs - map.n_vertex_dofs - map.n_edge_dofs;

  map.cell_dofs.assign(nc, std::vector<int>(nloc));
  map.cell_shifts.assign(nc, std::vector<Shift>(nloc));
  for (int c = 0; c < nc; ++c)
    for (int i = 0; i < nloc; ++i) {
      map.cell_dofs[c][i] = id_of.at(keys(positions[c][i]));
      map.cell_shifts[c][i] = keys.shift(positions[c][i]);
    }

  map.on_boundary.assign(map.ndofs, 0);
  for (const EdgeInfo* info : sorted) {
    if (info->users.size() == 1) {
      const auto be = info->users.front();
      map.boundary_edges.push_back(be);
      for (int i : element.edge_nodes[be.local_edge])
        map.on_boundary[map.cell_dofs[be.cell][i]] = 1;
      continue;
    }
    Face f;
    for (int s = 0; s < 2; ++s) {
      f.cell[s] = info->users[s].cell;
      f.local_edge[s] = info->users[s].local_edge;
    }
    const auto va = mesh.cell_vertices(f.cell[0]);
    const auto vb = mesh.cell_vertices(f.cell[1]);
    const Vec2 a0 = va[kEdges[f.local_edge[0]][0]], a1 = va[kEdges[f.local_edge[0]][1]];
    const Vec2 b0 = vb[kEdges[f.local_edge[1]][0]], b1 = vb[kEdges[f.local_edge[1]][1]];
    f.offset = 0.5 * (a0 + a1) - 0.5 * (b0 + b1);
    f.shift = {0, 0};
    if (mesh.periodic)
      f.shift = {static_cast<int>(std::lround(f.offset.x / mesh.period.x)),
                 static_cast<int>(std::lround(f.offset.y / mesh.period.y))};
    const Vec2 t = a1 - a0;
    f.length = norm(t);
    f.normal = {t.y / f.length, -t.x / f.length};
    map.faces.push_back(f);
  }
  return map;
}

double min_node_spacing(const TriMesh& mesh, const ReferenceElement& element) {
  double h = std::numeric_limits<double>::infinity();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto v = mesh.cell_vertices(c);
    std::vector<Vec2> p(element.size());
    for (int i = 0; i < element.size(); ++i) p[i] = node_position(v, element.nodes[i]);
    for (int i = 0; i < element.size(); ++i)
      for (int j = i + 1; j < element.size(); ++j) h = std::min(h, norm(p[i] - p[j]));
  }
  return h;
}

double face_size(const TriMesh& mesh, const Face& face) {
  return 0.5 * (mesh.diameter(face.cell[0]) + mesh.diameter(face.cell[1]));
}

PeriodicUnit build_periodic_unit(Pattern pattern, const ReferenceElement& element, double dx) {
  PeriodicUnit unit;
  unit.pattern = pattern;
  unit.dx = dx;
  unit.mesh = structured_mesh(pattern, 1, 1, {dx, dx}, true);
  unit.dofs = build_dof_map(unit.mesh, element);
  return unit;
}

}  // namespace stabfem
