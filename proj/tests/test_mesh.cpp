#include <doctest.h>

#include <fstream>
#include <sstream>

#include "stabfem/mesh.hpp"

using namespace stabfem;

namespace {

struct Counts {
  int v, e, c;
};

/// Vertices, edges and cells of a non-periodic structured mesh; edges from Euler's formula.
Counts count(Pattern p, int nx, int ny) {
  const int v = (nx + 1) * (ny + 1) + (p == Pattern::X ? nx * ny : 0);
  const int c = (p == Pattern::X ? 4 : 2) * nx * ny;
  return {v, v + c - 1, c};
}

int expected_dofs(Family f, int degree, const Counts& k) {
  if (degree == 1) return k.v;
  if (degree == 2) return k.v + k.e + (f == Family::Cubature ? k.c : 0);
  return k.v + 2 * k.e + (f == Family::Cubature ? 3 : 1) * k.c;
}

}  // namespace

TEST_CASE("structured meshes have the expected entities") {
  for (Pattern p : {Pattern::X, Pattern::T}) {
    const TriMesh m = structured_mesh(p, 5, 3, {2.0, 1.0});
    const Counts k = count(p, 5, 3);
    CHECK(m.num_cells() == k.c);
    CHECK(static_cast<int>(m.vertices.size()) == k.v);
    double area = 0.0;
    for (int c = 0; c < m.num_cells(); ++c) {
      CHECK(m.area(c) > 0.0);
      area += m.area(c);
    }
    CHECK(area == doctest::Approx(2.0).epsilon(1e-14));
    for (Family f : {Family::Basic, Family::Bernstein, Family::Cubature})
      for (int deg = 1; deg <= 3; ++deg) {
        const DofMap d = build_dof_map(m, reference_element(f, deg));
        CHECK(d.ndofs == expected_dofs(f, deg, k));
      }
  }
}

TEST_CASE("boundary dofs lie on the box boundary") {
  const TriMesh m = structured_mesh(Pattern::X, 4, 4, {1.0, 1.0});
  const DofMap d = build_dof_map(m, reference_element(Family::Cubature, 3));
  int nb = 0;
  for (int i = 0; i < d.ndofs; ++i) {
    const Vec2 x = d.dof_coords[i];
    const bool edge = std::abs(x.x) < 1e-12 || std::abs(x.x - 1) < 1e-12 || std::abs(x.y) < 1e-12 ||
                      std::abs(x.y - 1) < 1e-12;
    CHECK(static_cast<bool>(d.on_boundary[i]) == edge);
    nb += edge;
  }
  // 16 boundary edges with 2 inner nodes each, plus 16 vertices.
  CHECK(nb == 48);
}

TEST_CASE("periodic meshes identify opposite sides") {
  const TriMesh m = structured_mesh(Pattern::T, 3, 3, {3.0, 3.0}, true);
  const DofMap d = build_dof_map(m, reference_element(Family::Basic, 2));
  CHECK(d.ndofs == 9 * 4);
  CHECK(d.boundary_edges.empty());
  for (char b : d.on_boundary) CHECK(b == 0);
}

TEST_CASE("periodic unit mode counts") {
  const int x_basic[] = {2, 8, 18}, x_cub[] = {2, 12, 26};
  const int t_basic[] = {1, 4, 9}, t_cub[] = {1, 6, 13};
  for (int p = 1; p <= 3; ++p) {
    CHECK(build_periodic_unit(Pattern::X, reference_element(Family::Basic, p)).num_modes() == x_basic[p - 1]);
    CHECK(build_periodic_unit(Pattern::X, reference_element(Family::Bernstein, p)).num_modes() == x_basic[p - 1]);
    CHECK(build_periodic_unit(Pattern::X, reference_element(Family::Cubature, p)).num_modes() == x_cub[p - 1]);
    CHECK(build_periodic_unit(Pattern::T, reference_element(Family::Basic, p)).num_modes() == t_basic[p - 1]);
    CHECK(build_periodic_unit(Pattern::T, reference_element(Family::Bernstein, p)).num_modes() == t_basic[p - 1]);
    CHECK(build_periodic_unit(Pattern::T, reference_element(Family::Cubature, p)).num_modes() == t_cub[p - 1]);
  }
}

TEST_CASE("native mesh round trip") {
  const TriMesh m = structured_mesh(Pattern::X, 2, 1, {2.0, 1.0});
  std::stringstream s;
  write_native_mesh(s, m);
  const TriMesh r = read_native_mesh(s);
  CHECK(r.triangles == m.triangles);
  REQUIRE(r.vertices.size() == m.vertices.size());
  for (std::size_t i = 0; i < r.vertices.size(); ++i) {
    CHECK(r.vertices[i].x == doctest::Approx(m.vertices[i].x));
    CHECK(r.vertices[i].y == doctest::Approx(m.vertices[i].y));
  }
}

TEST_CASE("native reader reorients and reports bad lines") {
  std::stringstream cw("trimesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 2 1\n");
  const TriMesh m = read_native_mesh(cw);
  CHECK(m.area(0) == doctest::Approx(0.5));

  std::stringstream bad("trimesh 1\nnodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 7\n");
  try {
    read_native_mesh(bad);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
  }
  std::stringstream flat("trimesh 1\nnodes 3\n0 0\n1 0\n2 0\ntriangles 1\n0 1 2\n");
  CHECK_THROWS_AS(read_native_mesh(flat), ParseError);
}

TEST_CASE("gmsh reader keeps triangles and warns on the rest") {
  std::stringstream s(
      "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n4\n1 0 0 0\n2 1 0 0\n3 1 1 0\n4 0 1 0\n$EndNodes\n"
      "$Elements\n4\n1 1 2 1 1 1 2\n2 15 2 1 1 1\n3 2 2 1 1 1 2 3\n4 2 2 1 1 1 3 4\n$EndElements\n");
  std::vector<std::string> warnings;
  const TriMesh m = read_gmsh_mesh(s, &warnings);
  CHECK(m.num_cells() == 2);
  CHECK(warnings.size() == 2);

  std::stringstream v4("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
  CHECK_THROWS_AS(read_gmsh_mesh(v4), ParseError);
}

TEST_CASE("mesh file errors carry the path") {
  try {
    read_mesh_file("/nonexistent/dir/mesh.msh");
    FAIL("expected an io error");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/dir/mesh.msh") != std::string::npos);
  }
}

TEST_CASE("node spacing and face sizes") {
  const TriMesh m = structured_mesh(Pattern::T, 4, 4, {1.0, 1.0});
  CHECK(min_node_spacing(m, reference_element(Family::Basic, 1)) == doctest::Approx(0.25));
  CHECK(min_node_spacing(m, reference_element(Family::Basic, 2)) == doctest::Approx(0.125));
  const DofMap d = build_dof_map(m, reference_element(Family::Basic, 1));
  for (const Face& f : d.faces) CHECK(face_size(m, f) == doctest::Approx(0.25 * std::sqrt(2.0)));
}
