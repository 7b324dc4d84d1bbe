#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "stabfem/common.hpp"
#include "stabfem/reference_element.hpp"

namespace stabfem {

/// Conforming triangulation with counter-clockwise cells.
struct TriMesh {
  std::vector<Vec2> vertices;
  std::vector<std::array<int, 3>> triangles;

  /// Doubly periodic identification of the box [origin, origin + period].
  bool periodic = false;
  Vec2 origin;
  Vec2 period;

  /// Square side for structured meshes, 0 otherwise.
  double cell_size = 0.0;

  int num_cells() const { return static_cast<int>(triangles.size()); }
  std::array<Vec2, 3> cell_vertices(int c) const {
    const auto& t = triangles[c];
    return {vertices[t[0]], vertices[t[1]], vertices[t[2]]};
  }
  double area(int c) const;
  /// Longest edge of the cell.
  double diameter(int c) const;
};

/// Structured mesh of [origin, origin + size] split into nx by ny rectangles,
/// each cut into 4 triangles around its center (X) or 2 along the
/// bottom-left to top-right diagonal (T).
TriMesh structured_mesh(Pattern pattern, int nx, int ny, Vec2 size, bool periodic = false,
                        Vec2 origin = {});

/// Native format: "trimesh 1", "nodes N", N lines "x y", "triangles M",
/// M lines "i j k" with 0-based indices. '#' starts a comment.
TriMesh read_native_mesh(std::istream& in);
/// ASCII gmsh v2 subset; only 3-node triangles are kept, other element
/// types are skipped and reported through `warnings`.
TriMesh read_gmsh_mesh(std::istream& in, std::vector<std::string>* warnings = nullptr);
/// Dispatches on the file header; errors carry the path.
TriMesh read_mesh_file(const std::string& path, std::vector<std::string>* warnings = nullptr);
void write_native_mesh(std::ostream& out, const TriMesh& mesh);

/// Reorients clockwise cells and rejects degenerate ones.
void orient_counter_clockwise(TriMesh& mesh);

struct Face {
  std::array<int, 2> cell;
  std::array<int, 2> local_edge;
  /// Translation bringing cell[1] next to cell[0] across periodic boundaries.
  Vec2 offset;
  /// The same translation in period units.
  Shift shift;
  Vec2 normal;
  double length = 0.0;
};

struct BoundaryEdge {
  int cell;
  int local_edge;
};

/// Global numbering: vertex nodes, then edge nodes in sorted-edge order,
/// then interior nodes in cell order.
struct DofMap {
  int ndofs = 0;
  int n_vertex_dofs = 0;
  int n_edge_dofs = 0;
  int n_interior_dofs = 0;
  std::vector<std::vector<int>> cell_dofs;
  /// Periodic translation of each local node relative to its owned copy.
  std::vector<std::vector<Shift>> cell_shifts;
  /// Position of the owned copy of each DOF.
  std::vector<Vec2> dof_coords;
  std::vector<char> on_boundary;
  std::vector<Face> faces;
  std::vector<BoundaryEdge> boundary_edges;
};

DofMap build_dof_map(const TriMesh& mesh, const ReferenceElement& element);

/// Smallest distance between distinct nodes of the discretization.
double min_node_spacing(const TriMesh& mesh, const ReferenceElement& element);

/// Mean of the diameters of the cells adjacent to a face.
double face_size(const TriMesh& mesh, const Face& face);

/// One periodic square of a structured pattern with its owned DOFs (top
/// and right sides belong to the neighbours).
struct PeriodicUnit {
  Pattern pattern = Pattern::X;
  double dx = 1.0;
  TriMesh mesh;
  DofMap dofs;

  int num_modes() const { return dofs.ndofs; }
};

PeriodicUnit build_periodic_unit(Pattern pattern, const ReferenceElement& element,
                                 double dx = 1.0);

}  // namespace stabfem
