#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "stabfem/common.hpp"
#include "stabfem/polynomial.hpp"
#include "stabfem/quadrature.hpp"

namespace stabfem {

using Barycentric = std::array<double, 3>;

enum class NodeKind { Vertex, Edge, Interior };

/// Basis of one element family and degree on the reference triangle.
///
/// Nodes are ordered: the three vertices, then the nodes of edges
/// (v0,v1), (v1,v2), (v2,v0) running from the first vertex to the second,
/// then interior nodes.
struct ReferenceElement {
  Family family = Family::Basic;
  int degree = 1;
  std::vector<Barycentric> nodes;
  std::vector<NodeKind> kinds;
  /// Integrals of the basis functions; reference measure normalized to 1.
  std::vector<double> weights;
  std::vector<Poly2> basis;
  std::vector<Poly2> d_xi;
  std::vector<Poly2> d_eta;
  /// Element rule: self-quadrature for cubature, symmetric rule otherwise.
  QuadratureRule quadrature;
  /// Local node indices on each edge, endpoints included, ordered along the edge.
  std::array<std::vector<int>, 3> edge_nodes;
  /// Maps values sampled at the nodes to coefficients (identity for nodal bases).
  Eigen::MatrixXd nodal_to_coeff;
  /// Maximum distance between consecutive nodes on the unit reference edge.
  double max_edge_node_gap = 1.0;
  /// Minimum distance between consecutive nodes on the unit reference edge.
  double min_edge_node_gap = 1.0;

  int size() const { return static_cast<int>(nodes.size()); }
  bool is_nodal() const { return family != Family::Bernstein; }
  std::string name() const;

  void eval(double xi, double eta, double* values) const;
  void eval_grad(double xi, double eta, double* gxi, double* geta) const;
};

/// Cached element for (family, degree); throws InvalidArgument for
/// unsupported combinations (degrees 1 to 3 are supported).
const ReferenceElement& reference_element(Family family, int degree);

/// Quadrature rule paired with a family: self-quadrature for cubature,
/// a symmetric rule exact to degree 2p otherwise.
QuadratureRule build_quadrature(Family family, int degree);

namespace cubature {
/// Edge node parameter of the enriched cubic element.
double p3_alpha();
/// Interior node parameter of the enriched cubic element.
double p3_beta();
/// Vertex, edge and interior weights of the enriched cubic element.
std::array<double, 3> p3_weights();
}  // namespace cubature

}  // namespace stabfem
