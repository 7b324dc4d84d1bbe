#include "stabfem/reference_element.hpp"

#include <cmath>
#include <map>
#include <mutex>

namespace stabfem {

namespace cubature {

double p3_alpha() {
  const double s7 = std::sqrt(7.0);
  const double a = -15.0 * s7 - 21.0;
  return (a + std::sqrt(168.0 + 174.0 * s7)) / (2.0 * a);
}

double p3_beta() { return 1.0 / 3.0 + 2.0 * std::sqrt(7.0) / 21.0; }

std::array<double, 3> p3_weights() {
  const double s7 = std::sqrt(7.0);
  return {(1369.0 + 767.0 * s7) / (120.0 * (859.0 + 395.0 * s7)),
          (287.0 + 115.0 * s7) / (40.0 * (173.0 + 49.0 * s7)),
          21.0 * s7 / (40.0 * (2.0 * s7 + 1.0))};
}

}  // namespace cubature

namespace {

constexpr int kEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

Barycentric edge_point(int e, double t) {
  Barycentric l = {0.0, 0.0, 0.0};
  l[kEdges[e][0]] = 1.0 - t;
  l[kEdges[e][1]] = t;
  return l;
}

/// Node layout shared by families: vertices, edge parameters, interior points.
void place_nodes(ReferenceElement& el, const std::vector<double>& edge_t,
                 const std::vector<Barycentric>& interior) {
  for (int v = 0; v < 3; ++v) {
    Barycentric l = {0.0, 0.0, 0.0};
    l[v] = 1.0;
    el.nodes.push_back(l);
    el.kinds.push_back(NodeKind::Vertex);
  }
  for (int e = 0; e < 3; ++e) {
    el.edge_nodes[e].push_back(kEdges[e][0]);
    for (double t : edge_t) {
      el.edge_nodes[e].push_back(static_cast<int>(el.nodes.size()));
      el.nodes.push_back(edge_point(e, t));
      el.kinds.push_back(NodeKind::Edge);
    }
    el.edge_nodes[e].push_back(kEdges[e][1]);
  }
  for (const auto& l : interior) {
    el.nodes.push_back(l);
    el.kinds.push_back(NodeKind::Interior);
  }
  std::vector<double> t = {0.0};
  t.insert(t.end(), edge_t.begin(), edge_t.end());
  t.push_back(1.0);
  el.max_edge_node_gap = 0.0;
  el.min_edge_node_gap = 1.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    el.max_edge_node_gap = std::max(el.max_edge_node_gap, t[i] - t[i - 1]);
    el.min_edge_node_gap = std::min(el.min_edge_node_gap, t[i] - t[i - 1]);
  }
}

void place_lattice_nodes(ReferenceElement& el, int p) {
  std::vector<double> edge_t;
  for (int k = 1; k < p; ++k) edge_t.push_back(static_cast<double>(k) / p);
  std::vector<Barycentric> interior;
  for (int i = 1; i < p; ++i)
    for (int j = 1; i + j < p; ++j)
      interior.push_back({static_cast<double>(p - i - j) / p, static_cast<double>(i) / p,
                          static_cast<double>(j) / p});
  place_nodes(el, edge_t, interior);
}

std::array<int, 3> multi_index(const Barycentric& l, int p) {
  return {static_cast<int>(std::lround(l[0] * p)), static_cast<int>(std::lround(l[1] * p)),
          static_cast<int>(std::lround(l[2] * p))};
}

Poly2 lagrange_product(const std::array<int, 3>& alpha, int p) {
  Poly2 phi = Poly2::constant(1.0);
  for (int i = 0; i < 3; ++i)
    for (int z = 0; z < alpha[i]; ++z) {
      Poly2 factor = static_cast<double>(p) * Poly2::lambda(i) - Poly2::constant(z);
      phi = phi * ((1.0 / (z + 1.0)) * factor);
    }
  return phi;
}

Poly2 bernstein(const std::array<int, 3>& alpha, int p) {
  double coef = 1.0;
  for (int k = 2; k <= p; ++k) coef *= k;
  Poly2 phi = Poly2::constant(1.0);
  for (int i = 0; i < 3; ++i) {
    for (int k = 2; k <= alpha[i]; ++k) coef /= k;
    for (int z = 0; z < alpha[i]; ++z) phi = phi * Poly2::lambda(i);
  }
  return coef * phi;
}

Eigen::MatrixXd node_matrix(const ReferenceElement& el) {
  const int n = el.size();
  Eigen::MatrixXd B(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) B(i, j) = el.basis[j](el.nodes[i][1], el.nodes[i][2]);
  return B;
}

void build_cubature_p2(ReferenceElement& el) {
  place_nodes(el, {0.5}, {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}});
  const Poly2 l[3] = {Poly2::lambda(0), Poly2::lambda(1), Poly2::lambda(2)};
  const Poly2 bubble = l[0] * l[1] * l[2];
  for (int v = 0; v < 3; ++v)
    el.basis.push_back(l[v] * (2.0 * l[v] - Poly2::constant(1.0)) + 3.0 * bubble);
  for (int e = 0; e < 3; ++e) {
    const int i = kEdges[e][0], j = kEdges[e][1], k = 3 - i - j;
    el.basis.push_back(4.0 * (l[i] * l[j]) * (Poly2::constant(1.0) - 3.0 * l[k]));
  }
  el.basis.push_back(27.0 * bubble);
  el.weights = {1.0 / 20, 1.0 / 20, 1.0 / 20, 2.0 / 15, 2.0 / 15, 2.0 / 15, 9.0 / 20};
}

/// Interpolation in P3 plus bubble times {lambda1, lambda2}.
void build_cubature_p3(ReferenceElement& el) {
  const double a = cubature::p3_alpha();
  const double b = cubature::p3_beta();
  const double o = 0.5 * (1.0 - b);
  place_nodes(el, {a, 1.0 - a}, {{b, o, o}, {o, b, o}, {o, o, b}});
  std::vector<Poly2> space;
  for (int i = 0; i <= 3; ++i)
    for (int j = 0; i + j <= 3; ++j) {
      Poly2 m;
      m.at(i, j) = 1.0;
      space.push_back(m);
    }
  const Poly2 bubble = Poly2::lambda(0) * Poly2::lambda(1) * Poly2::lambda(2);
  space.push_back(bubble * Poly2::lambda(0));
  space.push_back(bubble * Poly2::lambda(1));
  const int n = el.size();
  Eigen::MatrixXd V(n, n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) V(i, k) = space[k](el.nodes[i][1], el.nodes[i][2]);
  const Eigen::MatrixXd C = V.fullPivLu().inverse();
  for (int j = 0; j < n; ++j) {
    Poly2 phi;
    for (int k = 0; k < n; ++k) phi += C(k, j) * space[k];
    el.basis.push_back(phi);
  }
  const auto w = cubature::p3_weights();
  el.weights.assign(3, w[0]);
  el.weights.insert(el.weights.end(), 6, w[1]);
  el.weights.insert(el.weights.end(), 3, w[2]);
}

ReferenceElement make_element(Family family, int p) {
  if (p < 1 || p > 3)
    throw InvalidArgument("unsupported element degree " + std::to_string(p) +
                          " (supported: 1, 2, 3)");
  ReferenceElement el;
  el.family = family;
  el.degree = p;
  const bool lattice = family != Family::Cubature || p == 1;
  if (lattice) {
    place_lattice_nodes(el, p);
    for (const auto& node : el.nodes) {
      const auto alpha = multi_index(node, p);
      el.basis.push_back(family == Family::Bernstein ? bernstein(alpha, p)
                                                     : lagrange_product(alpha, p));
    }
    for (const auto& phi : el.basis) el.weights.push_back(phi.integral());
  } else if (p == 2) {
    build_cubature_p2(el);
  } else {
    build_cubature_p3(el);
  }
  for (const auto& phi : el.basis) {
    el.d_xi.push_back(phi.d_xi());
    el.d_eta.push_back(phi.d_eta());
  }
  if (family == Family::Cubature) {
    el.quadrature.degree = p == 1 ? 1 : 2 * p - 1;
    for (int i = 0; i < el.size(); ++i) {
      el.quadrature.points.push_back({el.nodes[i][1], el.nodes[i][2]});
      el.quadrature.weights.push_back(el.weights[i]);
    }
  } else {
    el.quadrature = triangle_rule(2 * p);
  }
  if (family == Family::Bernstein)
    el.nodal_to_coeff = node_matrix(el).inverse();
  else
    el.nodal_to_coeff = Eigen::MatrixXd::Identity(el.size(), el.size());
  return el;
}

}  // namespace

std::string ReferenceElement::name() const {
  std::string prefix = family == Family::Basic       ? "P"
                       : family == Family::Bernstein ? "B"
                                                     : "cubP";
  return prefix + std::to_string(degree);
}

void ReferenceElement::eval(double xi, double eta, double* values) const {
  for (std::size_t i = 0; i < basis.size(); ++i) values[i] = basis[i](xi, eta);
}

void ReferenceElement::eval_grad(double xi, double eta, double* gxi, double* geta) const {
  for (std::size_t i = 0; i < basis.size(); ++i) {
    gxi[i] = d_xi[i](xi, eta);
    geta[i] = d_eta[i](xi, eta);
  }
}

const ReferenceElement& reference_element(Family family, int degree) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, ReferenceElement> cache;
  std::lock_guard lock(mutex);
  const auto key = std::make_pair(static_cast<int>(family), degree);
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, make_element(family, degree)).first;
  return it->second;
}

QuadratureRule build_quadrature(Family family, int degree) {
  return reference_element(family, degree).quadrature;
}

}  // namespace stabfem
