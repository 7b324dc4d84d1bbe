#include "stabfem/assembly.hpp"

#include <atomic>
#include <cmath>
#include <complex>

namespace stabfem {

namespace {

constexpr int kEdges[3][2] = {{0, 1}, {1, 2}, {2, 0}};

std::atomic<long> g_mass_factorizations{0};

using Triplets = std::vector<Eigen::Triplet<double>>;

SpMat from_triplets(int n, const Triplets& t) {
  SpMat A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  A.makeCompressed();
  return A;
}

double weight_of(const std::vector<double>& w, int k) { return w.empty() ? 1.0 : w[k]; }

template <class F>
void for_each_cell_matrix(const TriMesh& mesh, const ReferenceElement& element, Form form,
                          const std::vector<double>& weights, F&& f) {
  const ElementTables tables = tabulate(element, element.quadrature);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double w = weight_of(weights, c);
    if (w == 0.0) continue;
    f(c, w * local_matrix(mesh.cell_vertices(c), tables, form));
  }
}

template <class F>
void for_each_face_matrix(const TriMesh& mesh, const DofMap& dofs,
                          const ReferenceElement& element, const std::vector<double>& weights,
                          F&& f) {
  for (std::size_t k = 0; k < dofs.faces.size(); ++k) {
    const double w = weight_of(weights, static_cast<int>(k));
    if (w == 0.0) continue;
    f(dofs.faces[k], w * face_jump_matrix(mesh, element, dofs.faces[k]));
  }
}

}  // namespace

long consistent_mass_factorizations() { return g_mass_factorizations.load(); }
void note_consistent_mass_factorization() { ++g_mass_factorizations; }

ElementTables tabulate(const ReferenceElement& element, const QuadratureRule& rule) {
  ElementTables t;
  t.rule = rule;
  const int nq = static_cast<int>(rule.size()), n = element.size();
  t.phi.resize(nq, n);
  t.dxi.resize(nq, n);
  t.deta.resize(nq, n);
  for (int q = 0; q < nq; ++q)
    for (int i = 0; i < n; ++i) {
      const double xi = rule.points[q][0], eta = rule.points[q][1];
      t.phi(q, i) = element.basis[i](xi, eta);
      t.dxi(q, i) = element.d_xi[i](xi, eta);
      t.deta(q, i) = element.d_eta[i](xi, eta);
    }
  return t;
}

CellMap::CellMap(const std::array<Vec2, 3>& v) : origin(v[0]) {
  j00 = v[1].x - v[0].x;
  j01 = v[2].x - v[0].x;
  j10 = v[1].y - v[0].y;
  j11 = v[2].y - v[0].y;
  det = j00 * j11 - j01 * j10;
}

std::array<double, 2> CellMap::to_reference(Vec2 p) const {
  const double dx = p.x - origin.x, dy = p.y - origin.y;
  return {(j11 * dx - j01 * dy) / det, (-j10 * dx + j00 * dy) / det};
}

Eigen::MatrixXd local_matrix(const std::array<Vec2, 3>& v, const ElementTables& t, Form form) {
  const CellMap map(v);
  const int n = static_cast<int>(t.phi.cols());
  const int nq = static_cast<int>(t.rule.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd gx(n), gy(n);
  for (int q = 0; q < nq; ++q) {
    const double w = t.rule.weights[q] * map.area();
    for (int i = 0; i < n; ++i) {
      const Vec2 g = map.grad(t.dxi(q, i), t.deta(q, i));
      gx[i] = g.x;
      gy[i] = g.y;
    }
    const auto phi = t.phi.row(q).transpose();
    switch (form) {
      case Form::Mass: A.noalias() += w * phi * phi.transpose(); break;
      case Form::ConvX: A.noalias() += w * phi * gx.transpose(); break;
      case Form::ConvY: A.noalias() += w * phi * gy.transpose(); break;
      case Form::DiffXX: A.noalias() += w * gx * gx.transpose(); break;
      case Form::DiffXY: A.noalias() += w * gx * gy.transpose(); break;
      case Form::DiffYY: A.noalias() += w * gy * gy.transpose(); break;
      case Form::Laplace:
        A.noalias() += w * (gx * gx.transpose() + gy * gy.transpose());
        break;
    }
  }
  return A;
}

Eigen::MatrixXd face_jump_matrix(const TriMesh& mesh, const ReferenceElement& element,
                                 const Face& face) {
  const int n = element.size();
  const auto va = mesh.cell_vertices(face.cell[0]);
  auto vb = mesh.cell_vertices(face.cell[1]);
  for (auto& p : vb) p = p + face.offset;
  const CellMap ma(va), mb(vb);
  const Vec2 p0 = va[kEdges[face.local_edge[0]][0]];
  const Vec2 p1 = va[kEdges[face.local_edge[0]][1]];
  std::vector<double> s, w;
  gauss_legendre(element.degree, s, w);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  Eigen::VectorXd jump(2 * n);
  std::vector<double> gxi(n), geta(n);
  for (std::size_t q = 0; q < s.size(); ++q) {
    const Vec2 x = p0 + s[q] * (p1 - p0);
    for (int side = 0; side < 2; ++side) {
      const CellMap& m = side == 0 ? ma : mb;
      const auto r = m.to_reference(x);
      element.eval_grad(r[0], r[1], gxi.data(), geta.data());
      const double sign = side == 0 ? 1.0 : -1.0;
      for (int i = 0; i < n; ++i) jump[side * n + i] = sign * dot(face.normal, m.grad(gxi[i], geta[i]));
    }
    A.noalias() += w[q] * face.length * jump * jump.transpose();
  }
  return A;
}

void ShiftedOperator::add(int row, Shift srow, int col, Shift scol, double v) {
  const Shift rel = {scol[0] - srow[0], scol[1] - srow[1]};
  auto it = blocks.find(rel);
  if (it == blocks.end()) it = blocks.emplace(rel, Eigen::MatrixXd::Zero(n, n)).first;
  it->second(row, col) += v;
}

void ShiftedOperator::axpy(double a, const ShiftedOperator& other) {
  for (const auto& [s, B] : other.blocks) {
    auto it = blocks.find(s);
    if (it == blocks.end()) it = blocks.emplace(s, Eigen::MatrixXd::Zero(n, n)).first;
    it->second += a * B;
  }
}

Eigen::MatrixXcd ShiftedOperator::symbol(double theta_x, double theta_y) const {
  Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
  for (const auto& [s, B] : blocks) {
    const std::complex<double> phase = std::polar(1.0, s[0] * theta_x + s[1] * theta_y);
    S += phase * B.cast<std::complex<double>>();
  }
  return S;
}

SpMat assemble_form(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                    Form form, const std::vector<double>& cell_weights) {
  Triplets t;
  for_each_cell_matrix(mesh, element, form, cell_weights, [&](int c, const Eigen::MatrixXd& A) {
    const auto& d = dofs.cell_dofs[c];
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j)
        if (A(i, j) != 0.0) t.emplace_back(d[i], d[j], A(i, j));
  });
  return from_triplets(dofs.ndofs, t);
}

ShiftedOperator assemble_form_shifted(const TriMesh& mesh, const DofMap& dofs,
                                      const ReferenceElement& element, Form form,
                                      const std::vector<double>& cell_weights) {
  ShiftedOperator op;
  op.n = dofs.ndofs;
  for_each_cell_matrix(mesh, element, form, cell_weights, [&](int c, const Eigen::MatrixXd& A) {
    const auto& d = dofs.cell_dofs[c];
    const auto& s = dofs.cell_shifts[c];
    for (int i = 0; i < A.rows(); ++i)
      for (int j = 0; j < A.cols(); ++j)
        if (A(i, j) != 0.0) op.add(d[i], s[i], d[j], s[j], A(i, j));
  });
  return op;
}

SpMat assemble_jumps(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                     const std::vector<double>& face_weights) {
  Triplets t;
  const int n = element.size();
  for_each_face_matrix(mesh, dofs, element, face_weights,
                       [&](const Face& f, const Eigen::MatrixXd& A) {
                         auto dof = [&](int k) {
                           return dofs.cell_dofs[f.cell[k / n]][k % n];
                         };
                         for (int i = 0; i < 2 * n; ++i)
                           for (int j = 0; j < 2 * n; ++j)
                             if (A(i, j) != 0.0) t.emplace_back(dof(i), dof(j), A(i, j));
                       });
  return from_triplets(dofs.ndofs, t);
}

ShiftedOperator assemble_jumps_shifted(const TriMesh& mesh, const DofMap& dofs,
                                       const ReferenceElement& element,
                                       const std::vector<double>& face_weights) {
  ShiftedOperator op;
  op.n = dofs.ndofs;
  const int n = element.size();
  for_each_face_matrix(mesh, dofs, element, face_weights,
                       [&](const Face& f, const Eigen::MatrixXd& A) {
                         auto dof = [&](int k) { return dofs.cell_dofs[f.cell[k / n]][k % n]; };
                         auto shift = [&](int k) {
                           Shift s = dofs.cell_shifts[f.cell[k / n]][k % n];
                           if (k >= n) {
                             s[0] += f.shift[0];
                             s[1] += f.shift[1];
                           }
                           return s;
                         };
                         for (int i = 0; i < 2 * n; ++i)
                           for (int j = 0; j < 2 * n; ++j)
                             if (A(i, j) != 0.0) op.add(dof(i), shift(i), dof(j), shift(j), A(i, j));
                       });
  return op;
}

GlobalSystem assemble_global(const TriMesh& mesh, const DofMap& dofs,
                             const ReferenceElement& element, const StabilizationConfig& stab,
                             Vec2 a) {
  const double speed = norm(a);
  const int nc = mesh.num_cells();
  GlobalSystem sys;
  sys.mass = assemble_form(mesh, dofs, element, Form::Mass);
  sys.kx = assemble_form(mesh, dofs, element, Form::ConvX);
  sys.ky = assemble_form(mesh, dofs, element, Form::ConvY);
  sys.total_mass = sys.mass;
  sys.convection = a.x * sys.kx + a.y * sys.ky;
  sys.lumped = Eigen::VectorXd::Zero(dofs.ndofs);
  for (int k = 0; k < sys.mass.outerSize(); ++k)
    for (SpMat::InnerIterator it(sys.mass, k); it; ++it) sys.lumped[it.row()] += it.value();
  sys.mass_is_diagonal = true;
  for (int k = 0; k < sys.mass.outerSize() && sys.mass_is_diagonal; ++k)
    for (SpMat::InnerIterator it(sys.mass, k); it; ++it)
      if (it.row() != it.col() && std::abs(it.value()) > 1e-14 * std::abs(sys.lumped[it.row()])) {
        sys.mass_is_diagonal = false;
        break;
      }

  auto cell_length = [&](int c) { return stab.length > 0 ? stab.length : mesh.diameter(c); };
  if (stab.kind != Stabilization::None && stab.delta != 0.0) {
    std::vector<double> tau(nc);
    switch (stab.kind) {
      case Stabilization::SUPG: {
        if (speed == 0.0) throw InvalidArgument("SUPG needs a nonzero advection speed");
        for (int c = 0; c < nc; ++c) tau[c] = stab.delta * cell_length(c) / speed;
        const SpMat mx = assemble_form(mesh, dofs, element, Form::ConvX, tau);
        const SpMat my = assemble_form(mesh, dofs, element, Form::ConvY, tau);
        sys.total_mass = sys.mass + SpMat(a.x * SpMat(mx.transpose()) + a.y * SpMat(my.transpose()));
        const SpMat dxx = assemble_form(mesh, dofs, element, Form::DiffXX, tau);
        const SpMat dxy = assemble_form(mesh, dofs, element, Form::DiffXY, tau);
        const SpMat dyy = assemble_form(mesh, dofs, element, Form::DiffYY, tau);
        sys.convection = sys.convection + SpMat(a.x * a.x * dxx + a.y * a.y * dyy +
                                                a.x * a.y * SpMat(dxy + SpMat(dxy.transpose())));
        break;
      }
      case Stabilization::CIP: {
        std::vector<double> tf(dofs.faces.size());
        for (std::size_t k = 0; k < tf.size(); ++k) {
          const double h = stab.length > 0 ? stab.length : face_size(mesh, dofs.faces[k]);
          tf[k] = stab.delta * h * h * speed;
        }
        sys.convection = sys.convection + assemble_jumps(mesh, dofs, element, tf);
        break;
      }
      case Stabilization::OSS: {
        for (int c = 0; c < nc; ++c) tau[c] = stab.delta * cell_length(c) * speed;
        sys.convection = sys.convection + assemble_form(mesh, dofs, element, Form::Laplace, tau);
        sys.proj_tx = SpMat(assemble_form(mesh, dofs, element, Form::ConvX, tau).transpose());
        sys.proj_ty = SpMat(assemble_form(mesh, dofs, element, Form::ConvY, tau).transpose());
        sys.has_projection = true;
        break;
      }
      case Stabilization::None: break;
    }
  }
  if (stab.viscosity != 0.0) {
    std::vector<double> mu(nc);
    for (int c = 0; c < nc; ++c)
      mu[c] = stab.viscosity * std::pow(mesh.diameter(c), element.degree + 1);
    sys.convection = sys.convection + assemble_form(mesh, dofs, element, Form::Laplace, mu);
  }
  sys.convection.makeCompressed();
  sys.total_mass.makeCompressed();
  return sys;
}

UnitOperators build_unit_operators(const PeriodicUnit& unit, const ReferenceElement& element) {
  UnitOperators ops;
  const auto& mesh = unit.mesh;
  const auto& dofs = unit.dofs;
  ops.mass = assemble_form_shifted(mesh, dofs, element, Form::Mass);
  ops.kx = assemble_form_shifted(mesh, dofs, element, Form::ConvX);
  ops.ky = assemble_form_shifted(mesh, dofs, element, Form::ConvY);
  ops.dxx = assemble_form_shifted(mesh, dofs, element, Form::DiffXX);
  ops.dxy = assemble_form_shifted(mesh, dofs, element, Form::DiffXY);
  ops.dyy = assemble_form_shifted(mesh, dofs, element, Form::DiffYY);
  ops.jump = assemble_jumps_shifted(mesh, dofs, element);
  std::vector<double> h(mesh.num_cells());
  for (int c = 0; c < mesh.num_cells(); ++c)
    h[c] = std::pow(mesh.diameter(c), element.degree + 1);
  ops.viscous = assemble_form_shifted(mesh, dofs, element, Form::Laplace, h);
  return ops;
}

Symbols assemble_symbols(const UnitOperators& ops, const PeriodicUnit& unit,
                         const StabilizationConfig& stab, Vec2 a, double tx, double ty) {
  Symbols s;
  s.M = ops.mass.symbol(tx, ty);
  s.Kx = ops.kx.symbol(tx, ty);
  s.Ky = ops.ky.symbol(tx, ty);
  const int n = static_cast<int>(s.M.rows());
  s.M_supg = Eigen::MatrixXcd::Zero(n, n);
  s.S = Eigen::MatrixXcd::Zero(n, n);
  const double speed = norm(a);
  const double L = stab.length > 0 ? stab.length : unit.dx;
  if (stab.kind != Stabilization::None && stab.delta != 0.0) {
    switch (stab.kind) {
      case Stabilization::SUPG: {
        if (speed == 0.0) throw InvalidArgument("SUPG needs a nonzero advection speed");
        const double tau = stab.delta * L / speed;
        s.M_supg = tau * (a.x * s.Kx.adjoint() + a.y * s.Ky.adjoint());
        const Eigen::MatrixXcd dxy = ops.dxy.symbol(tx, ty);
        s.S = tau * (a.x * a.x * ops.dxx.symbol(tx, ty) + a.y * a.y * ops.dyy.symbol(tx, ty) +
                     a.x * a.y * (dxy + dxy.adjoint()));
        break;
      }
      case Stabilization::CIP:
        s.S = (stab.delta * L * L * speed) * ops.jump.symbol(tx, ty);
        break;
      case Stabilization::OSS: {
        const double tau = stab.delta * L * speed;
        const Eigen::MatrixXcd D = ops.dxx.symbol(tx, ty) + ops.dyy.symbol(tx, ty);
        const auto lu = s.M.partialPivLu();
        const Eigen::MatrixXcd px = lu.solve(s.Kx);
        const Eigen::MatrixXcd py = lu.solve(s.Ky);
        s.S = tau * (D - s.Kx.adjoint() * px - s.Ky.adjoint() * py);
        break;
      }
      case Stabilization::None: break;
    }
  }
  if (stab.viscosity != 0.0) s.S += stab.viscosity * ops.viscous.symbol(tx, ty);
  return s;
}

Eigen::MatrixXcd semi_discrete_operator(const Symbols& s, Vec2 a) {
  const Eigen::MatrixXcd rhs = a.x * s.Kx + a.y * s.Ky + s.S;
  return (s.M + s.M_supg).partialPivLu().solve(rhs);
}

}  // namespace stabfem
