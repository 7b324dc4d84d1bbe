#include "stabfem/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "stabfem/kernels.hpp"

namespace stabfem {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kBlowUpFactor = 1e6;

Vec2 node_position(const std::array<Vec2, 3>& v, const Barycentric& b) {
  return {b[0] * v[0].x + b[1] * v[1].x + b[2] * v[2].x,
          b[0] * v[0].y + b[1] * v[1].y + b[2] * v[2].y};
}

CsrMatrix to_csr(const SpMat& A) {
  CsrMatrix m;
  m.rows = static_cast<int>(A.rows());
  m.cols = static_cast<int>(A.cols());
  m.row_ptr.assign(A.outerIndexPtr(), A.outerIndexPtr() + A.outerSize() + 1);
  m.col.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());
  m.val.assign(A.valuePtr(), A.valuePtr() + A.nonZeros());
  return m;
}

/// Computes coefficients of interpolants on a subset of DOFs.
class Interpolator {
 public:
  Interpolator(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
               const std::vector<int>& targets)
      : element_(element), targets_(targets) {
    const int n = element.size();
    std::vector<int> owner(dofs.ndofs, -1), local(dofs.ndofs, -1);
    for (int c = 0; c < mesh.num_cells(); ++c)
      for (int i = 0; i < n; ++i) {
        const int d = dofs.cell_dofs[c][i];
        if (owner[d] < 0) {
          owner[d] = c;
          local[d] = i;
        }
      }
    std::vector<int> cell_slot(mesh.num_cells(), -1);
    for (int d : targets) {
      const int c = owner[d];
      if (cell_slot[c] < 0) {
        cell_slot[c] = static_cast<int>(cells_.size());
        cells_.push_back(c);
        const auto v = mesh.cell_vertices(c);
        for (int i = 0; i < n; ++i) points_.push_back(node_position(v, element.nodes[i]));
      }
      slot_.push_back(cell_slot[c]);
      local_.push_back(local[d]);
    }
  }

  /// out[k] = coefficient of the interpolant at targets[k].
  void apply(const std::function<double(Vec2)>& f, Eigen::VectorXd& out) const {
    const int n = element_.size();
    Eigen::VectorXd vals(static_cast<int>(points_.size()));
    for (std::size_t q = 0; q < points_.size(); ++q) vals[q] = f(points_[q]);
    out.resize(static_cast<int>(targets_.size()));
    for (std::size_t k = 0; k < targets_.size(); ++k) {
      const auto cell_vals = vals.segment(slot_[k] * n, n);
      out[k] = element_.is_nodal() ? cell_vals[local_[k]]
                                   : element_.nodal_to_coeff.row(local_[k]).dot(cell_vals);
    }
  }

  const std::vector<int>& targets() const { return targets_; }

 private:
  const ReferenceElement& element_;
  std::vector<int> targets_;
  std::vector<int> cells_;
  std::vector<Vec2> points_;
  std::vector<int> slot_, local_;
};

std::vector<int> all_dofs(int n) {
  std::vector<int> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return v;
}

double step_reference(const TriMesh& mesh, const ReferenceElement& element, HRef h) {
  if (h == HRef::NodeSpacing) return min_node_spacing(mesh, element);
  double size = mesh.cell_size;
  if (size <= 0.0) {
    size = std::numeric_limits<double>::infinity();
    for (int c = 0; c < mesh.num_cells(); ++c) size = std::min(size, mesh.diameter(c));
  }
  return size / element.degree;
}

/// Splits DOFs into free and constrained sets and factorizes the
/// free-free block of a mass matrix.
class MassSolver {
 public:
  MassSolver() = default;
  MassSolver(const SpMat& M, const std::vector<char>& constrained, bool diagonal, bool symmetric)
      : n_(static_cast<int>(M.rows())), diagonal_(diagonal) {
    index_.assign(n_, -1);
    for (int i = 0; i < n_; ++i)
      if (!constrained[i]) {
        index_[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      } else {
        fixed_.push_back(i);
      }
    if (diagonal_) {
      diag_ = M.diagonal();
      return;
    }
    std::vector<Eigen::Triplet<double>> ff, fc;
    std::vector<int> findex(n_, -1);
    for (std::size_t k = 0; k < fixed_.size(); ++k) findex[fixed_[k]] = static_cast<int>(k);
    for (int r = 0; r < M.outerSize(); ++r) {
      if (index_[r] < 0) continue;
      for (SpMat::InnerIterator it(M, r); it; ++it) {
        const int c = static_cast<int>(it.col());
        if (index_[c] >= 0)
          ff.emplace_back(index_[r], index_[c], it.value());
        else
          fc.emplace_back(index_[r], findex[c], it.value());
      }
    }
    const int nf = static_cast<int>(free_.size());
    Eigen::SparseMatrix<double> Mff(nf, nf);
    Mff.setFromTriplets(ff.begin(), ff.end());
    Mfc_.resize(nf, static_cast<int>(fixed_.size()));
    Mfc_.setFromTriplets(fc.begin(), fc.end());
    note_consistent_mass_factorization();
    if (symmetric) {
      ldlt_.compute(Mff);
      if (ldlt_.info() != Eigen::Success) throw NumericalError("mass factorization failed");
      use_lu_ = false;
    } else {
      lu_.analyzePattern(Mff);
      lu_.factorize(Mff);
      if (lu_.info() != Eigen::Success) throw NumericalError("mass factorization failed");
      use_lu_ = true;
    }
  }

  /// x_free = M_ff^-1 (b_free - M_fc x_fixed); x_fixed is read from x.
  void solve(const Eigen::VectorXd& b, Eigen::VectorXd& x) const {
    if (diagonal_) {
      for (int i : free_) x[i] = b[i] / diag_[i];
      return;
    }
    const int nf = static_cast<int>(free_.size());
    Eigen::VectorXd bf(nf), xc(static_cast<int>(fixed_.size()));
    for (int k = 0; k < nf; ++k) bf[k] = b[free_[k]];
    for (std::size_t k = 0; k < fixed_.size(); ++k) xc[k] = x[fixed_[k]];
    if (!fixed_.empty()) bf -= Mfc_ * xc;
    const Eigen::VectorXd xf = use_lu_ ? Eigen::VectorXd(lu_.solve(bf)) : Eigen::VectorXd(ldlt_.solve(bf));
    for (int k = 0; k < nf; ++k) x[free_[k]] = xf[k];
  }

  const std::vector<int>& fixed() const { return fixed_; }

 private:
  int n_ = 0;
  bool diagonal_ = false;
  bool use_lu_ = false;
  std::vector<int> free_, fixed_, index_;
  Eigen::VectorXd diag_;
  Eigen::SparseMatrix<double> Mfc_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu_;
};

void check_dec_support(const ReferenceElement& element, SchemeKind scheme,
                       const Eigen::VectorXd& lumped) {
  if (scheme != SchemeKind::DeC) return;
  if (element.family == Family::Basic && element.degree > 1)
    throw InvalidArgument("DeC needs positive basis integrals; " + element.name() +
                          " has non-positive ones");
  if (lumped.size() > 0 && lumped.minCoeff() <= 0.0)
    throw InvalidArgument("DeC needs a positive lumped mass");
}

/// Marches sys from 0 to t_final; fills timing, step counts and failures.
template <class Check>
void march(OdeSystem& sys, TimeStepper& stepper, Eigen::VectorXd& u, double dt, double t_final,
           int max_steps, RunReport& report, Check&& after_step) {
  double t = 0.0;
  const auto start = std::chrono::steady_clock::now();
  int step = 0;
  while (t < t_final * (1.0 - 1e-12)) {
    if (max_steps > 0 && step >= max_steps) break;
    const double h = std::min(dt, t_final - t);
    stepper.step(sys, t, h, u);
    t += h;
    ++step;
    if (!u.allFinite()) {
      report.ok = false;
      report.failure = "blow-up: non-finite state";
      report.failed_step = step;
      break;
    }
    if (!after_step(t, u)) {
      report.failed_step = step;
      break;
    }
  }
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  report.steps = step;
  report.t_reached = t;
  report.dt = dt;
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = n * sxx - sx * sx;
  return den != 0.0 ? (n * sxy - sx * sy) / den : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace

Eigen::VectorXd interpolate(const TriMesh& mesh, const DofMap& dofs,
                            const ReferenceElement& element, const ScalarField& f) {
  Interpolator in(mesh, dofs, element, all_dofs(dofs.ndofs));
  Eigen::VectorXd out;
  in.apply(f, out);
  return out;
}

Eigen::VectorXd values_at_dofs(const TriMesh& mesh, const DofMap& dofs,
                               const ReferenceElement& element, const Eigen::VectorXd& coeffs) {
  if (element.is_nodal()) return coeffs;
  const int n = element.size();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dofs.ndofs);
  std::vector<double> phi(n);
  for (int c = 0; c < mesh.num_cells(); ++c)
    for (int i = 0; i < n; ++i) {
      element.eval(element.nodes[i][1], element.nodes[i][2], phi.data());
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += phi[j] * coeffs[dofs.cell_dofs[c][j]];
      out[dofs.cell_dofs[c][i]] = v;
    }
  return out;
}

ErrorNorms error_norms(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                       const Eigen::VectorXd& coeffs, const ScalarField& exact, int rule_degree) {
  const QuadratureRule rule = triangle_rule(rule_degree > 0 ? rule_degree : 2 * element.degree + 4);
  const int n = element.size();
  const int nq = static_cast<int>(rule.size());
  const Eigen::MatrixXd phi = tabulate(element, rule).phi;
  ErrorNorms e;
  double l2 = 0.0;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const CellMap map(mesh.cell_vertices(c));
    const double area = map.area();
    for (int q = 0; q < nq; ++q) {
      double uh = 0.0;
      for (int j = 0; j < n; ++j) uh += phi(q, j) * coeffs[dofs.cell_dofs[c][j]];
      const double d = std::abs(uh - exact(map.to_physical(rule.points[q][0], rule.points[q][1])));
      e.l1 += rule.weights[q] * area * d;
      l2 += rule.weights[q] * area * d * d;
      e.linf = std::max(e.linf, d);
    }
  }
  e.l2 = std::sqrt(l2);
  return e;
}

std::string to_string(HRef h) { return h == HRef::NodeSpacing ? "node" : "cell"; }

HRef parse_href(std::string_view s) {
  if (s == "node" || s == "nodes" || s == "node-spacing") return HRef::NodeSpacing;
  if (s == "cell" || s == "dx") return HRef::CellSize;
  throw InvalidArgument("unknown step reference '" + std::string(s) + "' (allowed: node, cell)");
}

TriMesh make_mesh(const MeshSpec& spec) {
  if (!spec.file.empty()) {
    if (spec.periodic) throw InvalidArgument("periodic boundaries need a structured mesh");
    return read_mesh_file(spec.file);
  }
  if (spec.nx < 1 || spec.ny < 1) throw InvalidArgument("mesh needs nx, ny >= 1");
  if (!(spec.size.x > 0.0) || !(spec.size.y > 0.0)) throw InvalidArgument("empty mesh domain");
  return structured_mesh(spec.pattern, spec.nx, spec.ny, spec.size, spec.periodic, spec.origin);
}

Vec2 CosineWave::velocity() const { return {speed * std::cos(angle), speed * std::sin(angle)}; }

double CosineWave::value(Vec2 x, double t) const {
  const Vec2 a = velocity();
  const double r = std::cos(angle) * (x.x - a.x * t) + std::sin(angle) * (x.y - a.y * t);
  return amplitude * std::cos(2.0 * kPi * r);
}

double CosineWave::rate(Vec2 x, double t) const {
  const Vec2 a = velocity();
  const double r = std::cos(angle) * (x.x - a.x * t) + std::sin(angle) * (x.y - a.y * t);
  const double drdt = -(std::cos(angle) * a.x + std::sin(angle) * a.y);
  return -amplitude * 2.0 * kPi * std::sin(2.0 * kPi * r) * drdt;
}

namespace {

/// M_t du/dt = -(C u + P u) with Dirichlet data on boundary DOFs.
class AdvectionSystem : public OdeSystem {
 public:
  AdvectionSystem(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                  const AdvectionConfig& cfg)
      : cfg_(cfg), n_(dofs.ndofs) {
    sys_ = assemble_global(mesh, dofs, element, cfg.stab, cfg.wave.velocity());
    check_dec_support(element, cfg.scheme, sys_.lumped);
    conv_ = to_csr(sys_.convection);
    mass_ = to_csr(sys_.total_mass);
    const bool supg = cfg.stab.kind == Stabilization::SUPG && cfg.stab.delta != 0.0;
    const bool diagonal = sys_.mass_is_diagonal && !supg;
    std::vector<char> constrained(n_, 0);
    if (!mesh.periodic) constrained = dofs.on_boundary;
    std::vector<int> fixed;
    for (int i = 0; i < n_; ++i)
      if (constrained[i]) fixed.push_back(i);
    boundary_ = std::make_unique<Interpolator>(mesh, dofs, element, fixed);
    if (cfg.scheme != SchemeKind::DeC)
      solver_ = std::make_unique<MassSolver>(sys_.total_mass, constrained, diagonal, !supg);
    if (sys_.has_projection) {
      ptx_ = to_csr(sys_.proj_tx);
      pty_ = to_csr(sys_.proj_ty);
      kx_ = to_csr(sys_.kx);
      ky_ = to_csr(sys_.ky);
      projector_ = std::make_unique<MassSolver>(sys_.mass, std::vector<char>(n_, 0), sys_.mass_is_diagonal, true);
      gx_.resize(n_);
      gy_.resize(n_);
      wx_.resize(n_);
      wy_.resize(n_);
    }
    r_.resize(n_);
  }

  int size() const override { return n_; }

  void residual(double, const Eigen::VectorXd& u, Eigen::VectorXd& r) override {
    r.resize(n_);
    kernels::spmv(conv_, u.data(), r.data());
    if (sys_.has_projection) {
      kernels::spmv(kx_, u.data(), gx_.data());
      kernels::spmv(ky_, u.data(), gy_.data());
      projector_->solve(gx_, wx_);
      projector_->solve(gy_, wy_);
      kernels::spmv_add(ptx_, -1.0, wx_.data(), r.data());
      kernels::spmv_add(pty_, -1.0, wy_.data(), r.data());
    }
  }

  void rhs(double t, const Eigen::VectorXd& u, Eigen::VectorXd& dudt) override {
    residual(t, u, r_);
    r_ = -r_;
    dudt.resize(n_);
    const auto& fixed = boundary_->targets();
    if (!fixed.empty()) {
      boundary_->apply([&](Vec2 x) { return cfg_.wave.rate(x, t); }, bvals_);
      for (std::size_t k = 0; k < fixed.size(); ++k) dudt[fixed[k]] = bvals_[k];
    }
    solver_->solve(r_, dudt);
  }

  void apply_mass(const Eigen::VectorXd& v, Eigen::VectorXd& out) override {
    out.resize(n_);
    kernels::spmv(mass_, v.data(), out.data());
  }

  const Eigen::VectorXd& lumped_mass() const override { return sys_.lumped; }

  void impose(double t, Eigen::VectorXd& u) override {
    const auto& fixed = boundary_->targets();
    if (fixed.empty()) return;
    boundary_->apply([&](Vec2 x) { return cfg_.wave.value(x, t); }, bvals_);
    for (std::size_t k = 0; k < fixed.size(); ++k) u[fixed[k]] = bvals_[k];
  }

  const GlobalSystem& system() const { return sys_; }

 private:
  const AdvectionConfig& cfg_;
  int n_;
  GlobalSystem sys_;
  CsrMatrix conv_, mass_, ptx_, pty_, kx_, ky_;
  std::unique_ptr<MassSolver> solver_, projector_;
  std::unique_ptr<Interpolator> boundary_;
  Eigen::VectorXd r_, gx_, gy_, wx_, wy_, bvals_;
};

}  // namespace

RunReport solve_linear_advection(const AdvectionConfig& cfg) {
  if (!(cfg.cfl > 0.0)) throw InvalidArgument("cfl must be positive");
  if (!(cfg.t_final > 0.0)) throw InvalidArgument("final time must be positive");
  const ReferenceElement& element = reference_element(cfg.family, cfg.degree);
  const TriMesh mesh = make_mesh(cfg.mesh);
  const DofMap dofs = build_dof_map(mesh, element);
  const long factorizations_before = consistent_mass_factorizations();
  AdvectionSystem sys(mesh, dofs, element, cfg);

  RunReport report;
  report.dofs = dofs.ndofs;
  report.cells = mesh.num_cells();
  const double speed = norm(cfg.wave.velocity());
  const double dt = cfg.cfl * step_reference(mesh, element, cfg.h_ref) / (speed > 0 ? speed : 1.0);

  Eigen::VectorXd u = interpolate(mesh, dofs, element, [&](Vec2 x) { return cfg.wave.value(x, 0.0); });
  TimeStepper stepper(scheme_for_degree(cfg.scheme, cfg.degree), dofs.ndofs);
  Eigen::VectorXd Mu(dofs.ndofs);
  const SpMat& M = sys.system().mass;
  auto record = [&](const Eigen::VectorXd& v) {
    Mu = M * v;
    report.energy.push_back(v.dot(Mu));
    report.mass.push_back(Mu.sum());
  };
  if (cfg.record_history) record(u);
  const double bound = kBlowUpFactor * std::max(u.lpNorm<Eigen::Infinity>(), 1e-300);
  march(sys, stepper, u, dt, cfg.t_final, cfg.max_steps, report, [&](double, const Eigen::VectorXd& v) {
    if (cfg.record_history) record(v);
    if (v.lpNorm<Eigen::Infinity>() > bound) {
      report.ok = false;
      report.failure = "blow-up: amplitude grew beyond 1e6 times the initial one";
      return false;
    }
    return true;
  });
  report.mass_factorizations = consistent_mass_factorizations() - factorizations_before;
  report.state = u;
  if (report.ok) {
    const double t = report.t_reached;
    report.error = error_norms(mesh, dofs, element, u, [&](Vec2 x) { return cfg.wave.value(x, t); });
  }
  return report;
}

double VortexParams::omega() const { return kPi / r0; }

double VortexParams::gamma() const {
  return 12.0 * kPi * std::sqrt(g * dh) / (r0 * std::sqrt(315.0 * kPi * kPi - 2048.0));
}

double vortex_lambda(double r) {
  const double c = std::cos(r), s = std::sin(r);
  return 20.0 * c / 3.0 + 27.0 * c * c / 16.0 + 4.0 * c * c * c / 9.0 + c * c * c * c / 16.0 +
         20.0 * r * s / 3.0 + 35.0 * r * r / 16.0 + 27.0 * r * c * s / 8.0 +
         4.0 * r * c * c * s / 3.0 + r * c * c * c * s / 4.0;
}

std::array<double, 3> vortex_exact(Vec2 x, double t, const VortexParams& p) {
  const double ix = x.x - p.center.x - p.uc * t;
  const double iy = x.y - p.center.y - p.vc * t;
  const double w = p.omega();
  const double wr = w * std::hypot(ix, iy);
  if (wr > kPi) return {p.hc, p.uc, p.vc};
  const double G = p.gamma();
  const double f = G * (1.0 + std::cos(wr)) * (1.0 + std::cos(wr));
  return {p.hc + G * G / (p.g * w * w) * (vortex_lambda(wr) - vortex_lambda(kPi)), p.uc - f * iy,
          p.vc + f * ix};
}

namespace {

/// Shallow water with Dirichlet vortex data; state blocks (h, hu, hv).
class ShallowWaterSystem : public OdeSystem {
 public:
  ShallowWaterSystem(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                     const ShallowWaterConfig& cfg)
      : mesh_(mesh), dofs_(dofs), el_(element), cfg_(cfg), n_(dofs.ndofs) {
    tables_ = tabulate(element, element.quadrature);
    const int nc = mesh.num_cells();
    const int nb = element.size();
    const int nq = static_cast<int>(tables_.rule.size());
    gx_.resize(nc);
    gy_.resize(nc);
    wq_.resize(nc);
    lap_.resize(nc);
    cx_.resize(nc);
    cy_.resize(nc);
    for (int c = 0; c < nc; ++c) {
      const auto v = mesh.cell_vertices(c);
      const CellMap map(v);
      gx_[c].resize(nq, nb);
      gy_[c].resize(nq, nb);
      wq_[c].resize(nq);
      for (int q = 0; q < nq; ++q) {
        wq_[c][q] = tables_.rule.weights[q] * map.area();
        for (int i = 0; i < nb; ++i) {
          const Vec2 g = map.grad(tables_.dxi(q, i), tables_.deta(q, i));
          gx_[c](q, i) = g.x;
          gy_[c](q, i) = g.y;
        }
      }
      if (needs_laplace()) lap_[c] = local_matrix(v, tables_, Form::Laplace);
      if (cfg.stab.kind == Stabilization::OSS) {
        cx_[c] = local_matrix(v, tables_, Form::ConvX);
        cy_[c] = local_matrix(v, tables_, Form::ConvY);
      }
    }
    mass_ = assemble_form(mesh, dofs, element, Form::Mass);
    lumped_ = Eigen::VectorXd::Zero(3 * n_);
    Eigen::VectorXd rows = Eigen::VectorXd::Zero(n_);
    for (int k = 0; k < mass_.outerSize(); ++k)
      for (SpMat::InnerIterator it(mass_, k); it; ++it) rows[it.row()] += it.value();
    for (int c = 0; c < 3; ++c) lumped_.segment(c * n_, n_) = rows;
    check_dec_support(element, cfg.scheme, rows);
    diagonal_ = true;
    for (int k = 0; k < mass_.outerSize() && diagonal_; ++k)
      for (SpMat::InnerIterator it(mass_, k); it; ++it)
        if (it.row() != it.col() && std::abs(it.value()) > 1e-14 * std::abs(rows[it.row()])) {
          diagonal_ = false;
          break;
        }
    supg_ = cfg.stab.kind == Stabilization::SUPG && cfg.stab.delta != 0.0;
    constrained_ = dofs.on_boundary;
    std::vector<int> fixed;
    for (int i = 0; i < n_; ++i)
      if (constrained_[i]) fixed.push_back(i);
    boundary_ = std::make_unique<Interpolator>(mesh, dofs, element, fixed);
    if (!supg_ && cfg.scheme != SchemeKind::DeC)
      solver_ = std::make_unique<MassSolver>(mass_, constrained_, diagonal_, true);
    if (cfg.stab.kind == Stabilization::OSS)
      projector_ = std::make_unique<MassSolver>(mass_, std::vector<char>(n_, 0), diagonal_, true);
    if (cfg.stab.kind == Stabilization::CIP) {
      jumps_.reserve(dofs.faces.size());
      for (const Face& f : dofs.faces) jumps_.push_back(face_jump_matrix(mesh, element, f));
    }
    tau_.assign(nc, 0.0);
    tau_supg_.assign(nc, Eigen::Matrix3d::Zero());
    tau_face_.assign(dofs.faces.size(), 0.0);
  }

  int size() const override { return 3 * n_; }

  void begin_step(double /*t*/, const Eigen::VectorXd& u) override { update_tau(u); }

  void residual(double, const Eigen::VectorXd& U, Eigen::VectorXd& r) override {
    r.setZero(3 * n_);
    const int nb = el_.size();
    const int nq = static_cast<int>(tables_.rule.size());
    const double g = cfg_.vortex.g;
    Eigen::MatrixXd Uq(nq, 3), Ul(nb, 3);
    for (int c = 0; c < mesh_.num_cells(); ++c) {
      const auto& ids = dofs_.cell_dofs[c];
      for (int i = 0; i < nb; ++i)
        for (int k = 0; k < 3; ++k) Ul(i, k) = U[k * n_ + ids[i]];
      Uq.noalias() = tables_.phi * Ul;
      Eigen::MatrixXd Fx(nq, 3), Fy(nq, 3);
      for (int q = 0; q < nq; ++q) {
        const double h = Uq(q, 0), hu = Uq(q, 1), hv = Uq(q, 2);
        const double u = hu / h, v = hv / h, p = 0.5 * g * h * h;
        Fx.row(q) << hu, hu * u + p, hv * u;
        Fy.row(q) << hv, hu * v, hv * v + p;
      }
      for (int q = 0; q < nq; ++q) {
        Fx.row(q) *= wq_[c][q];
        Fy.row(q) *= wq_[c][q];
      }
      Eigen::MatrixXd R = -(gx_[c].transpose() * Fx + gy_[c].transpose() * Fy);
      if (supg_) R += supg_residual(c, Ul, Uq);
      if (needs_laplace()) {
        const double mu = cell_diffusion(c);
        if (mu != 0.0) R += mu * lap_[c] * Ul;
      }
      for (int i = 0; i < nb; ++i)
        for (int k = 0; k < 3; ++k) r[k * n_ + ids[i]] += R(i, k);
    }
    if (cfg_.stab.kind == Stabilization::OSS && cfg_.stab.delta != 0.0) add_projection(U, r);
    if (cfg_.stab.kind == Stabilization::CIP && cfg_.stab.delta != 0.0) add_jumps(U, r);
  }

  void rhs(double t, const Eigen::VectorXd& U, Eigen::VectorXd& dudt) override {
    residual(t, U, r_);
    r_ = -r_;
    dudt.resize(3 * n_);
    const auto& fixed = boundary_->targets();
    if (!fixed.empty()) {
      for (int k = 0; k < 3; ++k) {
        boundary_->apply([&](Vec2 x) { return rate(x, t, k); }, bvals_);
        for (std::size_t j = 0; j < fixed.size(); ++j) dudt[k * n_ + fixed[j]] = bvals_[j];
      }
    }
    if (supg_) {
      block_solver_->solve(r_, dudt);
      return;
    }
    for (int k = 0; k < 3; ++k) {
      Eigen::VectorXd b = r_.segment(k * n_, n_), x = dudt.segment(k * n_, n_);
      solver_->solve(b, x);
      dudt.segment(k * n_, n_) = x;
    }
  }

  void apply_mass(const Eigen::VectorXd& v, Eigen::VectorXd& out) override {
    out.resize(3 * n_);
    if (supg_) {
      out = block_mass_ * v;
      return;
    }
    for (int k = 0; k < 3; ++k) out.segment(k * n_, n_) = mass_ * v.segment(k * n_, n_);
  }

  const Eigen::VectorXd& lumped_mass() const override { return lumped_; }

  void impose(double t, Eigen::VectorXd& U) override {
    const auto& fixed = boundary_->targets();
    if (fixed.empty()) return;
    for (int k = 0; k < 3; ++k) {
      boundary_->apply([&](Vec2 x) { return conserved(x, t, k); }, bvals_);
      for (std::size_t j = 0; j < fixed.size(); ++j) U[k * n_ + fixed[j]] = bvals_[j];
    }
  }

  double conserved(Vec2 x, double t, int k) const {
    const auto s = vortex_exact(x, t, cfg_.vortex);
    return k == 0 ? s[0] : s[0] * s[k];
  }

  /// Max |u| + sqrt(g h) over the DOFs of a state.
  double max_wave_speed(const Eigen::VectorXd& U) const {
    const Eigen::VectorXd h = values_at_dofs(mesh_, dofs_, el_, U.segment(0, n_));
    const Eigen::VectorXd hu = values_at_dofs(mesh_, dofs_, el_, U.segment(n_, n_));
    const Eigen::VectorXd hv = values_at_dofs(mesh_, dofs_, el_, U.segment(2 * n_, n_));
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      s = std::max(s, std::hypot(hu[i], hv[i]) / h[i] + std::sqrt(cfg_.vortex.g * h[i]));
    return s;
  }

  const SpMat& mass() const { return mass_; }

 private:
  bool needs_laplace() const {
    return cfg_.stab.kind == Stabilization::OSS || cfg_.stab.viscosity != 0.0;
  }

  double cell_diffusion(int c) const {
    double mu = 0.0;
    if (cfg_.stab.kind == Stabilization::OSS) mu += tau_[c];
    if (cfg_.stab.viscosity != 0.0)
      mu += cfg_.stab.viscosity * std::pow(mesh_.diameter(c), el_.degree + 1);
    return mu;
  }

  double rate(Vec2 x, double t, int k) const {
    const double e = 1e-6;
    return (conserved(x, t + e, k) - conserved(x, t - e, k)) / (2.0 * e);
  }

  Eigen::Vector3d cell_average(int c, const Eigen::VectorXd& U) const {
    const auto& ids = dofs_.cell_dofs[c];
    Eigen::Vector3d avg = Eigen::Vector3d::Zero();
    for (int i = 0; i < el_.size(); ++i)
      for (int k = 0; k < 3; ++k) avg[k] += el_.weights[i] * U[k * n_ + ids[i]];
    return avg;
  }

  static void jacobians(const Eigen::Vector3d& s, double g, Eigen::Matrix3d& Ax,
                        Eigen::Matrix3d& Ay) {
    const double h = s[0], u = s[1] / h, v = s[2] / h, c2 = g * h;
    Ax << 0, 1, 0, c2 - u * u, 2 * u, 0, -u * v, v, u;
    Ay << 0, 0, 1, -u * v, v, u, c2 - v * v, 0, 2 * v;
  }

  void update_tau(const Eigen::VectorXd& U) {
    const double g = cfg_.vortex.g;
    const double delta = cfg_.stab.delta;
    averages_.resize(mesh_.num_cells());
    for (int c = 0; c < mesh_.num_cells(); ++c) averages_[c] = cell_average(c, U);
    for (int c = 0; c < mesh_.num_cells(); ++c) {
      const Eigen::Vector3d& s = averages_[c];
      const double speed = std::hypot(s[1], s[2]) / s[0] + std::sqrt(g * std::max(s[0], 0.0));
      const double hk = mesh_.diameter(c);
      if (cfg_.stab.kind == Stabilization::OSS) tau_[c] = delta * hk * speed;
      if (supg_) {
        Eigen::Matrix3d Ax, Ay;
        jacobians(s, g, Ax, Ay);
        const auto v = mesh_.cell_vertices(c);
        Eigen::Matrix3d sum = Eigen::Matrix3d::Zero();
        for (int j = 0; j < 3; ++j) {
          const Vec2 e = v[(j + 2) % 3] - v[(j + 1) % 3];
          const double len = norm(e);
          const Vec2 nrm{e.y / len, -e.x / len};
          const Eigen::Matrix3d A = nrm.x * Ax + nrm.y * Ay;
          Eigen::EigenSolver<Eigen::Matrix3d> es(A);
          const Eigen::Matrix3cd R = es.eigenvectors();
          const Eigen::Vector3cd lam = es.eigenvalues().cwiseAbs().cast<std::complex<double>>();
          sum += (R * lam.asDiagonal() * R.inverse()).real();
        }
        tau_supg_[c] = delta * hk * sum.inverse();
      }
    }
    if (cfg_.stab.kind == Stabilization::CIP) {
      for (std::size_t f = 0; f < dofs_.faces.size(); ++f) {
        const Face& face = dofs_.faces[f];
        const Eigen::Vector3d s = 0.5 * (averages_[face.cell[0]] + averages_[face.cell[1]]);
        const double speed = std::hypot(s[1], s[2]) / s[0] + std::sqrt(g * std::max(s[0], 0.0));
        const double hf = face_size(mesh_, face);
        tau_face_[f] = delta * hf * hf * speed;
      }
    }
    if (supg_) build_block_mass();
  }

  /// Streamline test of the flux divergence, sum_d (d_d phi_i) A_d^T tau (div F).
  Eigen::MatrixXd supg_residual(int c, const Eigen::MatrixXd& Ul, const Eigen::MatrixXd& Uq) const {
    const int nq = static_cast<int>(Uq.rows());
    const double g = cfg_.vortex.g;
    Eigen::Matrix3d Ax, Ay;
    jacobians(averages_[c], g, Ax, Ay);
    const Eigen::Matrix3d Tx = Ax.transpose() * tau_supg_[c];
    const Eigen::Matrix3d Ty = Ay.transpose() * tau_supg_[c];
    const Eigen::MatrixXd dUx = gx_[c] * Ul, dUy = gy_[c] * Ul;
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(Ul.rows(), 3);
    for (int q = 0; q < nq; ++q) {
      Eigen::Matrix3d Jx, Jy;
      jacobians(Uq.row(q).transpose(), g, Jx, Jy);
      const Eigen::Vector3d div = Jx * dUx.row(q).transpose() + Jy * dUy.row(q).transpose();
      const Eigen::Vector3d sx = wq_[c][q] * (Tx * div), sy = wq_[c][q] * (Ty * div);
      out += gx_[c].row(q).transpose() * sx.transpose() + gy_[c].row(q).transpose() * sy.transpose();
    }
    return out;
  }

  void build_block_mass() {
    const int nb = el_.size();
    const int nq = static_cast<int>(tables_.rule.size());
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < mass_.outerSize(); ++k)
      for (SpMat::InnerIterator it(mass_, k); it; ++it)
        for (int b = 0; b < 3; ++b)
          trip.emplace_back(b * n_ + it.row(), b * n_ + it.col(), it.value());
    const double g = cfg_.vortex.g;
    for (int c = 0; c < mesh_.num_cells(); ++c) {
      Eigen::Matrix3d Ax, Ay;
      jacobians(averages_[c], g, Ax, Ay);
      const Eigen::Matrix3d Tx = Ax.transpose() * tau_supg_[c];
      const Eigen::Matrix3d Ty = Ay.transpose() * tau_supg_[c];
      const auto& ids = dofs_.cell_dofs[c];
      for (int i = 0; i < nb; ++i)
        for (int j = 0; j < nb; ++j) {
          Eigen::Matrix3d B = Eigen::Matrix3d::Zero();
          for (int q = 0; q < nq; ++q)
            B += wq_[c][q] * tables_.phi(q, j) * (gx_[c](q, i) * Tx + gy_[c](q, i) * Ty);
          for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b)
              if (B(a, b) != 0.0) trip.emplace_back(a * n_ + ids[i], b * n_ + ids[j], B(a, b));
        }
    }
    block_mass_.resize(3 * n_, 3 * n_);
    block_mass_.setFromTriplets(trip.begin(), trip.end());
    block_mass_.makeCompressed();
    if (cfg_.scheme != SchemeKind::DeC) {
      std::vector<char> constrained(3 * n_, 0);
      for (int b = 0; b < 3; ++b)
        for (int i = 0; i < n_; ++i) constrained[b * n_ + i] = constrained_[i];
      block_solver_ = std::make_unique<MassSolver>(block_mass_, constrained, false, false);
    }
  }

  void add_projection(const Eigen::VectorXd& U, Eigen::VectorXd& r) {
    const int nb = el_.size();
    Eigen::VectorXd gx(n_), gy(n_), wx(n_), wy(n_);
    for (int k = 0; k < 3; ++k) {
      gx.setZero();
      gy.setZero();
      for (int c = 0; c < mesh_.num_cells(); ++c) {
        const auto& ids = dofs_.cell_dofs[c];
        Eigen::VectorXd ul(nb);
        for (int i = 0; i < nb; ++i) ul[i] = U[k * n_ + ids[i]];
        const Eigen::VectorXd ax = cx_[c] * ul, ay = cy_[c] * ul;
        for (int i = 0; i < nb; ++i) {
          gx[ids[i]] += ax[i];
          gy[ids[i]] += ay[i];
        }
      }
      projector_->solve(gx, wx);
      projector_->solve(gy, wy);
      for (int c = 0; c < mesh_.num_cells(); ++c) {
        const auto& ids = dofs_.cell_dofs[c];
        Eigen::VectorXd lx(nb), ly(nb);
        for (int i = 0; i < nb; ++i) {
          lx[i] = wx[ids[i]];
          ly[i] = wy[ids[i]];
        }
        const Eigen::VectorXd p = tau_[c] * (cx_[c].transpose() * lx + cy_[c].transpose() * ly);
        for (int i = 0; i < nb; ++i) r[k * n_ + ids[i]] -= p[i];
      }
    }
  }

  void add_jumps(const Eigen::VectorXd& U, Eigen::VectorXd& r) const {
    const int nb = el_.size();
    Eigen::VectorXd ul(2 * nb);
    for (std::size_t f = 0; f < dofs_.faces.size(); ++f) {
      const Face& face = dofs_.faces[f];
      for (int k = 0; k < 3; ++k) {
        for (int s = 0; s < 2; ++s)
          for (int i = 0; i < nb; ++i) ul[s * nb + i] = U[k * n_ + dofs_.cell_dofs[face.cell[s]][i]];
        const Eigen::VectorXd p = tau_face_[f] * (jumps_[f] * ul);
        for (int s = 0; s < 2; ++s)
          for (int i = 0; i < nb; ++i) r[k * n_ + dofs_.cell_dofs[face.cell[s]][i]] += p[s * nb + i];
      }
    }
  }

 private:
  const TriMesh& mesh_;
  const DofMap& dofs_;
  const ReferenceElement& el_;
  const ShallowWaterConfig& cfg_;
  int n_;
  ElementTables tables_;
  std::vector<Eigen::MatrixXd> gx_, gy_, lap_, cx_, cy_;
  std::vector<std::vector<double>> wq_;
  SpMat mass_;
  SpMat block_mass_;
  Eigen::VectorXd lumped_;
  bool diagonal_ = false;
  bool supg_ = false;
  std::vector<char> constrained_;
  std::unique_ptr<Interpolator> boundary_;
  std::unique_ptr<MassSolver> solver_, projector_, block_solver_;
  std::vector<Eigen::MatrixXd> jumps_;
  std::vector<double> tau_, tau_face_;
  std::vector<Eigen::Matrix3d> tau_supg_;
  std::vector<Eigen::Vector3d> averages_;
  Eigen::VectorXd r_, bvals_;
};

}  // namespace

RunReport solve_shallow_water(const ShallowWaterConfig& cfg) {
  if (!(cfg.cfl > 0.0)) throw InvalidArgument("cfl must be positive");
  if (!(cfg.t_final > 0.0)) throw InvalidArgument("final time must be positive");
  if (!(cfg.vortex.r0 > 0.0)) throw InvalidArgument("vortex radius must be positive");
  if (cfg.mesh.periodic) throw InvalidArgument("shallow water runs use Dirichlet boundaries");
  const ReferenceElement& element = reference_element(cfg.family, cfg.degree);
  const TriMesh mesh = make_mesh(cfg.mesh);
  const DofMap dofs = build_dof_map(mesh, element);
  const int n = dofs.ndofs;
  const long factorizations_before = consistent_mass_factorizations();
  ShallowWaterSystem sys(mesh, dofs, element, cfg);

  Eigen::VectorXd U(3 * n);
  for (int k = 0; k < 3; ++k)
    U.segment(k * n, n) =
        interpolate(mesh, dofs, element, [&](Vec2 x) { return sys.conserved(x, 0.0, k); });

  RunReport report;
  report.dofs = n;
  report.cells = mesh.num_cells();
  const double dt = cfg.cfl * step_reference(mesh, element, cfg.h_ref) / sys.max_wave_speed(U);
  TimeStepper stepper(scheme_for_degree(cfg.scheme, cfg.degree), 3 * n);


  march(sys, stepper, U, dt, cfg.t_final, cfg.max_steps, report,
        [&](double, const Eigen::VectorXd& v) {
          const Eigen::VectorXd h = values_at_dofs(mesh, dofs, element, v.segment(0, n));
          if (h.minCoeff() <= 0.0) {
            report.ok = false;
            report.failure = "positivity loss: h <= 0";
            return false;
          }
          return true;
        });
  report.mass_factorizations = consistent_mass_factorizations() - factorizations_before;
  report.state = U;
  if (report.ok) {
    const double t = report.t_reached;
    for (int k = 0; k < 3; ++k)
      report.components.push_back(error_norms(mesh, dofs, element, U.segment(k * n, n),
                                               [&](Vec2 x) { return sys.conserved(x, t, k); }));
    report.error = report.components.front();
  }
  return report;
}

std::vector<double> degree_matched_sizes(const std::vector<double>& dx1, int degree) {
  std::vector<double> out(dx1);
  for (double& d : out) d *= degree;
  return out;
}

namespace {

template <class Config, class Solve>
ConvergenceResult run_levels(const Config& base, const std::vector<double>& dx, Solve&& solve) {
  if (dx.size() < 3) throw InvalidArgument("a convergence study needs at least 3 levels");
  ConvergenceResult res;
  std::vector<double> lx, ly;
  for (double d : dx) {
    if (!(d > 0.0)) throw InvalidArgument("mesh sizes must be positive");
    Config cfg = base;
    cfg.mesh.nx = std::max(1, static_cast<int>(std::lround(cfg.mesh.size.x / d)));
    cfg.mesh.ny = std::max(1, static_cast<int>(std::lround(cfg.mesh.size.y / d)));
    ConvergenceLevel level;
    level.dx = d;
    level.nx = cfg.mesh.nx;
    level.ny = cfg.mesh.ny;
    level.report = solve(cfg);
    level.order = std::numeric_limits<double>::quiet_NaN();
    if (!level.report.ok) res.ok = false;
    if (!res.levels.empty()) {
      const auto& prev = res.levels.back();
      level.order = std::log(prev.report.error.l2 / level.report.error.l2) / std::log(prev.dx / d);
      if (level.report.error.l2 > prev.report.error.l2) res.monotone = false;
    }
    if (level.report.ok) {
      lx.push_back(std::log(d));
      ly.push_back(std::log(level.report.error.l2));
    }
    res.levels.push_back(std::move(level));
  }
  res.fitted_order = lx.size() >= 2 ? least_squares_slope(lx, ly)
                                      : std::numeric_limits<double>::quiet_NaN();
  return res;
}

}  // namespace

ConvergenceResult convergence_study(const AdvectionConfig& base, const std::vector<double>& dx) {
  return run_levels(base, dx, [](const AdvectionConfig& c) { return solve_linear_advection(c); });
}

ConvergenceResult convergence_study(const ShallowWaterConfig& base, const std::vector<double>& dx) {
  return run_levels(base, dx, [](const ShallowWaterConfig& c) { return solve_shallow_water(c); });
}

void write_convergence_csv(std::ostream& out, const ConvergenceResult& r, bool timing) {
  out << "level,dx,dofs,L1,L2,Linf,order,seconds,steps,ok\n";
  out.precision(10);
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    out << i << ',' << l.dx << ',' << l.report.dofs << ',' << l.report.error.l1 << ','
        << l.report.error.l2 << ',' << l.report.error.linf << ',' << l.order << ','
        << (timing ? l.report.seconds : 0.0) << ',' << l.report.steps << ',' << (l.report.ok ? 1 : 0) << '\n';
  }
}

void write_field_csv(std::ostream& out, const std::vector<Vec2>& coords,
                     const std::vector<std::string>& names,
                     const std::vector<Eigen::VectorXd>& fields) {
  out << "x,y";
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  out.precision(12);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    out << coords[i].x << ',' << coords[i].y;
    for (const auto& f : fields) out << ',' << f[static_cast<int>(i)];
    out << '\n';
  }
}

}  // namespace stabfem
