#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "stabfem/common.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/reference_element.hpp"

namespace stabfem {

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Bilinear forms on one cell; (i, j) = (test, trial).
enum class Form {
  Mass,    ///< phi_i phi_j
  ConvX,   ///< phi_i d_x phi_j
  ConvY,   ///< phi_i d_y phi_j
  DiffXX,  ///< d_x phi_i d_x phi_j
  DiffXY,  ///< d_x phi_i d_y phi_j
  DiffYY,  ///< d_y phi_i d_y phi_j
  Laplace  ///< grad phi_i . grad phi_j
};

struct StabilizationConfig {
  Stabilization kind = Stabilization::None;
  double delta = 0.0;
  /// Coefficient c of the viscosity mu_K = c h_K^(p+1).
  double viscosity = 0.0;
  /// Fixed length in the tau scalings; <= 0 uses h_K per cell and h_f per face.
  double length = 0.0;
};

/// Basis values and reference gradients tabulated on a rule.
struct ElementTables {
  QuadratureRule rule;
  Eigen::MatrixXd phi;  ///< (q, i)
  Eigen::MatrixXd dxi;
  Eigen::MatrixXd deta;
};

ElementTables tabulate(const ReferenceElement& element, const QuadratureRule& rule);

/// Physical gradients on a cell from reference gradients.
struct CellMap {
  explicit CellMap(const std::array<Vec2, 3>& v);
  Vec2 origin;
  double j00, j01, j10, j11, det;
  double area() const { return 0.5 * det; }
  Vec2 grad(double gxi, double geta) const {
    return {(j11 * gxi - j10 * geta) / det, (-j01 * gxi + j00 * geta) / det};
  }
  Vec2 to_physical(double xi, double eta) const {
    return {origin.x + j00 * xi + j01 * eta, origin.y + j10 * xi + j11 * eta};
  }
  std::array<double, 2> to_reference(Vec2 p) const;
};

Eigen::MatrixXd local_matrix(const std::array<Vec2, 3>& v, const ElementTables& tables, Form form);

/// Jump of normal derivatives across one face: rows/cols are the local DOFs
/// of face.cell[0] followed by those of face.cell[1].
Eigen::MatrixXd face_jump_matrix(const TriMesh& mesh, const ReferenceElement& element,
                                 const Face& face);

/// Real operator on a periodic unit stored per relative shift s; the symbol
/// is sum_s A_s exp(i s.theta).
struct ShiftedOperator {
  int n = 0;
  std::map<Shift, Eigen::MatrixXd> blocks;

  void add(int row, Shift srow, int col, Shift scol, double v);
  void axpy(double a, const ShiftedOperator& other);
  Eigen::MatrixXcd symbol(double theta_x, double theta_y) const;
};

/// Cell form with optional per-cell weights (empty = 1).
SpMat assemble_form(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                    Form form, const std::vector<double>& cell_weights = {});
ShiftedOperator assemble_form_shifted(const TriMesh& mesh, const DofMap& dofs,
                                      const ReferenceElement& element, Form form,
                                      const std::vector<double>& cell_weights = {});
/// Interior-face penalty of normal-derivative jumps with per-face weights.
SpMat assemble_jumps(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                     const std::vector<double>& face_weights = {});
ShiftedOperator assemble_jumps_shifted(const TriMesh& mesh, const DofMap& dofs,
                                       const ReferenceElement& element,
                                       const std::vector<double>& face_weights = {});

/// Semi-discrete linear advection M_t du/dt = -(a.K + S) u - P u, where the
/// OSS projection term P u = -sum_d Gtau_d^T M^-1 G_d u.
struct GlobalSystem {
  SpMat mass;
  /// Galerkin mass plus the SUPG mass term.
  SpMat total_mass;
  SpMat kx, ky;
  /// a.K plus all stabilization and viscosity terms without projection.
  SpMat convection;
  bool has_projection = false;
  SpMat proj_tx, proj_ty;  ///< tau-weighted transposed gradients for OSS
  /// Row sums of the Galerkin mass (lumped mass).
  Eigen::VectorXd lumped;
  bool mass_is_diagonal = false;
};

GlobalSystem assemble_global(const TriMesh& mesh, const DofMap& dofs,
                             const ReferenceElement& element, const StabilizationConfig& stab,
                             Vec2 velocity);

/// Operators of one periodic unit, independent of velocity and parameters.
struct UnitOperators {
  ShiftedOperator mass, kx, ky, dxx, dxy, dyy, jump, viscous;
};

UnitOperators build_unit_operators(const PeriodicUnit& unit, const ReferenceElement& element);

/// Fourier symbols at one wavenumber; S includes every stabilization term.
struct Symbols {
  Eigen::MatrixXcd M;       ///< Galerkin mass
  Eigen::MatrixXcd M_supg;  ///< SUPG mass contribution (zero otherwise)
  Eigen::MatrixXcd Kx, Ky;
  Eigen::MatrixXcd S;
};

Symbols assemble_symbols(const UnitOperators& ops, const PeriodicUnit& unit,
                         const StabilizationConfig& stab, Vec2 velocity, double theta_x,
                         double theta_y);

/// (M + M_supg)^-1 (a_x Kx + a_y Ky + S), so that dU/dt = -A U.
Eigen::MatrixXcd semi_discrete_operator(const Symbols& s, Vec2 velocity);

/// Counts factorizations of consistent (non-diagonal) mass matrices.
long consistent_mass_factorizations();
void note_consistent_mass_factorization();

}  // namespace stabfem
