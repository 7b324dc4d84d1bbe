#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "stabfem/assembly.hpp"
#include "stabfem/common.hpp"
#include "stabfem/mesh.hpp"
#include "stabfem/reference_element.hpp"
#include "stabfem/timeint.hpp"

namespace stabfem {

using ScalarField = std::function<double(Vec2)>;

struct ErrorNorms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
};

/// Nodal values, or Bernstein coefficients, of the interpolant of f.
Eigen::VectorXd interpolate(const TriMesh& mesh, const DofMap& dofs,
                            const ReferenceElement& element, const ScalarField& f);

/// Discrete field evaluated at the DOF positions.
Eigen::VectorXd values_at_dofs(const TriMesh& mesh, const DofMap& dofs,
                               const ReferenceElement& element, const Eigen::VectorXd& coeffs);

/// Norms of u_h - exact by a cellwise rule of the given degree (0 picks 2p + 4).
ErrorNorms error_norms(const TriMesh& mesh, const DofMap& dofs, const ReferenceElement& element,
                       const Eigen::VectorXd& coeffs, const ScalarField& exact,
                       int rule_degree = 0);

enum class HRef {
  NodeSpacing,  ///< smallest distance between distinct nodes
  CellSize      ///< structured square side (or smallest diameter) over p
};

std::string to_string(HRef h);
HRef parse_href(std::string_view s);

struct MeshSpec {
  Pattern pattern = Pattern::X;
  int nx = 20;
  int ny = 10;
  Vec2 origin{0.0, 0.0};
  Vec2 size{2.0, 1.0};
  /// Mesh file; overrides the structured pattern when set.
  std::string file;
  bool periodic = false;
};

TriMesh make_mesh(const MeshSpec& spec);

/// u0 = A cos(2 pi r), r = cos(angle) x + sin(angle) y, advected by
/// a = speed (cos(angle), sin(angle)).
struct CosineWave {
  double angle = 0.0;
  double amplitude = 0.1;
  double speed = 1.0;

  Vec2 velocity() const;
  double value(Vec2 x, double t) const;
  double rate(Vec2 x, double t) const;
};

struct AdvectionConfig {
  Family family = Family::Basic;
  int degree = 1;
  MeshSpec mesh;
  StabilizationConfig stab;
  SchemeKind scheme = SchemeKind::SSPRK;
  double cfl = 0.1;
  double t_final = 2.0;
  CosineWave wave{3.0 * 3.14159265358979323846 / 16.0, 0.1, 1.0};
  HRef h_ref = HRef::NodeSpacing;
  /// Stop after this many steps (0 = run to t_final).
  int max_steps = 0;
  /// Record u.M.u and sum(M u) after every step.
  bool record_history = false;
};

struct RunReport {
  bool ok = true;
  std::string failure;
  int failed_step = -1;
  int dofs = 0;
  int cells = 0;
  int steps = 0;
  double dt = 0.0;
  double t_reached = 0.0;
  /// Wall-clock of the time loop.
  double seconds = 0.0;
  ErrorNorms error;
  /// Per conserved variable for shallow water.
  std::vector<ErrorNorms> components;
  std::vector<double> energy, mass;
  /// Final coefficients (SW: h block, then hu, then hv).
  Eigen::VectorXd state;
  long mass_factorizations = 0;

  double seconds_per_step() const { return steps > 0 ? seconds / steps : 0.0; }
};

RunReport solve_linear_advection(const AdvectionConfig& config);

struct VortexParams {
  Vec2 center{0.5, 0.5};
  double hc = 1.0;
  double uc = 0.6;
  double vc = 0.0;
  double r0 = 0.45;
  double dh = 0.1;
  double g = 9.81;

  double omega() const;
  double gamma() const;
};

/// Radial profile of the compact vortex depth.
double vortex_lambda(double r);

/// (h, u, v) of the travelling vortex.
std::array<double, 3> vortex_exact(Vec2 x, double t, const VortexParams& params);

struct ShallowWaterConfig {
  Family family = Family::Basic;
  int degree = 1;
  MeshSpec mesh;
  StabilizationConfig stab;
  SchemeKind scheme = SchemeKind::SSPRK;
  double cfl = 0.1;
  double t_final = 1.0;
  VortexParams vortex;
  HRef h_ref = HRef::NodeSpacing;
  int max_steps = 0;
};

RunReport solve_shallow_water(const ShallowWaterConfig& config);

struct ConvergenceLevel {
  double dx = 0.0;
  int nx = 0, ny = 0;
  RunReport report;
  /// log2 ratio of L2 errors with the previous level (NaN on the first).
  double order = 0.0;
};

struct ConvergenceResult {
  std::vector<ConvergenceLevel> levels;
  /// Least-squares slope of log L2 against log dx.
  double fitted_order = 0.0;
  bool monotone = true;
  bool ok = true;
};

/// Square sizes dx1 * p, as used to equalize DOF counts across degrees.
std::vector<double> degree_matched_sizes(const std::vector<double>& dx1, int degree);

ConvergenceResult convergence_study(const AdvectionConfig& base, const std::vector<double>& dx);
ConvergenceResult convergence_study(const ShallowWaterConfig& base, const std::vector<double>& dx);

/// With timing = false the seconds column is written as 0 so reruns compare byte-identical.
void write_convergence_csv(std::ostream& out, const ConvergenceResult& result, bool timing = true);
/// DOF coordinates and field values, one column per field.
void write_field_csv(std::ostream& out, const std::vector<Vec2>& coords,
                     const std::vector<std::string>& names,
                     const std::vector<Eigen::VectorXd>& fields);

}  // namespace stabfem
